//! Buyer-optimal Walrasian prices for multi-unit markets where each buyer
//! wants at most `d_j` units in total and values every unit of object `i` at
//! `v_ij`.
//!
//! The ascending auction in [`auction`] keeps a max flow in a demand network
//! built from each buyer's preference tiers, raises prices on the objects of
//! the left-most min cut, and stops when the flow saturates the source. At
//! that point the prices are the minimum competitive prices, and
//! [`auction::allocate`] extracts a stable allocation that clears the market.
//!
//! ```
//! use walras_flow::{solve, Instance, SolveOptions};
//!
//! let market = Instance::new(
//!     vec![("alpha", 1), ("beta", 1)],
//!     vec![("ann", 1), ("bob", 1)],
//!     vec![vec![4, 1], vec![3, 0]],
//! )
//! .unwrap();
//! let eq = solve(&market, &SolveOptions::default()).unwrap();
//! // At 2 both buyers still strictly prefer alpha; at 3 ann is indifferent.
//! assert_eq!(eq.prices.as_slice(), &[3, 0]);
//! ```

pub mod auction;
pub mod cli;
pub mod flow;
pub mod generate;
pub mod model;
pub mod tiers;
pub mod verify;

pub use auction::{allocate, price_raising, solve, Equilibrium, SolveOptions, StepMode};
pub use model::{Allocation, Instance, ModelError, Prices};
