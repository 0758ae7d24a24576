//! One buyer wants two units of two different objects. Solving the market
//! directly gives prices (0, 0); splitting the buyer into unit-demand copies
//! makes the copies bid against each other and pushes alpha to 4.
//!
//! cargo run --example duplication_gap

use walras_flow::model::duplicate_instance;
use walras_flow::{solve, Instance, SolveOptions};

fn main() {
    let market = Instance::new(
        vec![("alpha", 1), ("beta", 1)],
        vec![("1", 2)],
        vec![vec![5, 1]],
    )
    .unwrap();
    let direct = solve(&market, &SolveOptions::default()).unwrap();
    println!("direct prices:     {:?}", direct.prices.to_id_map(&market));
    println!(
        "direct allocation: {:?}",
        direct.allocation.to_id_map(&market)
    );

    let copies = duplicate_instance(&market);
    let dup = solve(&copies, &SolveOptions::default()).unwrap();
    println!("duplicated prices: {:?}", dup.prices.to_id_map(&copies));
    println!(
        "duplicated allocation: {:?}",
        dup.allocation.to_id_map(&copies)
    );
}
