//! Validates a solved equilibrium and shows what the checker reports for a
//! hand-made allocation that is not stable.
//!
//! cargo run --example equilibrium_check

use walras_flow::verify::{check_equilibrium, hall_check, run_checks, Budget, CheckStatus};
use walras_flow::{solve, Allocation, Instance, Prices, SolveOptions};

fn main() {
    let market = Instance::new(
        vec![("alpha", 3), ("beta", 2)],
        vec![("1", 2), ("2", 2), ("3", 1)],
        vec![vec![3, 1], vec![2, 0], vec![0, 1]],
    )
    .unwrap();
    let eq = solve(&market, &SolveOptions::default()).unwrap();
    println!(
        "{:?}",
        check_equilibrium(&market, &eq.prices, &eq.allocation).unwrap()
    );

    // Everyone gets beta at zero prices: feasible but nobody is happy.
    let bad = Allocation::from_matrix(vec![vec![0, 0, 0], vec![1, 0, 1]]);
    println!(
        "{:?}",
        check_equilibrium(&market, &Prices::zeros(2), &bad).unwrap()
    );
    println!(
        "{:?}",
        hall_check(&market, &Prices::zeros(2), &Budget::default()).unwrap()
    );

    for c in run_checks(&market, &SolveOptions::default(), &Budget::default())
        .unwrap()
        .checks
    {
        let mark = if c.status == CheckStatus::Passed {
            "ok"
        } else {
            "!!"
        };
        println!("{mark} {} {}", c.name, c.detail);
    }
}
