//! Runs the unit-step auction with a trace and prints every price raise,
//! then the final prices and allocation.
//!
//! cargo run --example ascending_auction [instance.json]

use walras_flow::auction::{solve, SolveOptions};
use walras_flow::Instance;

fn main() {
    let market = match std::env::args().nth(1) {
        Some(path) => Instance::from_json(&std::fs::read_to_string(path).unwrap()).unwrap(),
        None => Instance::new(
            vec![("alpha", 3), ("beta", 2)],
            vec![("1", 2), ("2", 2), ("3", 1)],
            vec![vec![3, 1], vec![2, 0], vec![0, 1]],
        )
        .unwrap(),
    };
    let eq = solve(&market, &SolveOptions::traced()).unwrap();
    for (k, r) in eq.trace.iterations.iter().enumerate() {
        let raised: Vec<_> = r.raised_set.iter().map(|&i| market.object_id(i)).collect();
        println!(
            "iteration {k}: prices {:?}, flow {}/{}, raise {raised:?} by {}",
            r.prices.as_slice(),
            r.flow_value,
            r.source_capacity,
            r.step
        );
    }
    println!("final prices {:?}", eq.prices.to_id_map(&market));
    println!("allocation   {:?}", eq.allocation.to_id_map(&market));
    println!(
        "{} iterations, {} tier queries",
        eq.trace.outer_iterations(),
        eq.trace.oracle_calls
    );
}
