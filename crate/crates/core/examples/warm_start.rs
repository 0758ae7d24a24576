//! Warm starts in two senses: carrying the max flow from one price vector to
//! the next inside the auction, and restarting a perturbed market from the
//! old equilibrium prices.
//!
//! cargo run --example warm_start

use walras_flow::auction::{price_raising, SolveOptions};
use walras_flow::{Instance, Prices};

fn main() {
    let market = Instance::new(
        vec![("a", 3), ("b", 2), ("c", 2)],
        vec![("x", 3), ("y", 2), ("z", 3)],
        vec![vec![9, 7, 2], vec![8, 8, 1], vec![6, 3, 5]],
    )
    .unwrap();

    let (warm, trace) = price_raising(&market, &SolveOptions::traced()).unwrap();
    let cold_opts = SolveOptions {
        warm_start: false,
        ..SolveOptions::default()
    };
    let (cold, _) = price_raising(&market, &cold_opts).unwrap();
    println!("warm {:?} cold {:?}", warm.as_slice(), cold.as_slice());
    for r in &trace.iterations {
        println!(
            "  at {:?}: flow {}/{} carried over as {:?}/{}, dropped {:?}",
            r.prices.as_slice(),
            r.flow_value,
            r.source_capacity,
            r.carried_value,
            r.next_source_capacity,
            r.dropped
        );
    }

    // Buyer y wants one more unit: restart from the old prices.
    let bigger = market
        .with_quantities(vec![3, 2, 2], vec![3, 3, 3])
        .unwrap();
    let restart = SolveOptions {
        start_prices: Some(Prices::new(&bigger, warm.as_slice().to_vec()).unwrap()),
        ..SolveOptions::default()
    };
    let (again, t) = price_raising(&bigger, &restart).unwrap();
    let (fresh, f) = price_raising(&bigger, &SolveOptions::default()).unwrap();
    println!(
        "perturbed: restart {:?} in {} raises, from zero {:?} in {} raises",
        again.as_slice(),
        t.raises,
        fresh.as_slice(),
        f.raises
    );
}
