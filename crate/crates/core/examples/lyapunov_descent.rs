//! Along the auction path the Lyapunov function L(p) = sum of indirect
//! utilities + p.b falls at every raise, and the raised set is the smallest
//! set X minimizing L(p + X).
//!
//! cargo run --example lyapunov_descent

use walras_flow::auction::{price_raising, SolveOptions};
use walras_flow::verify::{lyapunov, overdemand, steepest_descent_bruteforce, Budget};
use walras_flow::Instance;

fn main() {
    let market = Instance::new(
        vec![("alpha", 1), ("beta", 1), ("gamma", 4)],
        vec![("j1", 4), ("j2", 2), ("j3", 3)],
        vec![vec![3, 2, 1], vec![0, 2, 0], vec![4, 4, 2]],
    )
    .unwrap();
    let (p, trace) = price_raising(&market, &SolveOptions::traced()).unwrap();
    for r in &trace.iterations {
        let best = steepest_descent_bruteforce(&market, &r.prices, &Budget::default()).unwrap();
        let excess = overdemand(&market, &r.prices, &r.raised_set).unwrap()
            - r.raised_set.iter().map(|&i| market.supply(i)).sum::<i64>();
        println!(
            "L{:?} = {:>3}  cut {:?}  minimizer {:?}  excess demand {excess}",
            r.prices.as_slice(),
            lyapunov(&market, &r.prices),
            r.raised_set,
            best
        );
    }
    println!(
        "L{:?} = {:>3}  (Walrasian)",
        p.as_slice(),
        lyapunov(&market, &p)
    );
}
