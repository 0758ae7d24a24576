//! Compares unit steps with adapted steps, which raise the same cut as far as
//! it stays the left-most cut. Prices agree; adapted steps need fewer rounds.
//!
//! cargo run --example adapted_steps

use walras_flow::auction::{price_raising, SolveOptions, StepMode};
use walras_flow::Instance;

fn main() {
    let market = Instance::new(
        vec![("a", 2), ("b", 1)],
        vec![("x", 2), ("y", 2), ("z", 1)],
        vec![vec![40, 12], vec![35, 30], vec![50, 0]],
    )
    .unwrap();
    for mode in [StepMode::Unit, StepMode::Adapted] {
        let opts = SolveOptions {
            mode,
            ..SolveOptions::traced()
        };
        let (prices, trace) = price_raising(&market, &opts).unwrap();
        let steps: Vec<i64> = trace.iterations.iter().map(|r| r.step).collect();
        let longest = steps.iter().max().copied().unwrap_or(0);
        println!(
            "{mode:?}: prices {:?} after {} iterations (longest step {longest}), {} tier queries",
            prices.as_slice(),
            trace.outer_iterations(),
            trace.oracle_calls
        );
    }
}
