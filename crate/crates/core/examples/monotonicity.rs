//! More demand or less supply never lowers the buyer-optimal prices of the
//! objects still on sale, though the jump can be as large as the valuations.
//!
//! cargo run --example monotonicity [samples] [seed]

use walras_flow::generate::RandomLimits;
use walras_flow::verify::{monotonicity_case, monotonicity_sweep, Perturbation};
use walras_flow::Instance;

fn main() {
    let m = 5;
    let base = Instance::new(
        vec![("a", 2), ("b", 2)],
        vec![("x", 2), ("y", 2)],
        vec![vec![m, m], vec![m, m]],
    )
    .unwrap();
    let more = base.with_quantities(vec![2, 2], vec![3, 2]).unwrap();
    let case =
        monotonicity_case(0, base, more, Perturbation::Demand { buyer: 0, delta: 1 }).unwrap();
    println!(
        "one more unit demanded: {:?} -> {:?}",
        case.p_old.as_slice(),
        case.p_new.as_slice()
    );

    let mut args = std::env::args().skip(1);
    let samples = args.next().map_or(200, |s| s.parse().unwrap());
    let seed = args.next().map_or(1, |s| s.parse().unwrap());
    let cases = monotonicity_sweep(seed, samples, &RandomLimits::default()).unwrap();
    let passed = cases.iter().filter(|c| c.passed()).count();
    let moved = cases.iter().filter(|c| c.p_old != c.p_new).count();
    println!(
        "{passed}/{} random perturbations monotone, {moved} changed prices",
        cases.len()
    );
}
