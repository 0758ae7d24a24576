//! Compares the auction with brute-force enumeration of every price vector in
//! {0, ..., v_max + 1}^objects on seeded random markets.
//!
//! cargo run --release --example brute_force_oracle [count] [seed]

use walras_flow::auction::{price_raising, SolveOptions};
use walras_flow::generate::RandomLimits;
use walras_flow::verify::{min_competitive_bruteforce, suite_instance, Budget};

fn main() {
    let mut args = std::env::args().skip(1);
    let count: usize = args.next().map_or(500, |s| s.parse().unwrap());
    let seed: u64 = args.next().map_or(7, |s| s.parse().unwrap());
    let limits = RandomLimits::default();
    let mut nonzero = 0;
    for k in 0..count {
        let market = suite_instance(seed, k, &limits);
        let (auction, _) = price_raising(&market, &SolveOptions::default()).unwrap();
        let brute = min_competitive_bruteforce(&market, &Budget::default()).unwrap();
        assert_eq!(auction, brute, "instance {k}: {}", market.to_json());
        nonzero += usize::from(auction.as_slice().iter().any(|&p| p > 0));
    }
    println!("{count} markets agree ({nonzero} with some positive price)");
}
