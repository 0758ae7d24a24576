//! Builds the demand network for a two-buyer, three-object market at zero
//! prices, prints each buyer's tiers, the arcs with a max flow, and the
//! left-most min cut whose objects are overdemanded.
//!
//! cargo run --example demand_network

use walras_flow::flow::{build_demand_network, leftmost_min_cut, max_flow};
use walras_flow::tiers::tier_reports;
use walras_flow::{Instance, Prices};

fn main() {
    let market = Instance::new(
        vec![("alpha", 1), ("beta", 1), ("gamma", 4)],
        vec![("j1", 4), ("j2", 2)],
        vec![vec![3, 2, 1], vec![0, 2, 0]],
    )
    .unwrap();
    let prices = Prices::zeros(3);
    let reports = tier_reports(&market, &prices);
    for (j, r) in reports.iter().enumerate() {
        let names = |s: &std::collections::BTreeSet<usize>| {
            s.iter().map(|&i| market.object_id(i)).collect::<Vec<_>>()
        };
        println!(
            "{}: strong {:?} ({}), marginal {:?} ({}), zero {:?} ({})",
            market.buyer_id(j),
            names(&r.omega1),
            r.d1,
            names(&r.omega2),
            r.d2,
            names(&r.omega3),
            r.d3
        );
    }

    let network = build_demand_network(&market, &prices, &reports);
    let flow = max_flow(&network, None).unwrap();
    print!("{}", network.dump(&market, Some(&flow)));
    println!(
        "flow {} of source capacity {}",
        flow.value(),
        network.source_capacity()
    );

    let cut = leftmost_min_cut(&network, &flow).unwrap();
    let nodes: Vec<_> = cut
        .node_set
        .iter()
        .map(|&n| network.node_name(&market, n))
        .collect();
    println!("left-most min cut {nodes:?}, capacity {}", cut.capacity);
}
