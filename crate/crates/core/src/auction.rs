//! Ascending auctions that raise prices on the objects of the left-most
//! min cut until the demand network saturates its source, and extraction of
//! a market-clearing allocation at the final prices.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::flow::{
    build_allocation_network, build_demand_network, flow_update, leftmost_min_cut, max_flow,
    CutResult, FlowError, FlowNetwork, IntegralFlow, Node,
};
use crate::model::{balance_instance, Allocation, DummyKind, Instance, ModelError, Prices};
use crate::tiers::tier_reports;

#[derive(Debug, Error)]
pub enum AuctionError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error("price arithmetic overflowed")]
    Overflow,
    #[error("step length needs a non-competitive price vector and its left-most cut")]
    StepPrecondition,
    #[error("allocation network flow {value} does not saturate the source capacity {capacity}")]
    Unsaturated { value: i64, capacity: i64 },
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum StepMode {
    /// Raise the cut objects by one per iteration.
    #[default]
    Unit,
    /// Raise the cut objects as far as the left-most cut keeps its objects.
    Adapted,
}

#[derive(Clone, Debug)]
pub struct SolveOptions {
    pub mode: StepMode,
    /// Carry the previous flow over to the next network instead of solving from zero.
    pub warm_start: bool,
    /// Must not exceed the minimum competitive prices; all-zero if absent.
    pub start_prices: Option<Prices>,
    /// Keep per-iteration records.
    pub trace: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            mode: StepMode::Unit,
            warm_start: true,
            start_prices: None,
            trace: false,
        }
    }
}

impl SolveOptions {
    pub fn traced() -> Self {
        SolveOptions {
            trace: true,
            ..Self::default()
        }
    }
}

/// One price raise.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IterationRecord {
    /// Prices before the raise.
    pub prices: Prices,
    pub raised_set: BTreeSet<usize>,
    pub cut_nodes: BTreeSet<Node>,
    pub flow_value: i64,
    pub source_capacity: i64,
    pub step: i64,
    /// Source capacity of the network at the raised prices.
    pub next_source_capacity: i64,
    /// Value of the carried-over flow in the next network, before augmenting.
    pub carried_value: Option<i64>,
    /// Units the flow update could not reroute, by `(buyer, object)`.
    pub dropped: BTreeMap<(usize, usize), i64>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AuctionTrace {
    /// Empty unless tracing was requested.
    pub iterations: Vec<IterationRecord>,
    pub final_prices: Prices,
    /// Number of price raises.
    pub raises: usize,
    pub oracle_calls: u64,
}

impl AuctionTrace {
    /// Main-loop passes: every raise plus the final competitiveness check.
    pub fn outer_iterations(&self) -> usize {
        self.raises + 1
    }
}

#[derive(Clone, Debug)]
pub struct Equilibrium {
    pub prices: Prices,
    pub allocation: Allocation,
    pub trace: AuctionTrace,
}

fn demand_network(instance: &Instance, prices: &Prices, oracle_calls: &mut u64) -> FlowNetwork {
    *oracle_calls += instance.num_buyers() as u64;
    build_demand_network(instance, prices, &tier_reports(instance, prices))
}

/// Runs the ascending auction and returns the minimum competitive prices.
pub fn price_raising(
    instance: &Instance,
    options: &SolveOptions,
) -> Result<(Prices, AuctionTrace), AuctionError> {
    let mut prices = match &options.start_prices {
        Some(p) => Prices::new(instance, p.as_slice().to_vec())?,
        None => Prices::zeros(instance.num_objects()),
    };
    let ceiling = instance
        .max_value()
        .checked_add(1)
        .ok_or(AuctionError::Overflow)?;
    let mut trace = AuctionTrace::default();
    let mut network = demand_network(instance, &prices, &mut trace.oracle_calls);
    let mut flow = max_flow(&network, None)?;

    loop {
        let capacity = network.source_capacity();
        if flow.value() == capacity {
            break;
        }
        let cut = leftmost_min_cut(&network, &flow)?;
        if cut.objects.is_empty() {
            return Err(AuctionError::Internal(
                "non-competitive prices with an object-free left-most cut".into(),
            ));
        }
        let step = match options.mode {
            StepMode::Unit => 1,
            StepMode::Adapted => {
                step_length(instance, &network, &flow, &cut, &mut trace.oracle_calls)?
            }
        };
        let next_prices = prices
            .raised(&cut.objects, step)
            .ok_or(AuctionError::Overflow)?;
        if cut.objects.iter().any(|&i| next_prices.get(i) > ceiling) {
            return Err(AuctionError::Internal(format!(
                "price raised above the largest valuation plus one ({ceiling})"
            )));
        }
        let next_network = demand_network(instance, &next_prices, &mut trace.oracle_calls);
        let (next_flow, carried_value, dropped) = if options.warm_start {
            let update = flow_update(&network, &flow, &next_prices, &next_network)?;
            let carried = update.flow.value();
            (
                max_flow(&next_network, Some(&update.flow))?,
                Some(carried),
                update.dropped,
            )
        } else {
            (max_flow(&next_network, None)?, None, BTreeMap::new())
        };
        if options.trace {
            trace.iterations.push(IterationRecord {
                prices: prices.clone(),
                raised_set: cut.objects.clone(),
                cut_nodes: cut.node_set.clone(),
                flow_value: flow.value(),
                source_capacity: capacity,
                step,
                next_source_capacity: next_network.source_capacity(),
                carried_value,
                dropped,
            });
        }
        trace.raises += 1;
        prices = next_prices;
        network = next_network;
        flow = next_flow;
    }
    trace.final_prices = prices.clone();
    Ok((prices, trace))
}

/// Largest step `α ≥ 1` such that raising the cut objects `I` by `α` leaves
/// `I` as the object set of the left-most min cut.
///
/// Binary search with the invariant "cut objects unchanged at `lo`, changed
/// at `hi`". At `hi = v_max - min_{i∈I} p(i)` nobody has positive payoff on
/// `I`, so the cut must have changed there. Once the cut objects change they
/// do not come back, which makes the predicate monotone.
pub fn adapted_step_length(
    instance: &Instance,
    network: &FlowNetwork,
    flow: &IntegralFlow,
    cut: &CutResult,
) -> Result<i64, AuctionError> {
    let mut calls = 0;
    step_length(instance, network, flow, cut, &mut calls)
}

fn step_length(
    instance: &Instance,
    network: &FlowNetwork,
    flow: &IntegralFlow,
    cut: &CutResult,
    oracle_calls: &mut u64,
) -> Result<i64, AuctionError> {
    if flow.value() >= network.source_capacity() || cut.objects.is_empty() {
        return Err(AuctionError::StepPrecondition);
    }
    if leftmost_min_cut(network, flow)?.objects != cut.objects {
        return Err(AuctionError::StepPrecondition);
    }
    let prices = network.prices();
    let lowest = cut
        .objects
        .iter()
        .map(|&i| prices.get(i))
        .min()
        .unwrap_or(0);
    let mut hi = instance.max_value() - lowest;
    let keeps_cut = |alpha: i64, calls: &mut u64| -> Result<bool, AuctionError> {
        let probe = prices
            .raised(&cut.objects, alpha)
            .ok_or(AuctionError::Overflow)?;
        let net = demand_network(instance, &probe, calls);
        let f = max_flow(&net, None)?;
        Ok(leftmost_min_cut(&net, &f)?.objects == cut.objects)
    };
    if hi <= 1 || !keeps_cut(1, oracle_calls)? {
        return Ok(1);
    }
    let mut lo = 1;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if keeps_cut(mid, oracle_calls)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Stable allocation at the minimum competitive prices that sells
/// `min(Σb, Σd)` units and sells out every positively priced object.
pub fn allocate(instance: &Instance, prices: &Prices) -> Result<Allocation, AuctionError> {
    let prices = Prices::new(instance, prices.as_slice().to_vec())?;
    let (balanced, info) = balance_instance(instance);
    let mut balanced_prices = prices;
    if info.kind == DummyKind::Object {
        balanced_prices.push(0);
    }
    let network = build_allocation_network(&balanced, &balanced_prices)?;
    let flow = max_flow(&network, None)?;
    let capacity = network.source_capacity();
    if flow.value() != capacity {
        return Err(AuctionError::Unsaturated {
            value: flow.value(),
            capacity,
        });
    }
    let mut allocation = Allocation::empty(instance.num_objects(), instance.num_buyers());
    for a in network.arcs() {
        if let (Node::Buyer(j, _), Node::Object(i)) = (a.from, a.to) {
            if i < instance.num_objects() && j < instance.num_buyers() {
                let units = flow.on(&network, a.from, a.to);
                allocation.set(i, j, allocation.get(i, j) + units);
            }
        }
    }
    Ok(allocation)
}

/// Buyer-optimal Walrasian equilibrium.
pub fn solve(instance: &Instance, options: &SolveOptions) -> Result<Equilibrium, AuctionError> {
    let (prices, trace) = price_raising(instance, options)?;
    let allocation = allocate(instance, &prices)?;
    Ok(Equilibrium {
        prices,
        allocation,
        trace,
    })
}
