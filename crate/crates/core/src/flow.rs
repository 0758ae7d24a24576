//! Auxiliary flow networks, an exact integral max-flow solver, left-most
//! min cuts and the warm-start flow update between auction iterations.
//!
//! Networks are layered: source -> buyer tier nodes -> objects -> sink.
//! Every buyer owns three tier nodes (strong, marginal, zero-payoff) whether
//! or not they carry arcs, so node identity is stable across price vectors.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt::Write as _;

use thiserror::Error;

use crate::model::{Instance, Prices};
use crate::tiers::{tier_reports, TierReport};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FlowError {
    #[error("warm-start flow is infeasible: {0}")]
    InfeasibleWarmStart(String),
    #[error("flow is not maximum: the sink is reachable in the residual network")]
    NotMaximum,
    #[error("flow does not belong to this network")]
    NetworkMismatch,
    #[error("allocation network needs a balanced instance (supply {supply}, demand {demand})")]
    Unbalanced { supply: i64, demand: i64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("updated flow is infeasible: {0}")]
    InfeasibleUpdate(String),
}

/// Which tier of a buyer a node stands for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Tier {
    /// Objects with payoff above the marginal payoff.
    Strong,
    /// Objects with exactly the marginal payoff.
    Marginal,
    /// Zero-payoff objects; only present in the allocation network.
    Zero,
}

impl Tier {
    fn offset(self) -> usize {
        match self {
            Tier::Strong => 0,
            Tier::Marginal => 1,
            Tier::Zero => 2,
        }
    }

    fn suffix(self) -> &'static str {
        match self {
            Tier::Strong => "'",
            Tier::Marginal => "''",
            Tier::Zero => "'''",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Node {
    Source,
    Sink,
    Buyer(usize, Tier),
    Object(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NetworkKind {
    /// `G(p)`: strong and marginal tiers only.
    Demand,
    /// `H(p)`: additionally routes zero-payoff demand.
    Allocation,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Arc {
    pub from: Node,
    pub to: Node,
    pub capacity: i64,
}

#[derive(Clone, Debug)]
pub struct FlowNetwork {
    kind: NetworkKind,
    num_buyers: usize,
    num_objects: usize,
    prices: Prices,
    reports: Vec<TierReport>,
    arcs: Vec<Arc>,
    lookup: HashMap<(Node, Node), usize>,
}

impl FlowNetwork {
    fn new(
        kind: NetworkKind,
        instance: &Instance,
        prices: &Prices,
        reports: Vec<TierReport>,
    ) -> Self {
        let mut arcs = Vec::new();
        let mut push = |from, to, capacity: i64| {
            if capacity > 0 {
                arcs.push(Arc { from, to, capacity });
            }
        };
        let tiers: &[Tier] = match kind {
            NetworkKind::Demand => &[Tier::Strong, Tier::Marginal],
            NetworkKind::Allocation => &[Tier::Strong, Tier::Marginal, Tier::Zero],
        };
        for (j, r) in reports.iter().enumerate() {
            for &tier in tiers {
                let d = match tier {
                    Tier::Strong => r.d1,
                    Tier::Marginal => r.d2,
                    Tier::Zero => r.d3,
                };
                push(Node::Source, Node::Buyer(j, tier), d);
            }
        }
        for (j, r) in reports.iter().enumerate() {
            for &tier in tiers {
                let set = match tier {
                    Tier::Strong => &r.omega1,
                    Tier::Marginal => &r.omega2,
                    Tier::Zero => &r.omega3,
                };
                for &i in set {
                    let b = instance.supply(i);
                    let cap = if tier == Tier::Marginal {
                        b.min(r.d2)
                    } else {
                        b
                    };
                    push(Node::Buyer(j, tier), Node::Object(i), cap);
                }
            }
        }
        for i in 0..instance.num_objects() {
            push(Node::Object(i), Node::Sink, instance.supply(i));
        }
        let lookup = arcs
            .iter()
            .enumerate()
            .map(|(k, a)| ((a.from, a.to), k))
            .collect();
        FlowNetwork {
            kind,
            num_buyers: instance.num_buyers(),
            num_objects: instance.num_objects(),
            prices: prices.clone(),
            reports,
            arcs,
            lookup,
        }
    }

    pub fn kind(&self) -> NetworkKind {
        self.kind
    }

    pub fn prices(&self) -> &Prices {
        &self.prices
    }

    pub fn reports(&self) -> &[TierReport] {
        &self.reports
    }

    /// Arcs with positive capacity, in canonical order.
    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn arc_index(&self, from: Node, to: Node) -> Option<usize> {
        self.lookup.get(&(from, to)).copied()
    }

    pub fn capacity(&self, from: Node, to: Node) -> i64 {
        self.arc_index(from, to)
            .map_or(0, |k| self.arcs[k].capacity)
    }

    /// Total capacity of the source-leaving arcs, `cap(s)`.
    pub fn source_capacity(&self) -> i64 {
        self.arcs
            .iter()
            .filter(|a| a.from == Node::Source)
            .map(|a| a.capacity)
            .sum()
    }

    pub fn node_count(&self) -> usize {
        2 + 3 * self.num_buyers + self.num_objects
    }

    fn index(&self, node: Node) -> usize {
        match node {
            Node::Source => 0,
            Node::Sink => 1,
            Node::Buyer(j, t) => 2 + 3 * j + t.offset(),
            Node::Object(i) => 2 + 3 * self.num_buyers + i,
        }
    }

    fn node_at(&self, index: usize) -> Node {
        match index {
            0 => Node::Source,
            1 => Node::Sink,
            k if k < 2 + 3 * self.num_buyers => {
                let j = (k - 2) / 3;
                let tier = [Tier::Strong, Tier::Marginal, Tier::Zero][(k - 2) % 3];
                Node::Buyer(j, tier)
            }
            k => Node::Object(k - 2 - 3 * self.num_buyers),
        }
    }

    pub fn node_name(&self, instance: &Instance, node: Node) -> String {
        match node {
            Node::Source => "s".into(),
            Node::Sink => "t".into(),
            Node::Buyer(j, t) => format!("{}{}", instance.buyer_id(j), t.suffix()),
            Node::Object(i) => instance.object_id(i).to_string(),
        }
    }

    /// One line per arc, `from -> to [cap, flow]`, in canonical order.
    pub fn dump(&self, instance: &Instance, flow: Option<&IntegralFlow>) -> String {
        let mut out = String::new();
        for (k, a) in self.arcs.iter().enumerate() {
            let f = flow.map_or(0, |f| f.flow[k]);
            writeln!(
                out,
                "{} -> {} [{}, {}]",
                self.node_name(instance, a.from),
                self.node_name(instance, a.to),
                a.capacity,
                f
            )
            .unwrap();
        }
        out
    }

    /// Residual adjacency: for each node, `(arc, forward)` in arc order.
    fn residual_adjacency(&self) -> Vec<Vec<(usize, bool)>> {
        let mut adj = vec![Vec::new(); self.node_count()];
        for (k, a) in self.arcs.iter().enumerate() {
            adj[self.index(a.from)].push((k, true));
            adj[self.index(a.to)].push((k, false));
        }
        adj
    }

    /// BFS over arcs with positive residual capacity. Returns the parent arc
    /// of every reached node (the source maps to itself).
    fn residual_bfs(&self, adj: &[Vec<(usize, bool)>], flow: &[i64]) -> Vec<Option<(usize, bool)>> {
        let s = self.index(Node::Source);
        let mut parent: Vec<Option<(usize, bool)>> = vec![None; self.node_count()];
        let mut seen = vec![false; self.node_count()];
        seen[s] = true;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &(k, forward) in &adj[u] {
                let a = &self.arcs[k];
                let (v, residual) = if forward {
                    (self.index(a.to), a.capacity - flow[k])
                } else {
                    (self.index(a.from), flow[k])
                };
                if residual > 0 && !seen[v] {
                    seen[v] = true;
                    parent[v] = Some((k, forward));
                    queue.push_back(v);
                }
            }
        }
        parent[s] = Some((usize::MAX, true));
        parent
    }
}

/// Demand network `G(p)` from one tier report per buyer.
pub fn build_demand_network(
    instance: &Instance,
    prices: &Prices,
    reports: &[TierReport],
) -> FlowNetwork {
    assert_eq!(
        reports.len(),
        instance.num_buyers(),
        "one tier report per buyer"
    );
    FlowNetwork::new(NetworkKind::Demand, instance, prices, reports.to_vec())
}

/// Allocation network `H(p)` for a balanced instance.
pub fn build_allocation_network(
    instance: &Instance,
    prices: &Prices,
) -> Result<FlowNetwork, FlowError> {
    let (supply, demand) = (instance.total_supply(), instance.total_demand());
    if supply != demand {
        return Err(FlowError::Unbalanced { supply, demand });
    }
    let reports = tier_reports(instance, prices);
    Ok(FlowNetwork::new(
        NetworkKind::Allocation,
        instance,
        prices,
        reports,
    ))
}

/// An integral flow, one entry per arc of the network it was computed on.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntegralFlow {
    flow: Vec<i64>,
    value: i64,
}

impl IntegralFlow {
    pub fn zero(network: &FlowNetwork) -> Self {
        IntegralFlow {
            flow: vec![0; network.arcs.len()],
            value: 0,
        }
    }

    /// Flow on every arc, aligned with [`FlowNetwork::arcs`].
    pub fn arc_flows(&self) -> &[i64] {
        &self.flow
    }

    pub fn value(&self) -> i64 {
        self.value
    }

    pub fn on(&self, network: &FlowNetwork, from: Node, to: Node) -> i64 {
        network.arc_index(from, to).map_or(0, |k| self.flow[k])
    }

    /// Capacity obedience, conservation at inner nodes, and a value equal to
    /// the net outflow of the source.
    pub fn check_feasible(&self, network: &FlowNetwork) -> Result<(), String> {
        if self.flow.len() != network.arcs.len() {
            return Err(format!(
                "{} arc flows for {} arcs",
                self.flow.len(),
                network.arcs.len()
            ));
        }
        let mut balance = vec![0i64; network.node_count()];
        for (a, &f) in network.arcs.iter().zip(&self.flow) {
            if f < 0 || f > a.capacity {
                return Err(format!(
                    "flow {f} on {:?}->{:?} outside [0, {}]",
                    a.from, a.to, a.capacity
                ));
            }
            balance[network.index(a.from)] -= f;
            balance[network.index(a.to)] += f;
        }
        for (k, &b) in balance.iter().enumerate().skip(2) {
            if b != 0 {
                return Err(format!("conservation violated at {:?}", network.node_at(k)));
            }
        }
        if -balance[0] != self.value {
            return Err(format!(
                "value {} differs from source outflow {}",
                self.value, -balance[0]
            ));
        }
        Ok(())
    }

    fn from_arc_flows(network: &FlowNetwork, flow: Vec<i64>) -> Self {
        let value = network
            .arcs
            .iter()
            .zip(&flow)
            .filter(|(a, _)| a.from == Node::Source)
            .map(|(_, f)| f)
            .sum();
        IntegralFlow { flow, value }
    }
}

/// Maximum flow by shortest augmenting paths, optionally starting from a
/// feasible flow on the same network.
pub fn max_flow(
    network: &FlowNetwork,
    warm_start: Option<&IntegralFlow>,
) -> Result<IntegralFlow, FlowError> {
    let mut flow = match warm_start {
        Some(f) => {
            f.check_feasible(network)
                .map_err(FlowError::InfeasibleWarmStart)?;
            f.flow.clone()
        }
        None => vec![0; network.arcs.len()],
    };
    let adj = network.residual_adjacency();
    let t = network.index(Node::Sink);
    loop {
        let parent = network.residual_bfs(&adj, &flow);
        if parent[t].is_none() {
            break;
        }
        let mut path = Vec::new();
        let mut v = t;
        let mut bottleneck = i64::MAX;
        while v != network.index(Node::Source) {
            let (k, forward) = parent[v].expect("node on augmenting path");
            let a = &network.arcs[k];
            let residual = if forward {
                a.capacity - flow[k]
            } else {
                flow[k]
            };
            bottleneck = bottleneck.min(residual);
            path.push((k, forward));
            v = network.index(if forward { a.from } else { a.to });
        }
        for (k, forward) in path {
            if forward {
                flow[k] += bottleneck;
            } else {
                flow[k] -= bottleneck;
            }
        }
    }
    Ok(IntegralFlow::from_arc_flows(network, flow))
}

/// The inclusion-wise minimal minimum cut.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CutResult {
    /// Source side of the cut.
    pub node_set: BTreeSet<Node>,
    /// Objects on the source side.
    pub objects: BTreeSet<usize>,
    pub capacity: i64,
}

/// Source side = everything reachable from `s` in the residual network of a
/// maximum flow.
pub fn leftmost_min_cut(
    network: &FlowNetwork,
    flow: &IntegralFlow,
) -> Result<CutResult, FlowError> {
    if flow.flow.len() != network.arcs.len() {
        return Err(FlowError::NetworkMismatch);
    }
    let adj = network.residual_adjacency();
    let parent = network.residual_bfs(&adj, &flow.flow);
    if parent[network.index(Node::Sink)].is_some() {
        return Err(FlowError::NotMaximum);
    }
    let node_set: BTreeSet<Node> = (0..network.node_count())
        .filter(|&k| parent[k].is_some())
        .map(|k| network.node_at(k))
        .collect();
    let objects = node_set
        .iter()
        .filter_map(|n| match n {
            Node::Object(i) => Some(*i),
            _ => None,
        })
        .collect();
    let capacity = network
        .arcs
        .iter()
        .filter(|a| node_set.contains(&a.from) && !node_set.contains(&a.to))
        .map(|a| a.capacity)
        .sum();
    Ok(CutResult {
        node_set,
        objects,
        capacity,
    })
}

/// Two left-most cuts are the same for the auction iff they hold the same objects.
pub fn cut_objects_equal(a: &CutResult, b: &CutResult) -> bool {
    a.objects == b.objects
}

/// A flow carried over to the next demand network.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlowUpdate {
    pub flow: IntegralFlow,
    /// Units that could not be rerouted, keyed by `(buyer, object)`.
    pub dropped: BTreeMap<(usize, usize), i64>,
}

/// Carries a maximum flow of `G(p)` over to `G(p + α·χ_I)` where `I` is the
/// object set of the left-most min cut of the old network.
///
/// The units buyer `j` received of object `i` are routed through `j`'s strong
/// tier if `i` is strongly wanted at the new prices, else through the
/// marginal tier if `i` is marginal, else dropped.
pub fn flow_update(
    old_network: &FlowNetwork,
    old_flow: &IntegralFlow,
    new_prices: &Prices,
    new_network: &FlowNetwork,
) -> Result<FlowUpdate, FlowError> {
    if old_network.kind != NetworkKind::Demand || new_network.kind != NetworkKind::Demand {
        return Err(FlowError::Precondition(
            "flow updates run between demand networks".into(),
        ));
    }
    if new_network.prices != *new_prices
        || old_network.num_buyers != new_network.num_buyers
        || old_network.num_objects != new_network.num_objects
    {
        return Err(FlowError::NetworkMismatch);
    }
    let cut = leftmost_min_cut(old_network, old_flow)?;
    let mut step = None;
    for (i, (&old, &new)) in old_network
        .prices
        .as_slice()
        .iter()
        .zip(new_prices.as_slice())
        .enumerate()
    {
        let diff = new - old;
        let raised = cut.objects.contains(&i);
        match (raised, diff) {
            (false, 0) => {}
            (true, d) if d >= 1 && step.is_none_or(|s| s == d) => step = Some(d),
            _ => {
                return Err(FlowError::Precondition(format!(
                    "new prices are not old prices plus a uniform step on the cut objects \
                     (object {i} changed by {diff})"
                )))
            }
        }
    }
    if step.is_none() {
        return Err(FlowError::Precondition(
            "left-most cut holds no objects".into(),
        ));
    }

    let mut flow = vec![0; new_network.arcs.len()];
    let mut dropped = BTreeMap::new();
    let mut add = |k: usize, units: i64| flow[k] += units;
    for j in 0..old_network.num_buyers {
        for i in 0..old_network.num_objects {
            let object = Node::Object(i);
            let units = old_flow.on(old_network, Node::Buyer(j, Tier::Strong), object)
                + old_flow.on(old_network, Node::Buyer(j, Tier::Marginal), object);
            if units == 0 {
                continue;
            }
            let route = [Tier::Strong, Tier::Marginal].into_iter().find_map(|tier| {
                let tier_node = Node::Buyer(j, tier);
                new_network.arc_index(tier_node, object).map(|mid| {
                    (
                        new_network.arc_index(Node::Source, tier_node),
                        mid,
                        new_network.arc_index(object, Node::Sink),
                    )
                })
            });
            match route {
                Some((Some(src), mid, Some(sink))) => {
                    add(src, units);
                    add(mid, units);
                    add(sink, units);
                }
                Some(_) => {
                    return Err(FlowError::InfeasibleUpdate(format!(
                        "no source or sink arc on the path of buyer {j}, object {i}"
                    )))
                }
                None => {
                    *dropped.entry((j, i)).or_insert(0) += units;
                }
            }
        }
    }
    let flow = IntegralFlow::from_arc_flows(new_network, flow);
    flow.check_feasible(new_network)
        .map_err(FlowError::InfeasibleUpdate)?;
    Ok(FlowUpdate { flow, dropped })
}
