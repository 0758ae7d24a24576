//! Independent oracles and checkers: overdemand and the Hall condition,
//! brute-force competitive prices, the Lyapunov function, equilibrium
//! validation and monotonicity experiments.
//!
//! Everything here is deliberately naive. The oracles enumerate subsets,
//! price grids or allocations and refuse to run past a [`Budget`].

use std::collections::BTreeSet;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::auction::{price_raising, AuctionError, SolveOptions};
use crate::flow::{build_demand_network, max_flow, FlowError};
use crate::generate::{random_instance, RandomLimits};
use crate::model::{Allocation, Instance, ModelError, Prices};
use crate::tiers::{indirect_utility, payoff, tier_reports};

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("{what} needs {needed} evaluations but the budget allows {limit}")]
    BudgetExceeded {
        what: &'static str,
        needed: u128,
        limit: u128,
    },
    #[error("object index {0} is out of range")]
    UnknownObject(usize),
    #[error(
        "the component-wise minimum {0:?} of all competitive price vectors is not competitive"
    )]
    MinimumNotCompetitive(Vec<i64>),
    #[error("minimizers {0:?} and {1:?} are both inclusion-minimal")]
    AmbiguousMinimizer(Vec<usize>, Vec<usize>),
    #[error("not a valid perturbation pair: {0}")]
    InvalidPerturbation(String),
    #[error("allocation shape does not match the instance")]
    AllocationShape,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Auction(#[from] AuctionError),
}

/// Hard limits on enumeration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget {
    /// Subset enumeration covers at most `2^max_subset_objects` sets.
    pub max_subset_objects: usize,
    /// Price grids and allocation searches visit at most this many points.
    pub max_price_vectors: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_subset_objects: 16,
            max_price_vectors: 1_000_000,
        }
    }
}

impl Budget {
    fn subsets(&self, what: &'static str, m: usize) -> Result<(), VerifyError> {
        if m > self.max_subset_objects {
            return Err(VerifyError::BudgetExceeded {
                what,
                needed: 1u128 << m.min(127),
                limit: 1u128 << self.max_subset_objects.min(127),
            });
        }
        Ok(())
    }
}

fn check_prices(instance: &Instance, prices: &Prices) -> Result<(), VerifyError> {
    Prices::new(instance, prices.as_slice().to_vec())?;
    Ok(())
}

fn subsets(m: usize) -> impl Iterator<Item = BTreeSet<usize>> {
    (0u64..1 << m).map(move |mask| (0..m).filter(|&i| mask >> i & 1 == 1).collect())
}

fn supply_of(instance: &Instance, set: &BTreeSet<usize>) -> i64 {
    set.iter().map(|&i| instance.supply(i)).sum()
}

/// Units the tier nodes must take from `set` because their arcs to objects
/// outside it cannot carry their whole demand.
pub fn overdemand(
    instance: &Instance,
    prices: &Prices,
    set: &BTreeSet<usize>,
) -> Result<i64, VerifyError> {
    check_prices(instance, prices)?;
    if let Some(&i) = set.iter().find(|&&i| i >= instance.num_objects()) {
        return Err(VerifyError::UnknownObject(i));
    }
    let mut total = 0;
    for report in tier_reports(instance, prices) {
        let tiers = [
            (report.d1, &report.omega1, i64::MAX),
            (report.d2, &report.omega2, report.d2),
        ];
        for (demand, objects, arc_cap) in tiers {
            let cap = |i: usize| instance.supply(i).min(arc_cap);
            let adjacent = objects.iter().any(|&i| set.contains(&i) && cap(i) > 0);
            if !adjacent {
                continue;
            }
            let outside: i64 = objects
                .iter()
                .filter(|i| !set.contains(i))
                .map(|&i| cap(i))
                .sum();
            total += (demand - outside).max(0);
        }
    }
    Ok(total)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HallResult {
    pub competitive: bool,
    /// A maximally overdemanded set when the condition fails.
    pub violating: Option<BTreeSet<usize>>,
}

/// Checks `Σ_{i∈I} b_i ≥ d_p(I)` for every object set `I`.
///
/// On failure the violating set maximizes `d_p(I) - Σ_{i∈I} b_i`; ties go to
/// inclusion-minimal sets, then to the lexicographically smallest.
pub fn hall_check(
    instance: &Instance,
    prices: &Prices,
    budget: &Budget,
) -> Result<HallResult, VerifyError> {
    budget.subsets("hall_check", instance.num_objects())?;
    check_prices(instance, prices)?;
    let mut best = 0;
    let mut maximal: Vec<BTreeSet<usize>> = Vec::new();
    for set in subsets(instance.num_objects()) {
        let excess = overdemand(instance, prices, &set)? - supply_of(instance, &set);
        if excess > best {
            best = excess;
            maximal.clear();
        }
        if excess == best && best > 0 {
            maximal.push(set);
        }
    }
    let violating = maximal
        .iter()
        .filter(|s| !maximal.iter().any(|t| t.len() < s.len() && t.is_subset(s)))
        .min()
        .cloned();
    Ok(HallResult {
        competitive: violating.is_none(),
        violating,
    })
}

/// Competitive iff a max flow in the demand network saturates the source.
pub fn is_competitive_flowcheck(instance: &Instance, prices: &Prices) -> Result<bool, VerifyError> {
    check_prices(instance, prices)?;
    let network = build_demand_network(instance, prices, &tier_reports(instance, prices));
    Ok(max_flow(&network, None)?.value() == network.source_capacity())
}

/// Bundles of buyer `j` with the largest payoff at `prices`, by enumeration.
fn preferred_bundles_bruteforce(
    instance: &Instance,
    j: usize,
    prices: &Prices,
    visited: &mut u64,
    budget: &Budget,
) -> Result<Vec<Vec<i64>>, VerifyError> {
    let m = instance.num_objects();
    let mut best = i64::MIN;
    let mut found = Vec::new();
    let mut bundle = vec![0i64; m];
    loop {
        *visited += 1;
        if *visited > budget.max_price_vectors {
            return Err(VerifyError::BudgetExceeded {
                what: "bundle enumeration",
                needed: u128::from(*visited),
                limit: u128::from(budget.max_price_vectors),
            });
        }
        if bundle.iter().sum::<i64>() <= instance.demand(j) {
            let value: i64 = (0..m)
                .map(|i| payoff(instance, j, prices, i) * bundle[i])
                .sum();
            if value > best {
                best = value;
                found.clear();
            }
            if value == best {
                found.push(bundle.clone());
            }
        }
        // odometer over 0..=b_i
        let mut i = 0;
        while i < m && bundle[i] == instance.supply(i) {
            bundle[i] = 0;
            i += 1;
        }
        if i == m {
            return Ok(found);
        }
        bundle[i] += 1;
    }
}

/// Competitive iff some feasible allocation hands every buyer a bundle of
/// maximal payoff. Searches allocations directly, without any network.
pub fn is_competitive_bruteforce(
    instance: &Instance,
    prices: &Prices,
    budget: &Budget,
) -> Result<bool, VerifyError> {
    check_prices(instance, prices)?;
    let mut visited = 0;
    let options = (0..instance.num_buyers())
        .map(|j| preferred_bundles_bruteforce(instance, j, prices, &mut visited, budget))
        .collect::<Result<Vec<_>, _>>()?;

    fn search(
        options: &[Vec<Vec<i64>>],
        j: usize,
        left: &mut [i64],
        visited: &mut u64,
        budget: &Budget,
    ) -> Result<bool, VerifyError> {
        if j == options.len() {
            return Ok(true);
        }
        for bundle in &options[j] {
            *visited += 1;
            if *visited > budget.max_price_vectors {
                return Err(VerifyError::BudgetExceeded {
                    what: "allocation search",
                    needed: u128::from(*visited),
                    limit: u128::from(budget.max_price_vectors),
                });
            }
            if bundle.iter().zip(left.iter()).all(|(x, l)| x <= l) {
                left.iter_mut().zip(bundle).for_each(|(l, x)| *l -= x);
                let ok = search(options, j + 1, left, visited, budget)?;
                left.iter_mut().zip(bundle).for_each(|(l, x)| *l += x);
                if ok {
                    return Ok(true);
                }
            }
        }
        Ok(false)
    }

    let mut left = instance.supplies().to_vec();
    search(&options, 0, &mut left, &mut visited, budget)
}

/// Component-wise minimum of every competitive vector in `{0,…,v_max+1}^Ω`.
pub fn min_competitive_bruteforce(
    instance: &Instance,
    budget: &Budget,
) -> Result<Prices, VerifyError> {
    let m = instance.num_objects();
    let top = instance.max_value() + 1;
    let needed = (0..m).try_fold(1u128, |acc, _| acc.checked_mul((top + 1) as u128));
    let limit = u128::from(budget.max_price_vectors);
    match needed {
        Some(n) if n <= limit => {}
        _ => {
            return Err(VerifyError::BudgetExceeded {
                what: "price grid",
                needed: needed.unwrap_or(u128::MAX),
                limit,
            })
        }
    }
    let mut minimum = vec![top; m];
    let mut point = vec![0i64; m];
    loop {
        let prices = Prices::new(instance, point.clone())?;
        if is_competitive_flowcheck(instance, &prices)? {
            minimum
                .iter_mut()
                .zip(&point)
                .for_each(|(a, &b)| *a = (*a).min(b));
        }
        let mut i = 0;
        while i < m && point[i] == top {
            point[i] = 0;
            i += 1;
        }
        if i == m {
            break;
        }
        point[i] += 1;
    }
    let result = Prices::new(instance, minimum)?;
    if !is_competitive_flowcheck(instance, &result)? {
        return Err(VerifyError::MinimumNotCompetitive(result.into()));
    }
    Ok(result)
}

/// `L(p) = Σ_j V_j(p) + Σ_i b_i p(i)`.
pub fn lyapunov(instance: &Instance, prices: &Prices) -> i64 {
    let utilities: i64 = (0..instance.num_buyers())
        .map(|j| indirect_utility(instance, j, prices))
        .sum();
    let revenue: i64 = (0..instance.num_objects())
        .map(|i| instance.supply(i) * prices.get(i))
        .sum();
    utilities + revenue
}

/// Inclusion-minimal minimizer of `X ↦ L(p + χ_X)`.
pub fn steepest_descent_bruteforce(
    instance: &Instance,
    prices: &Prices,
    budget: &Budget,
) -> Result<BTreeSet<usize>, VerifyError> {
    budget.subsets("steepest_descent_bruteforce", instance.num_objects())?;
    check_prices(instance, prices)?;
    let mut best = i64::MAX;
    let mut minimizers: Vec<BTreeSet<usize>> = Vec::new();
    for set in subsets(instance.num_objects()) {
        let shifted = prices.raised(&set, 1).ok_or(VerifyError::BudgetExceeded {
            what: "price shift",
            needed: u128::MAX,
            limit: u128::from(budget.max_price_vectors),
        })?;
        let value = lyapunov(instance, &shifted);
        if value < best {
            best = value;
            minimizers.clear();
        }
        if value == best {
            minimizers.push(set);
        }
    }
    let minimal: Vec<_> = minimizers
        .iter()
        .filter(|s| {
            !minimizers
                .iter()
                .any(|t| t.len() < s.len() && t.is_subset(s))
        })
        .collect();
    if minimal.len() > 1 {
        return Err(VerifyError::AmbiguousMinimizer(
            minimal[0].iter().copied().collect(),
            minimal[1].iter().copied().collect(),
        ));
    }
    Ok(minimal[0].clone())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EquilibriumReport {
    pub feasible: bool,
    /// Per buyer: the bundle respects the demand cap and earns `V_j(p)`.
    pub stable: Vec<bool>,
    pub quantity_sold: i64,
    /// `min(Σb, Σd)`.
    pub expected_quantity: i64,
    pub positive_price_sellout: bool,
    pub overall: bool,
}

/// Checks stability, the quantity sold and sell-out of positively priced objects.
pub fn check_equilibrium(
    instance: &Instance,
    prices: &Prices,
    allocation: &Allocation,
) -> Result<EquilibriumReport, VerifyError> {
    check_prices(instance, prices)?;
    if allocation.num_objects() != instance.num_objects()
        || allocation.num_buyers() != instance.num_buyers()
    {
        return Err(VerifyError::AllocationShape);
    }
    let feasible = allocation.is_feasible(instance);
    let stable: Vec<bool> = (0..instance.num_buyers())
        .map(|j| {
            let earned: i64 = (0..instance.num_objects())
                .map(|i| payoff(instance, j, prices, i) * allocation.get(i, j))
                .sum();
            allocation.received(j) <= instance.demand(j)
                && earned == indirect_utility(instance, j, prices)
        })
        .collect();
    let quantity_sold = allocation.total();
    let expected_quantity = instance.clearing_quantity();
    let positive_price_sellout = (0..instance.num_objects())
        .all(|i| prices.get(i) == 0 || allocation.sold(i) == instance.supply(i));
    let overall = feasible
        && stable.iter().all(|&s| s)
        && quantity_sold == expected_quantity
        && positive_price_sellout;
    Ok(EquilibriumReport {
        feasible,
        stable,
        quantity_sold,
        expected_quantity,
        positive_price_sellout,
        overall,
    })
}

/// `p_old(i) ≤ p_new(i)` on every object still in supply, for a perturbation
/// that only raises demands and lowers supplies.
pub fn check_monotonicity_pair(
    old: &Instance,
    new: &Instance,
    p_old: &Prices,
    p_new: &Prices,
) -> Result<bool, VerifyError> {
    let invalid = |msg: &str| Err(VerifyError::InvalidPerturbation(msg.into()));
    if old.object_ids() != new.object_ids() || old.buyer_ids() != new.buyer_ids() {
        return invalid("object or buyer ids differ");
    }
    if (0..old.num_buyers()).any(|j| old.values_of(j) != new.values_of(j)) {
        return invalid("valuations differ");
    }
    if (0..old.num_buyers()).any(|j| new.demand(j) < old.demand(j)) {
        return invalid("a demand decreased");
    }
    if (0..old.num_objects()).any(|i| new.supply(i) > old.supply(i)) {
        return invalid("a supply increased");
    }
    check_prices(old, p_old)?;
    check_prices(new, p_new)?;
    Ok((0..old.num_objects()).all(|i| new.supply(i) == 0 || p_old.get(i) <= p_new.get(i)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Perturbation {
    Demand { buyer: usize, delta: i64 },
    Supply { object: usize, delta: i64 },
}

/// Raises one demand or lowers one supply by `1..=3`, choosing each kind with
/// equal probability. Supply cuts never go below zero; when every supply is
/// already zero a demand is raised instead.
pub fn random_perturbation<R: Rng + ?Sized>(
    rng: &mut R,
    instance: &Instance,
) -> (Instance, Perturbation) {
    let stocked: Vec<usize> = (0..instance.num_objects())
        .filter(|&i| instance.supply(i) > 0)
        .collect();
    let mut supplies = instance.supplies().to_vec();
    let mut demands = instance.demands().to_vec();
    let perturbation = if !stocked.is_empty() && rng.gen_bool(0.5) {
        let object = stocked[rng.gen_range(0..stocked.len())];
        let delta = rng.gen_range(1..=3).min(supplies[object]);
        supplies[object] -= delta;
        Perturbation::Supply { object, delta }
    } else {
        let buyer = rng.gen_range(0..instance.num_buyers());
        let delta = rng.gen_range(1..=3);
        demands[buyer] += delta;
        Perturbation::Demand { buyer, delta }
    };
    let perturbed = instance
        .with_quantities(supplies, demands)
        .expect("perturbation keeps quantities valid");
    (perturbed, perturbation)
}

#[derive(Clone, Debug)]
pub struct MonotonicityCase {
    pub index: usize,
    pub instance: Instance,
    pub perturbed: Instance,
    pub perturbation: Perturbation,
    pub p_old: Prices,
    pub p_new: Prices,
    pub monotone: bool,
    /// Restarting from the old prices (zero on sold-out objects) reaches `p_new`.
    pub warm_start_agrees: bool,
    /// Raises needed by that restart.
    pub warm_raises: usize,
}

impl MonotonicityCase {
    pub fn passed(&self) -> bool {
        self.monotone && self.warm_start_agrees
    }
}

/// Instance number `index` of the seeded random suite.
pub fn suite_instance(seed: u64, index: usize, limits: &RandomLimits) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    random_instance(&mut rng, limits)
}

/// Solves `samples` random instances before and after a random perturbation.
/// Cases run in parallel and come back ordered by index.
pub fn monotonicity_sweep(
    seed: u64,
    samples: usize,
    limits: &RandomLimits,
) -> Result<Vec<MonotonicityCase>, VerifyError> {
    (0..samples)
        .into_par_iter()
        .map(|index| {
            let instance = suite_instance(seed, index, limits);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
            rng.set_stream(index as u64);
            let (perturbed, perturbation) = random_perturbation(&mut rng, &instance);
            monotonicity_case(index, instance, perturbed, perturbation)
        })
        .collect()
}

pub fn monotonicity_case(
    index: usize,
    instance: Instance,
    perturbed: Instance,
    perturbation: Perturbation,
) -> Result<MonotonicityCase, VerifyError> {
    let options = SolveOptions::default();
    let (p_old, _) = price_raising(&instance, &options)?;
    let (p_new, _) = price_raising(&perturbed, &options)?;
    let monotone = check_monotonicity_pair(&instance, &perturbed, &p_old, &p_new)?;
    let start: Vec<i64> = (0..instance.num_objects())
        .map(|i| {
            if perturbed.supply(i) > 0 {
                p_old.get(i)
            } else {
                0
            }
        })
        .collect();
    let warm_options = SolveOptions {
        start_prices: Some(Prices::new(&perturbed, start)?),
        ..SolveOptions::default()
    };
    let (p_warm, trace) = price_raising(&perturbed, &warm_options)?;
    Ok(MonotonicityCase {
        index,
        instance,
        perturbed,
        perturbation,
        p_old,
        warm_start_agrees: p_warm == p_new,
        p_new,
        monotone,
        warm_raises: trace.raises,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CheckStatus {
    Passed,
    Failed,
    /// The oracle would exceed its budget.
    Skipped,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Check {
    pub name: &'static str,
    pub status: CheckStatus,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckReport {
    pub prices: Prices,
    pub allocation: Allocation,
    pub checks: Vec<Check>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status == CheckStatus::Passed)
    }

    pub fn any_failed(&self) -> bool {
        self.checks.iter().any(|c| c.status == CheckStatus::Failed)
    }
}

fn outcome(
    name: &'static str,
    result: Result<Option<String>, VerifyError>,
) -> Result<Check, VerifyError> {
    let (status, detail) = match result {
        Ok(None) => (CheckStatus::Passed, String::new()),
        Ok(Some(why)) => (CheckStatus::Failed, why),
        Err(e @ VerifyError::BudgetExceeded { .. }) => (CheckStatus::Skipped, e.to_string()),
        Err(e) => return Err(e),
    };
    Ok(Check {
        name,
        status,
        detail,
    })
}

/// Solves `instance` with `options` and runs every checker on the result.
pub fn run_checks(
    instance: &Instance,
    options: &SolveOptions,
    budget: &Budget,
) -> Result<CheckReport, VerifyError> {
    use crate::auction::{allocate, StepMode};

    let traced = SolveOptions {
        trace: true,
        ..options.clone()
    };
    let (prices, trace) = price_raising(instance, &traced)?;
    let allocation = allocate(instance, &prices)?;
    let start = options
        .start_prices
        .clone()
        .unwrap_or_else(|| Prices::zeros(instance.num_objects()));
    let variant = |mode, warm_start| {
        price_raising(
            instance,
            &SolveOptions {
                mode,
                warm_start,
                trace: true,
                ..options.clone()
            },
        )
    };
    let (unit_prices, unit_trace) = variant(StepMode::Unit, true)?;
    let (adapted_prices, adapted_trace) = variant(StepMode::Adapted, true)?;
    let (cold_prices, _) = variant(options.mode, false)?;
    let mut checks = Vec::new();

    checks.push(outcome(
        "market-clearing",
        (|| {
            let r = check_equilibrium(instance, &prices, &allocation)?;
            Ok((!r.overall).then(|| format!("{r:?}")))
        })(),
    )?);

    checks.push(outcome(
        "competitive-iff-flow",
        (|| {
            let mut points: Vec<&Prices> = trace.iterations.iter().map(|r| &r.prices).collect();
            points.push(&prices);
            for p in points {
                let flow = is_competitive_flowcheck(instance, p)?;
                let hall = hall_check(instance, p, budget)?.competitive;
                if flow != hall {
                    return Ok(Some(format!(
                        "at {:?}: flow says {flow}, Hall says {hall}",
                        p.as_slice()
                    )));
                }
            }
            Ok(None)
        })(),
    )?);

    checks.push(outcome(
        "minimum-competitive-prices",
        (|| {
            let brute = min_competitive_bruteforce(instance, budget)?;
            if options.start_prices.is_some() && !start.le(&brute) {
                return Ok(Some(format!(
                    "start prices {:?} exceed the minimum {:?}",
                    start.as_slice(),
                    brute.as_slice()
                )));
            }
            Ok((brute != prices).then(|| {
                format!(
                    "auction {:?}, enumeration {:?}",
                    prices.as_slice(),
                    brute.as_slice()
                )
            }))
        })(),
    )?);

    checks.push(outcome(
        "steepest-descent-cut",
        (|| {
            for r in &unit_trace.iterations {
                let best = steepest_descent_bruteforce(instance, &r.prices, budget)?;
                if best != r.raised_set {
                    return Ok(Some(format!(
                        "at {:?}: cut {:?}, minimizer {:?}",
                        r.prices.as_slice(),
                        r.raised_set,
                        best
                    )));
                }
            }
            let last = steepest_descent_bruteforce(instance, &unit_prices, budget)?;
            Ok((!last.is_empty()).then(|| format!("final prices still descend along {last:?}")))
        })(),
    )?);

    checks.push(outcome(
        "lyapunov-descent",
        (|| {
            for r in &unit_trace.iterations {
                let next = r
                    .prices
                    .raised(&r.raised_set, 1)
                    .expect("traced prices fit");
                if lyapunov(instance, &next) >= lyapunov(instance, &r.prices) {
                    return Ok(Some(format!("no descent from {:?}", r.prices.as_slice())));
                }
            }
            Ok(None)
        })(),
    )?);

    checks.push(outcome(
        "step-modes-agree",
        Ok(
            (unit_prices != adapted_prices || adapted_trace.raises > unit_trace.raises).then(
                || {
                    format!(
                        "unit {:?} in {} raises, adapted {:?} in {} raises",
                        unit_prices.as_slice(),
                        unit_trace.raises,
                        adapted_prices.as_slice(),
                        adapted_trace.raises
                    )
                },
            ),
        ),
    )?);

    checks.push(outcome(
        "warm-start-equivalence",
        Ok((cold_prices != prices).then(|| {
            format!(
                "warm {:?}, cold {:?}",
                prices.as_slice(),
                cold_prices.as_slice()
            )
        })),
    )?);

    checks.push(outcome("iteration-bound", {
        let bound = start.linf_distance(&unit_prices) as usize + 1;
        Ok((unit_trace.outer_iterations() > bound).then(|| {
            format!(
                "{} iterations, bound {bound}",
                unit_trace.outer_iterations()
            )
        }))
    })?);

    // The gap bound covers unit raises; longer adapted raises may drop more units.
    checks.push(outcome(
        "flow-update-gap",
        Ok(trace
            .iterations
            .iter()
            .filter(|r| r.step == 1)
            .find_map(|r| {
                let carried = r.carried_value?;
                let before = r.source_capacity - r.flow_value;
                let after = r.next_source_capacity - carried;
                (after > before).then(|| {
                    format!(
                        "gap grew from {before} to {after} at {:?}",
                        r.prices.as_slice()
                    )
                })
            })),
    )?);

    Ok(CheckReport {
        prices,
        allocation,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::auction::solve;

    fn lone_buyer() -> Instance {
        Instance::new(
            vec![("alpha", 1), ("beta", 1)],
            vec![("1", 2)],
            vec![vec![5, 1]],
        )
        .unwrap()
    }

    fn three_goods() -> Instance {
        Instance::new(
            vec![("alpha", 1), ("beta", 1), ("gamma", 4)],
            vec![("j1", 4), ("j2", 2)],
            vec![vec![3, 2, 1], vec![0, 2, 0]],
        )
        .unwrap()
    }

    fn vcg() -> Instance {
        Instance::new(
            vec![("alpha", 3), ("beta", 2)],
            vec![("1", 2), ("2", 2), ("3", 1)],
            vec![vec![3, 1], vec![2, 0], vec![0, 1]],
        )
        .unwrap()
    }

    fn set(items: &[usize]) -> BTreeSet<usize> {
        items.iter().copied().collect()
    }

    #[test]
    fn overdemand_three_goods() {
        let inst = three_goods();
        let p = Prices::zeros(3);
        assert_eq!(overdemand(&inst, &p, &set(&[1])).unwrap(), 2);
        assert_eq!(overdemand(&inst, &p, &set(&[])).unwrap(), 0);
        assert_eq!(overdemand(&inst, &p, &set(&[0, 1, 2])).unwrap(), 5);
        assert!(matches!(
            overdemand(&inst, &p, &set(&[3])),
            Err(VerifyError::UnknownObject(3))
        ));
    }

    #[test]
    fn hall_examples() {
        let b = Budget::default();
        let r = hall_check(&lone_buyer(), &Prices::zeros(2), &b).unwrap();
        assert!(r.competitive && r.violating.is_none());
        let r = hall_check(&three_goods(), &Prices::zeros(3), &b).unwrap();
        assert_eq!(r.violating, Some(set(&[1])));
        let nobody = Instance::new(vec![("a", 1)], Vec::<(&str, i64)>::new(), vec![]).unwrap();
        assert!(
            hall_check(&nobody, &Prices::zeros(1), &b)
                .unwrap()
                .competitive
        );
        let tight = Budget {
            max_subset_objects: 2,
            ..b
        };
        assert!(matches!(
            hall_check(&three_goods(), &Prices::zeros(3), &tight),
            Err(VerifyError::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn flowcheck_examples() {
        assert!(is_competitive_flowcheck(&lone_buyer(), &Prices::zeros(2)).unwrap());
        assert!(!is_competitive_flowcheck(&three_goods(), &Prices::zeros(3)).unwrap());
        let inst = three_goods();
        let high = Prices::new(&inst, vec![4, 4, 4]).unwrap();
        assert!(is_competitive_flowcheck(&inst, &high).unwrap());
    }

    #[test]
    fn bruteforce_minimum_prices() {
        let b = Budget::default();
        assert_eq!(
            min_competitive_bruteforce(&lone_buyer(), &b)
                .unwrap()
                .as_slice(),
            &[0, 0]
        );
        assert_eq!(
            min_competitive_bruteforce(&vcg(), &b).unwrap().as_slice(),
            &[2, 0]
        );
        assert_eq!(
            min_competitive_bruteforce(&three_goods(), &b)
                .unwrap()
                .as_slice(),
            &[0, 1, 0]
        );
        let tiny = Budget {
            max_price_vectors: 10,
            ..b
        };
        assert!(matches!(
            min_competitive_bruteforce(&three_goods(), &tiny),
            Err(VerifyError::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn lyapunov_values() {
        let inst = three_goods();
        assert_eq!(lyapunov(&inst, &Prices::zeros(3)), 9);
        let high = Prices::new(&inst, vec![3, 2, 1]).unwrap();
        assert_eq!(lyapunov(&inst, &high), 3 + 2 + 4);
    }

    #[test]
    fn steepest_descent_examples() {
        let b = Budget::default();
        assert_eq!(
            steepest_descent_bruteforce(&three_goods(), &Prices::zeros(3), &b).unwrap(),
            set(&[1])
        );
        assert_eq!(
            steepest_descent_bruteforce(&vcg(), &Prices::zeros(2), &b).unwrap(),
            set(&[0])
        );
        let walras = Prices::new(&three_goods(), vec![0, 1, 0]).unwrap();
        assert_eq!(
            steepest_descent_bruteforce(&three_goods(), &walras, &b).unwrap(),
            set(&[])
        );
    }

    #[test]
    fn equilibrium_reports() {
        let ex = lone_buyer();
        let eq = solve(&ex, &SolveOptions::default()).unwrap();
        assert!(
            check_equilibrium(&ex, &eq.prices, &eq.allocation)
                .unwrap()
                .overall
        );

        let only_beta = Allocation::from_matrix(vec![vec![0], vec![1]]);
        let r = check_equilibrium(&ex, &Prices::zeros(2), &only_beta).unwrap();
        assert_eq!(r.stable, vec![false]);
        assert!(!r.overall);

        let inst = vcg();
        let eq = solve(&inst, &SolveOptions::default()).unwrap();
        let r = check_equilibrium(&inst, &eq.prices, &eq.allocation).unwrap();
        assert_eq!((r.quantity_sold, r.expected_quantity), (5, 5));
        assert!(r.positive_price_sellout && r.overall);

        let over = Allocation::from_matrix(vec![vec![2], vec![0]]);
        assert!(
            !check_equilibrium(&ex, &Prices::zeros(2), &over)
                .unwrap()
                .feasible
        );
    }

    #[test]
    fn price_jump_monotonicity() {
        let base = Instance::new(
            vec![("a", 2), ("b", 2)],
            vec![("x", 2), ("y", 2)],
            vec![vec![5, 5], vec![5, 5]],
        )
        .unwrap();
        let more = base.with_quantities(vec![2, 2], vec![3, 2]).unwrap();
        let case =
            monotonicity_case(0, base, more, Perturbation::Demand { buyer: 0, delta: 1 }).unwrap();
        assert_eq!(case.p_old.as_slice(), &[0, 0]);
        assert_eq!(case.p_new.as_slice(), &[5, 5]);
        assert!(case.passed());
    }

    #[test]
    fn monotonicity_guards() {
        let ex = lone_buyer();
        let p = Prices::zeros(2);
        assert!(check_monotonicity_pair(&ex, &ex, &p, &p).unwrap());
        let gone = ex.with_quantities(vec![0, 1], vec![2]).unwrap();
        let high = Prices::new(&ex, vec![3, 0]).unwrap();
        assert!(check_monotonicity_pair(&ex, &gone, &high, &p).unwrap());
        let more = ex.with_quantities(vec![2, 1], vec![2]).unwrap();
        assert!(matches!(
            check_monotonicity_pair(&ex, &more, &p, &p),
            Err(VerifyError::InvalidPerturbation(_))
        ));
    }

    #[test]
    fn full_check_suite() {
        for inst in [lone_buyer(), three_goods(), vcg()] {
            let report = run_checks(&inst, &SolveOptions::default(), &Budget::default()).unwrap();
            assert!(report.passed(), "{:?}", report.checks);
        }
        let tiny = Budget {
            max_subset_objects: 1,
            max_price_vectors: 5,
        };
        let report = run_checks(&three_goods(), &SolveOptions::default(), &tiny).unwrap();
        assert!(!report.any_failed() && !report.passed());
    }

    #[test]
    fn sweep_is_deterministic() {
        let limits = RandomLimits::default();
        let a = monotonicity_sweep(11, 20, &limits).unwrap();
        let b = monotonicity_sweep(11, 20, &limits).unwrap();
        assert_eq!(a.len(), 20);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.index, y.index);
            assert_eq!(x.perturbed, y.perturbed);
            assert_eq!(x.p_new, y.p_new);
            assert!(x.passed());
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn small(seed: u64) -> Instance {
            suite_instance(seed, 0, &RandomLimits::default())
        }

        fn grid_point(inst: &Instance, raw: &[i64]) -> Prices {
            let top = inst.max_value() + 1;
            let p = (0..inst.num_objects())
                .map(|i| raw[i] % (top + 1))
                .collect();
            Prices::new(inst, p).unwrap()
        }

        /// V_j by enumerating every bundle.
        fn utility_bruteforce(inst: &Instance, j: usize, p: &Prices) -> i64 {
            let mut visited = 0;
            let bundles =
                preferred_bundles_bruteforce(inst, j, p, &mut visited, &Budget::default()).unwrap();
            bundles[0]
                .iter()
                .enumerate()
                .map(|(i, &x)| payoff(inst, j, p, i) * x)
                .sum()
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(400))]

            #[test]
            fn competitiveness_oracles_agree(seed in any::<u64>(), raw in prop::collection::vec(0i64..6, 3)) {
                let inst = small(seed);
                let p = grid_point(&inst, &raw);
                let flow = is_competitive_flowcheck(&inst, &p).unwrap();
                prop_assert_eq!(flow, hall_check(&inst, &p, &Budget::default()).unwrap().competitive);
                prop_assert_eq!(flow, is_competitive_bruteforce(&inst, &p, &Budget::default()).unwrap());
            }

            #[test]
            fn lyapunov_difference_is_overdemand_excess(seed in any::<u64>(), raw in prop::collection::vec(0i64..6, 3)) {
                let inst = small(seed);
                let p = grid_point(&inst, &raw);
                let direct: i64 = (0..inst.num_buyers()).map(|j| utility_bruteforce(&inst, j, &p)).sum::<i64>()
                    + (0..inst.num_objects()).map(|i| inst.supply(i) * p.get(i)).sum::<i64>();
                prop_assert_eq!(lyapunov(&inst, &p), direct);
                for x in subsets(inst.num_objects()) {
                    let shifted = p.raised(&x, 1).unwrap();
                    prop_assert_eq!(
                        lyapunov(&inst, &p) - lyapunov(&inst, &shifted),
                        overdemand(&inst, &p, &x).unwrap() - supply_of(&inst, &x)
                    );
                }
            }

            #[test]
            fn hall_violator_is_maximal(seed in any::<u64>(), raw in prop::collection::vec(0i64..6, 3)) {
                let inst = small(seed);
                let p = grid_point(&inst, &raw);
                if let Some(v) = hall_check(&inst, &p, &Budget::default()).unwrap().violating {
                    let excess = |s: &BTreeSet<usize>| overdemand(&inst, &p, s).unwrap() - supply_of(&inst, s);
                    let top = excess(&v);
                    prop_assert!(top > 0);
                    for s in subsets(inst.num_objects()) {
                        prop_assert!(excess(&s) <= top);
                        if s.len() < v.len() && s.is_subset(&v) {
                            prop_assert!(excess(&s) < top);
                        }
                    }
                }
            }
        }
    }
}
