//! The tier oracle: a buyer's minimal preferred bundle and the split of the
//! objects into strongly wanted, marginal and zero-payoff tiers.

use std::collections::BTreeSet;

use crate::model::{Instance, Prices};

/// A buyer's answer to a tier query at fixed prices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TierReport {
    /// Objects with payoff strictly above the marginal payoff.
    pub omega1: BTreeSet<usize>,
    /// Objects whose payoff equals the marginal payoff (always positive).
    pub omega2: BTreeSet<usize>,
    /// Objects with payoff exactly zero.
    pub omega3: BTreeSet<usize>,
    pub d1: i64,
    pub d2: i64,
    pub d3: i64,
    /// The object selected last by the greedy bundle, if any.
    pub last_item: Option<usize>,
}

impl TierReport {
    fn empty() -> Self {
        TierReport {
            omega1: BTreeSet::new(),
            omega2: BTreeSet::new(),
            omega3: BTreeSet::new(),
            d1: 0,
            d2: 0,
            d3: 0,
            last_item: None,
        }
    }

    /// Size of every minimal preferred bundle.
    pub fn strict_demand(&self) -> i64 {
        self.d1 + self.d2
    }
}

/// Quantities of each object in one buyer's bundle.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bundle {
    pub quantity: Vec<i64>,
}

impl Bundle {
    pub fn size(&self) -> i64 {
        self.quantity.iter().sum()
    }

    pub fn payoff(&self, instance: &Instance, buyer: usize, prices: &Prices) -> i64 {
        self.quantity
            .iter()
            .enumerate()
            .map(|(i, &x)| payoff(instance, buyer, prices, i) * x)
            .sum()
    }
}

pub fn payoff(instance: &Instance, buyer: usize, prices: &Prices, object: usize) -> i64 {
    instance.value(object, buyer) - prices.get(object)
}

/// Objects by non-increasing payoff, ties in canonical object order.
pub fn preference_order(instance: &Instance, buyer: usize, prices: &Prices) -> Vec<usize> {
    let mut order: Vec<usize> = (0..instance.num_objects()).collect();
    order.sort_by_key(|&i| std::cmp::Reverse(payoff(instance, buyer, prices, i)));
    order
}

/// Minimal preferred bundle under the canonical tie order.
pub fn preferred_bundle(
    instance: &Instance,
    buyer: usize,
    prices: &Prices,
) -> (Bundle, Option<usize>) {
    let order = preference_order(instance, buyer, prices);
    preferred_bundle_with_order(instance, buyer, prices, &order)
}

/// Greedy bundle along `order`, which must list every object by
/// non-increasing payoff. Takes `min(b_i, residual)` of each positive-payoff
/// object until the demand is met. Objects without supply are never selected.
pub fn preferred_bundle_with_order(
    instance: &Instance,
    buyer: usize,
    prices: &Prices,
    order: &[usize],
) -> (Bundle, Option<usize>) {
    debug_assert!(order.windows(2).all(|w| {
        payoff(instance, buyer, prices, w[0]) >= payoff(instance, buyer, prices, w[1])
    }));
    let mut quantity = vec![0; instance.num_objects()];
    let mut residual = instance.demand(buyer);
    let mut last = None;
    for &i in order {
        if residual == 0 || payoff(instance, buyer, prices, i) <= 0 {
            break;
        }
        let take = instance.supply(i).min(residual);
        if take == 0 {
            continue;
        }
        quantity[i] = take;
        residual -= take;
        last = Some(i);
    }
    (Bundle { quantity }, last)
}

/// Tier sets and tier demands of `buyer` at `prices`.
pub fn tier_report(instance: &Instance, buyer: usize, prices: &Prices) -> TierReport {
    let order = preference_order(instance, buyer, prices);
    tier_report_with_order(instance, buyer, prices, &order)
}

pub fn tier_report_with_order(
    instance: &Instance,
    buyer: usize,
    prices: &Prices,
    order: &[usize],
) -> TierReport {
    let demand = instance.demand(buyer);
    if demand == 0 {
        return TierReport::empty();
    }
    let (_, last) = preferred_bundle_with_order(instance, buyer, prices, order);
    let payoffs: Vec<i64> = (0..instance.num_objects())
        .map(|i| payoff(instance, buyer, prices, i))
        .collect();
    let mut report = TierReport::empty();
    report.last_item = last;
    if let Some(k) = last {
        let marginal = payoffs[k];
        for (i, &u) in payoffs.iter().enumerate() {
            if u > marginal {
                report.omega1.insert(i);
            } else if u == marginal {
                report.omega2.insert(i);
            }
        }
    }
    report.omega3 = (0..instance.num_objects())
        .filter(|&i| payoffs[i] == 0)
        .collect();
    let supply_of = |set: &BTreeSet<usize>| set.iter().map(|&i| instance.supply(i)).sum::<i64>();
    report.d1 = supply_of(&report.omega1);
    report.d2 = supply_of(&report.omega2).min(demand - report.d1);
    report.d3 = supply_of(&report.omega3).min(demand - report.d1 - report.d2);
    report
}

/// Tier reports of all buyers, in buyer order.
pub fn tier_reports(instance: &Instance, prices: &Prices) -> Vec<TierReport> {
    (0..instance.num_buyers())
        .map(|j| tier_report(instance, j, prices))
        .collect()
}

/// Indirect utility `V_j(p)`: the payoff of a preferred bundle.
pub fn indirect_utility(instance: &Instance, buyer: usize, prices: &Prices) -> i64 {
    let (bundle, _) = preferred_bundle(instance, buyer, prices);
    bundle.payoff(instance, buyer, prices)
}

#[cfg(test)]
mod tests {
    use super::*;

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

    fn lone_buyer() -> Instance {
        Instance::new(
            vec![("alpha", 1), ("beta", 1)],
            vec![("1", 2)],
            vec![vec![5, 1]],
        )
        .unwrap()
    }

    /// Best payoff over every feasible bundle, by exhaustive enumeration.
    fn brute_best_payoff(inst: &Instance, j: usize, prices: &Prices) -> i64 {
        fn rec(inst: &Instance, j: usize, p: &Prices, i: usize, left: i64) -> i64 {
            if i == inst.num_objects() {
                return 0;
            }
            (0..=inst.supply(i).min(left))
                .map(|x| x * (inst.value(i, j) - p.get(i)) + rec(inst, j, p, i + 1, left - x))
                .max()
                .unwrap()
        }
        rec(inst, j, prices, 0, inst.demand(j))
    }

    fn set(items: &[usize]) -> BTreeSet<usize> {
        items.iter().copied().collect()
    }

    #[test]
    fn three_goods_bundle_of_first_buyer() {
        let inst = three_goods();
        let (bundle, k) = preferred_bundle(&inst, 0, &Prices::zeros(3));
        assert_eq!(bundle.quantity, vec![1, 1, 2]);
        assert_eq!(k, Some(2));
    }

    #[test]
    fn no_positive_payoff_gives_empty_bundle() {
        let inst = three_goods();
        let p = Prices::new(&inst, vec![3, 2, 1]).unwrap();
        let (bundle, k) = preferred_bundle(&inst, 0, &p);
        assert_eq!(bundle.size(), 0);
        assert_eq!(k, None);
    }

    #[test]
    fn vcg_buyer_one_at_two_zero() {
        let inst = vcg();
        let p = Prices::new(&inst, vec![2, 0]).unwrap();
        let (bundle, k) = preferred_bundle(&inst, 0, &p);
        assert_eq!(bundle.quantity, vec![2, 0]);
        assert_eq!(k, Some(0));
        assert_eq!(bundle.payoff(&inst, 0, &p), brute_best_payoff(&inst, 0, &p));
    }

    #[test]
    fn three_goods_tiers() {
        let inst = three_goods();
        let p = Prices::zeros(3);
        let r2 = tier_report(&inst, 1, &p);
        assert_eq!(r2.omega1, set(&[]));
        assert_eq!(r2.omega2, set(&[1]));
        assert_eq!(r2.omega3, set(&[0, 2]));
        assert_eq!((r2.d1, r2.d2, r2.d3), (0, 1, 1));
        let r1 = tier_report(&inst, 0, &p);
        assert_eq!(r1.omega1, set(&[0, 1]));
        assert_eq!(r1.omega2, set(&[2]));
        assert!(r1.omega3.is_empty());
        assert_eq!((r1.d1, r1.d2, r1.d3), (2, 2, 0));
    }

    #[test]
    fn all_zero_buyer_is_indifferent_to_everything() {
        let inst =
            Instance::new(vec![("a", 2), ("b", 1)], vec![("z", 5)], vec![vec![0, 0]]).unwrap();
        let r = tier_report(&inst, 0, &Prices::zeros(2));
        assert!(r.omega1.is_empty() && r.omega2.is_empty());
        assert_eq!(r.omega3, set(&[0, 1]));
        assert_eq!(r.d3, 3);
        assert_eq!(r.last_item, None);
    }

    #[test]
    fn zero_demand_buyer_reports_nothing() {
        let inst = Instance::new(vec![("a", 2)], vec![("z", 0)], vec![vec![0]]).unwrap();
        let r = tier_report(&inst, 0, &Prices::zeros(1));
        assert!(r.omega3.is_empty());
        assert_eq!((r.d1, r.d2, r.d3), (0, 0, 0));
    }

    #[test]
    fn indirect_utilities() {
        let inst = three_goods();
        let zero = Prices::zeros(3);
        assert_eq!(indirect_utility(&inst, 0, &zero), 7);
        assert_eq!(brute_best_payoff(&inst, 0, &zero), 7);
        let high = Prices::new(&inst, vec![3, 2, 1]).unwrap();
        assert_eq!(indirect_utility(&inst, 0, &high), 0);
        let ex = lone_buyer();
        assert_eq!(indirect_utility(&ex, 0, &Prices::zeros(2)), 6);
        assert_eq!(brute_best_payoff(&ex, 0, &Prices::zeros(2)), 6);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn small_market() -> impl Strategy<Value = (Instance, Prices)> {
            (1usize..=4, 1usize..=3).prop_flat_map(|(m, n)| {
                (
                    prop::collection::vec(0i64..=3, m),
                    prop::collection::vec(0i64..=4, n),
                    prop::collection::vec(prop::collection::vec(0i64..=5, m), n),
                    prop::collection::vec(0i64..=6, m),
                )
                    .prop_map(move |(b, d, v, p)| {
                        let objects = b
                            .iter()
                            .enumerate()
                            .map(|(i, &b)| (format!("o{i}"), b))
                            .collect();
                        let buyers = d
                            .iter()
                            .enumerate()
                            .map(|(j, &d)| (format!("b{j}"), d))
                            .collect();
                        let inst = Instance::new::<String, String>(objects, buyers, v).unwrap();
                        let prices = Prices::new(&inst, p).unwrap();
                        (inst, prices)
                    })
            })
        }

        proptest! {
            #[test]
            fn greedy_bundle_is_optimal((inst, p) in small_market()) {
                for j in 0..inst.num_buyers() {
                    let (bundle, k) = preferred_bundle(&inst, j, &p);
                    prop_assert!(bundle.size() <= inst.demand(j));
                    prop_assert_eq!(bundle.payoff(&inst, j, &p), brute_best_payoff(&inst, j, &p));
                    prop_assert_eq!(indirect_utility(&inst, j, &p), brute_best_payoff(&inst, j, &p));
                    if let Some(k) = k {
                        prop_assert!(payoff(&inst, j, &p, k) > 0);
                    }
                }
            }

            #[test]
            fn tier_invariants((inst, p) in small_market()) {
                for j in 0..inst.num_buyers() {
                    let r = tier_report(&inst, j, &p);
                    prop_assert!(r.omega1.is_disjoint(&r.omega2));
                    prop_assert!(r.omega1.is_disjoint(&r.omega3));
                    prop_assert!(r.omega2.is_disjoint(&r.omega3));
                    prop_assert!(r.d1 + r.d2 <= inst.demand(j));
                    prop_assert!(r.d3 >= 0 && r.d1 + r.d2 + r.d3 <= inst.demand(j));
                    prop_assert_eq!(r.last_item.is_none(), r.omega1.is_empty() && r.omega2.is_empty());
                    let (bundle, _) = preferred_bundle(&inst, j, &p);
                    prop_assert_eq!(r.strict_demand(), bundle.size());
                }
            }

            #[test]
            fn tiers_do_not_depend_on_tie_order((inst, p) in small_market(), seed in any::<u64>()) {
                use rand::{seq::SliceRandom, SeedableRng};
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
                for j in 0..inst.num_buyers() {
                    // Shuffle, then stable-sort by payoff: a random order within ties.
                    let mut order: Vec<usize> = (0..inst.num_objects()).collect();
                    order.shuffle(&mut rng);
                    order.sort_by_key(|&i| std::cmp::Reverse(payoff(&inst, j, &p, i)));
                    let a = tier_report(&inst, j, &p);
                    let b = tier_report_with_order(&inst, j, &p, &order);
                    prop_assert_eq!(&a.omega1, &b.omega1);
                    prop_assert_eq!(&a.omega2, &b.omega2);
                    prop_assert_eq!(&a.omega3, &b.omega3);
                    prop_assert_eq!((a.d1, a.d2, a.d3), (b.d1, b.d2, b.d3));
                }
            }
        }
    }
}
