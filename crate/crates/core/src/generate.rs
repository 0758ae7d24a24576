//! Seeded random small markets for property suites and sweeps.

use rand::Rng;

use crate::model::Instance;

/// Inclusive bounds for [`random_instance`].
#[derive(Clone, Debug)]
pub struct RandomLimits {
    pub max_objects: usize,
    pub max_buyers: usize,
    pub max_supply: i64,
    pub max_demand: i64,
    pub max_value: i64,
}

impl Default for RandomLimits {
    fn default() -> Self {
        RandomLimits {
            max_objects: 3,
            max_buyers: 3,
            max_supply: 3,
            max_demand: 3,
            max_value: 4,
        }
    }
}

/// At least one object and one buyer; quantities and values drawn uniformly
/// from `0..=max`.
pub fn random_instance<R: Rng + ?Sized>(rng: &mut R, limits: &RandomLimits) -> Instance {
    let m = rng.gen_range(1..=limits.max_objects.max(1));
    let n = rng.gen_range(1..=limits.max_buyers.max(1));
    let objects = (0..m)
        .map(|i| (format!("o{i}"), rng.gen_range(0..=limits.max_supply)))
        .collect::<Vec<_>>();
    let buyers = (0..n)
        .map(|j| (format!("b{j}"), rng.gen_range(0..=limits.max_demand)))
        .collect::<Vec<_>>();
    let values = (0..n)
        .map(|_| {
            (0..m)
                .map(|_| rng.gen_range(0..=limits.max_value))
                .collect()
        })
        .collect();
    Instance::new(objects, buyers, values).expect("bounded random instance is valid")
}
