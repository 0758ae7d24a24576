//! Market instances, price vectors and allocations.
//!
//! Objects and buyers are addressed by their position in the canonical
//! (input) order. String ids are kept alongside for I/O and traces.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::Deserialize;
use serde_json::Number;
use thiserror::Error;

/// Reserved id of the object added by [`balance_instance`] when demand exceeds supply.
pub const DUMMY_OBJECT_ID: &str = "__dummy_object";
/// Reserved id of the buyer added by [`balance_instance`] when supply exceeds demand.
pub const DUMMY_BUYER_ID: &str = "__dummy_buyer";

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("duplicate object id `{0}`")]
    DuplicateObject(String),
    #[error("duplicate buyer id `{0}`")]
    DuplicateBuyer(String),
    #[error("id `{0}` is reserved")]
    ReservedId(String),
    #[error("object `{object}` has negative supply {value}")]
    NegativeSupply { object: String, value: i64 },
    #[error("buyer `{buyer}` has negative demand {value}")]
    NegativeDemand { buyer: String, value: i64 },
    #[error("buyer `{buyer}` has negative valuation {value} for object `{object}`")]
    NegativeValuation {
        buyer: String,
        object: String,
        value: i64,
    },
    #[error("{field} of `{entity}` is not an integer: {value}")]
    NotAnInteger {
        entity: String,
        field: &'static str,
        value: String,
    },
    #[error("buyer `{buyer}` values unknown object `{object}`")]
    UnknownObject { buyer: String, object: String },
    #[error("buyer `{buyer}` has {got} valuations, expected {expected}")]
    ValuationShape {
        buyer: String,
        got: usize,
        expected: usize,
    },
    #[error("instance totals overflow 64-bit arithmetic")]
    Overflow,
    #[error("price vector has {got} entries, expected {expected}")]
    PriceShape { got: usize, expected: usize },
    #[error("price of `{object}` is negative: {value}")]
    NegativePrice { object: String, value: i64 },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// A multi-unit market with truncated additive valuations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    objects: Vec<String>,
    supplies: Vec<i64>,
    buyers: Vec<String>,
    demands: Vec<i64>,
    /// `values[j][i]` is buyer `j`'s per-unit value of object `i`.
    values: Vec<Vec<i64>>,
}

impl Instance {
    /// Builds a checked instance. `values[j]` lists buyer `j`'s per-unit
    /// values in object order.
    pub fn new<O, B>(
        objects: Vec<(O, i64)>,
        buyers: Vec<(B, i64)>,
        values: Vec<Vec<i64>>,
    ) -> Result<Self, ModelError>
    where
        O: Into<String>,
        B: Into<String>,
    {
        let (objects, supplies): (Vec<String>, Vec<i64>) =
            objects.into_iter().map(|(id, b)| (id.into(), b)).unzip();
        let (buyers, demands): (Vec<String>, Vec<i64>) =
            buyers.into_iter().map(|(id, d)| (id.into(), d)).unzip();
        if values.len() != buyers.len() {
            return Err(ModelError::ValuationShape {
                buyer: "<all>".into(),
                got: values.len(),
                expected: buyers.len(),
            });
        }
        for (j, row) in values.iter().enumerate() {
            if row.len() != objects.len() {
                return Err(ModelError::ValuationShape {
                    buyer: buyers[j].clone(),
                    got: row.len(),
                    expected: objects.len(),
                });
            }
        }
        let instance = Instance {
            objects,
            supplies,
            buyers,
            demands,
            values,
        };
        instance.check(true)?;
        Ok(instance)
    }

    /// Parses the JSON instance format.
    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let raw: RawInstance = serde_json::from_str(text)?;
        validate_instance(raw)
    }

    fn check(&self, reject_reserved: bool) -> Result<(), ModelError> {
        let mut seen = HashSet::new();
        for (id, &b) in self.objects.iter().zip(&self.supplies) {
            if reject_reserved && (id == DUMMY_OBJECT_ID || id == DUMMY_BUYER_ID) {
                return Err(ModelError::ReservedId(id.clone()));
            }
            if !seen.insert(id.as_str()) {
                return Err(ModelError::DuplicateObject(id.clone()));
            }
            if b < 0 {
                return Err(ModelError::NegativeSupply {
                    object: id.clone(),
                    value: b,
                });
            }
        }
        let mut seen = HashSet::new();
        for (j, (id, &d)) in self.buyers.iter().zip(&self.demands).enumerate() {
            if reject_reserved && (id == DUMMY_OBJECT_ID || id == DUMMY_BUYER_ID) {
                return Err(ModelError::ReservedId(id.clone()));
            }
            if !seen.insert(id.as_str()) {
                return Err(ModelError::DuplicateBuyer(id.clone()));
            }
            if d < 0 {
                return Err(ModelError::NegativeDemand {
                    buyer: id.clone(),
                    value: d,
                });
            }
            for (i, &v) in self.values[j].iter().enumerate() {
                if v < 0 {
                    return Err(ModelError::NegativeValuation {
                        buyer: id.clone(),
                        object: self.objects[i].clone(),
                        value: v,
                    });
                }
            }
        }
        // Payoffs, utilities, p·b and flow values must all stay exact.
        let sum = |xs: &[i64]| xs.iter().try_fold(0i64, |acc, &x| acc.checked_add(x));
        let total_b = sum(&self.supplies).ok_or(ModelError::Overflow)?;
        let total_d = sum(&self.demands).ok_or(ModelError::Overflow)?;
        let v_max = self.max_value();
        let bound = v_max.checked_add(2).ok_or(ModelError::Overflow)?;
        bound
            .checked_mul(total_b.checked_add(total_d).ok_or(ModelError::Overflow)?)
            .ok_or(ModelError::Overflow)?;
        Ok(())
    }

    pub fn num_objects(&self) -> usize {
        self.objects.len()
    }

    pub fn num_buyers(&self) -> usize {
        self.buyers.len()
    }

    pub fn object_id(&self, i: usize) -> &str {
        &self.objects[i]
    }

    pub fn buyer_id(&self, j: usize) -> &str {
        &self.buyers[j]
    }

    pub fn object_ids(&self) -> &[String] {
        &self.objects
    }

    pub fn buyer_ids(&self) -> &[String] {
        &self.buyers
    }

    pub fn object_index(&self, id: &str) -> Option<usize> {
        self.objects.iter().position(|o| o == id)
    }

    pub fn buyer_index(&self, id: &str) -> Option<usize> {
        self.buyers.iter().position(|b| b == id)
    }

    pub fn supply(&self, i: usize) -> i64 {
        self.supplies[i]
    }

    pub fn supplies(&self) -> &[i64] {
        &self.supplies
    }

    pub fn demand(&self, j: usize) -> i64 {
        self.demands[j]
    }

    pub fn demands(&self) -> &[i64] {
        &self.demands
    }

    /// Per-unit value `v_ij` of object `i` for buyer `j`.
    pub fn value(&self, i: usize, j: usize) -> i64 {
        self.values[j][i]
    }

    pub fn values_of(&self, j: usize) -> &[i64] {
        &self.values[j]
    }

    pub fn total_supply(&self) -> i64 {
        self.supplies.iter().sum()
    }

    pub fn total_demand(&self) -> i64 {
        self.demands.iter().sum()
    }

    /// Largest per-unit value over all pairs, 0 for an empty market.
    pub fn max_value(&self) -> i64 {
        self.values
            .iter()
            .flat_map(|row| row.iter().copied())
            .max()
            .unwrap_or(0)
    }

    /// Largest value any buyer places on object `i`.
    pub fn max_value_of_object(&self, i: usize) -> i64 {
        self.values.iter().map(|row| row[i]).max().unwrap_or(0)
    }

    /// Quantity that a market-clearing allocation sells: `min(Σb, Σd)`.
    pub fn clearing_quantity(&self) -> i64 {
        self.total_supply().min(self.total_demand())
    }

    /// Same market with new supplies and demands; ids and values are kept.
    pub fn with_quantities(
        &self,
        supplies: Vec<i64>,
        demands: Vec<i64>,
    ) -> Result<Self, ModelError> {
        if supplies.len() != self.supplies.len() || demands.len() != self.demands.len() {
            return Err(ModelError::ValuationShape {
                buyer: "<quantities>".into(),
                got: supplies.len() + demands.len(),
                expected: self.supplies.len() + self.demands.len(),
            });
        }
        let instance = Instance {
            supplies,
            demands,
            ..self.clone()
        };
        instance.check(false)?;
        Ok(instance)
    }

    /// Serializes back into the JSON instance format. Zero valuations are omitted.
    pub fn to_json(&self) -> serde_json::Value {
        let objects: Vec<_> = self
            .objects
            .iter()
            .zip(&self.supplies)
            .map(|(id, b)| serde_json::json!({ "id": id, "supply": b }))
            .collect();
        let buyers: Vec<_> = (0..self.num_buyers())
            .map(|j| {
                let valuations: BTreeMap<&str, i64> = (0..self.num_objects())
                    .filter(|&i| self.value(i, j) != 0)
                    .map(|i| (self.objects[i].as_str(), self.value(i, j)))
                    .collect();
                serde_json::json!({
                    "id": self.buyers[j],
                    "demand": self.demands[j],
                    "valuations": valuations,
                })
            })
            .collect();
        serde_json::json!({ "objects": objects, "buyers": buyers })
    }
}

/// Instance file contents before validation.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawInstance {
    pub objects: Vec<RawObject>,
    pub buyers: Vec<RawBuyer>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawObject {
    pub id: String,
    pub supply: Number,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawBuyer {
    pub id: String,
    pub demand: Number,
    #[serde(default)]
    pub valuations: BTreeMap<String, Number>,
}

fn integer(n: &Number, entity: &str, field: &'static str) -> Result<i64, ModelError> {
    n.as_i64().ok_or_else(|| ModelError::NotAnInteger {
        entity: entity.to_string(),
        field,
        value: n.to_string(),
    })
}

/// Checks raw instance fields and fills missing valuations with 0.
pub fn validate_instance(raw: RawInstance) -> Result<Instance, ModelError> {
    let mut objects = Vec::with_capacity(raw.objects.len());
    for o in &raw.objects {
        objects.push((o.id.clone(), integer(&o.supply, &o.id, "supply")?));
    }
    let index: BTreeMap<&str, usize> = raw
        .objects
        .iter()
        .enumerate()
        .map(|(i, o)| (o.id.as_str(), i))
        .collect();
    let mut buyers = Vec::with_capacity(raw.buyers.len());
    let mut values = Vec::with_capacity(raw.buyers.len());
    for b in &raw.buyers {
        buyers.push((b.id.clone(), integer(&b.demand, &b.id, "demand")?));
        let mut row = vec![0; raw.objects.len()];
        for (object, v) in &b.valuations {
            let &i = index
                .get(object.as_str())
                .ok_or_else(|| ModelError::UnknownObject {
                    buyer: b.id.clone(),
                    object: object.clone(),
                })?;
            row[i] = integer(v, &b.id, "valuation")?;
        }
        values.push(row);
    }
    Instance::new(objects, buyers, values)
}

/// Per-object nonnegative integer prices, indexed by object position.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Prices(Vec<i64>);

impl Prices {
    pub fn zeros(num_objects: usize) -> Self {
        Prices(vec![0; num_objects])
    }

    pub fn new(instance: &Instance, prices: Vec<i64>) -> Result<Self, ModelError> {
        if prices.len() != instance.num_objects() {
            return Err(ModelError::PriceShape {
                got: prices.len(),
                expected: instance.num_objects(),
            });
        }
        if let Some(i) = prices.iter().position(|&p| p < 0) {
            return Err(ModelError::NegativePrice {
                object: instance.object_id(i).to_string(),
                value: prices[i],
            });
        }
        Ok(Prices(prices))
    }

    /// Reads an `{object id: price}` map; absent objects get price 0.
    pub fn from_id_map(
        instance: &Instance,
        map: &BTreeMap<String, Number>,
    ) -> Result<Self, ModelError> {
        let mut prices = vec![0; instance.num_objects()];
        for (id, value) in map {
            let i = instance
                .object_index(id)
                .ok_or_else(|| ModelError::UnknownObject {
                    buyer: "<prices>".into(),
                    object: id.clone(),
                })?;
            prices[i] = integer(value, id, "price")?;
        }
        Prices::new(instance, prices)
    }

    pub fn to_id_map(&self, instance: &Instance) -> BTreeMap<String, i64> {
        self.0
            .iter()
            .enumerate()
            .map(|(i, &p)| (instance.object_id(i).to_string(), p))
            .collect()
    }

    pub fn get(&self, i: usize) -> i64 {
        self.0[i]
    }

    pub fn as_slice(&self) -> &[i64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `self + step·χ_set`. Returns `None` on overflow.
    pub fn raised(&self, set: &BTreeSet<usize>, step: i64) -> Option<Prices> {
        let mut next = self.0.clone();
        for &i in set {
            next[i] = next[i].checked_add(step)?;
        }
        Some(Prices(next))
    }

    /// Component-wise `self <= other`.
    pub fn le(&self, other: &Prices) -> bool {
        self.0.len() == other.0.len() && self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    /// Component-wise minimum.
    pub fn meet(&self, other: &Prices) -> Prices {
        Prices(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| *a.min(b))
                .collect(),
        )
    }

    pub fn linf_distance(&self, other: &Prices) -> i64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .max()
            .unwrap_or(0)
    }

    pub fn push(&mut self, price: i64) {
        self.0.push(price);
    }
}

impl From<Prices> for Vec<i64> {
    fn from(p: Prices) -> Self {
        p.0
    }
}

/// Units of each object assigned to each buyer, `x[i][j]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Allocation {
    quantity: Vec<Vec<i64>>,
}

impl Allocation {
    pub fn empty(num_objects: usize, num_buyers: usize) -> Self {
        Allocation {
            quantity: vec![vec![0; num_buyers]; num_objects],
        }
    }

    /// `quantity[i][j]` units of object `i` to buyer `j`.
    pub fn from_matrix(quantity: Vec<Vec<i64>>) -> Self {
        Allocation { quantity }
    }

    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.quantity[i][j]
    }

    pub fn set(&mut self, i: usize, j: usize, units: i64) {
        self.quantity[i][j] = units;
    }

    pub fn num_objects(&self) -> usize {
        self.quantity.len()
    }

    pub fn num_buyers(&self) -> usize {
        self.quantity.first().map_or(0, Vec::len)
    }

    /// Units of object `i` sold.
    pub fn sold(&self, i: usize) -> i64 {
        self.quantity[i].iter().sum()
    }

    /// Units received by buyer `j`.
    pub fn received(&self, j: usize) -> i64 {
        self.quantity.iter().map(|row| row[j]).sum()
    }

    pub fn total(&self) -> i64 {
        self.quantity.iter().flatten().sum()
    }

    /// Row and column feasibility against the instance.
    pub fn is_feasible(&self, instance: &Instance) -> bool {
        self.quantity.len() == instance.num_objects()
            && self
                .quantity
                .iter()
                .all(|r| r.len() == instance.num_buyers())
            && self.quantity.iter().flatten().all(|&x| x >= 0)
            && (0..instance.num_objects()).all(|i| self.sold(i) <= instance.supply(i))
            && (0..instance.num_buyers()).all(|j| self.received(j) <= instance.demand(j))
    }

    /// `{buyer: {object: units}}` with zero entries omitted.
    pub fn to_id_map(&self, instance: &Instance) -> BTreeMap<String, BTreeMap<String, i64>> {
        let mut out = BTreeMap::new();
        for j in 0..instance.num_buyers() {
            let bundle: BTreeMap<String, i64> = (0..instance.num_objects())
                .filter(|&i| self.quantity[i][j] > 0)
                .map(|i| (instance.object_id(i).to_string(), self.quantity[i][j]))
                .collect();
            if !bundle.is_empty() {
                out.insert(instance.buyer_id(j).to_string(), bundle);
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DummyKind {
    None,
    Object,
    Buyer,
}

/// What [`balance_instance`] added, if anything.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DummyInfo {
    pub kind: DummyKind,
    pub id: Option<String>,
    pub size: i64,
}

/// Equalizes total supply and demand with a zero-valued dummy object or
/// buyer appended at the end of the canonical order.
pub fn balance_instance(instance: &Instance) -> (Instance, DummyInfo) {
    let total_b = instance.total_supply();
    let total_d = instance.total_demand();
    let mut balanced = instance.clone();
    let info = if total_b < total_d {
        let size = total_d - total_b;
        balanced.objects.push(DUMMY_OBJECT_ID.to_string());
        balanced.supplies.push(size);
        for row in &mut balanced.values {
            row.push(0);
        }
        DummyInfo {
            kind: DummyKind::Object,
            id: Some(DUMMY_OBJECT_ID.to_string()),
            size,
        }
    } else if total_b > total_d {
        let size = total_b - total_d;
        balanced.buyers.push(DUMMY_BUYER_ID.to_string());
        balanced.demands.push(size);
        balanced.values.push(vec![0; instance.num_objects()]);
        DummyInfo {
            kind: DummyKind::Buyer,
            id: Some(DUMMY_BUYER_ID.to_string()),
            size,
        }
    } else {
        DummyInfo {
            kind: DummyKind::None,
            id: None,
            size: 0,
        }
    };
    (balanced, info)
}

/// Splits every object into `b_i` unit-supply copies and every buyer into
/// `d_j` unit-demand copies. Copy `k` (1-based) of `x` is named `x#k`.
pub fn duplicate_instance(instance: &Instance) -> Instance {
    let mut objects = Vec::new();
    let mut origin = Vec::new();
    for i in 0..instance.num_objects() {
        for k in 1..=instance.supply(i) {
            objects.push((format!("{}#{k}", instance.object_id(i)), 1));
            origin.push(i);
        }
    }
    let mut buyers = Vec::new();
    let mut values = Vec::new();
    for j in 0..instance.num_buyers() {
        for k in 1..=instance.demand(j) {
            buyers.push((format!("{}#{k}", instance.buyer_id(j)), 1));
            values.push(origin.iter().map(|&i| instance.value(i, j)).collect());
        }
    }
    Instance::new(objects, buyers, values).expect("copies of a valid instance are valid")
}
