//! Aggregation operators.
//!
//! Criteria are aggregated with the 2-additive Choquet integral written in
//! Möbius form,
//!
//! ```text
//! C(x) = Σ_i m_i·x_i + Σ_{i<j} m_ij·min(x_i, x_j)
//! ```
//!
//! and samples of one metric are aggregated with an ordered weighted average
//! whose weights apply to the samples sorted ascending (worst first).
//!
//! The general sort-based Choquet integral over an explicit set function is
//! kept alongside as a brute-force reference; [`capacity_from_mobius`] builds
//! the set function induced by a 2-additive capacity so both routes can be
//! compared.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default tolerance for the normalization and monotonicity checks.
pub const CAPACITY_TOLERANCE: f64 = 1e-9;

/// Largest criteria count for which an explicit `2^n` set function is built.
pub const MAX_SET_FUNCTION_CRITERIA: usize = 20;

#[derive(Debug, Error, PartialEq)]
pub enum AggregationError {
    #[error("expected {expected} inputs, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid capacity: {0}")]
    InvalidCapacity(String),
    #[error("set function over {0} criteria exceeds the {MAX_SET_FUNCTION_CRITERIA}-criteria limit")]
    TooManyCriteria(usize),
    #[error("cannot aggregate an empty sample set")]
    EmptySamples,
    #[error("invalid OWA weights: {0}")]
    InvalidWeights(String),
    #[error("quantifier exponent must be >= 1, got {0}")]
    OptimisticQuantifier(f64),
}

/// A 2-additive capacity given by its Möbius coefficients.
///
/// Pairwise coefficients are indexed by unordered criterion pairs; criteria are
/// indexed by child position in the criteria tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CapacityRepr", into = "CapacityRepr")]
pub struct MobiusCapacity {
    singletons: Vec<f64>,
    // upper triangle, row-major: (0,1), (0,2), .., (1,2), ..
    pairs: Vec<f64>,
}

fn pair_index(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i < j { (i, j) } else { (j, i) };
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

impl MobiusCapacity {
    /// Builds a capacity from singleton coefficients and a list of pairwise
    /// interaction coefficients. Unlisted pairs are zero.
    pub fn new(singletons: Vec<f64>, interactions: &[((usize, usize), f64)]) -> Result<Self, AggregationError> {
        let n = singletons.len();
        let mut pairs = vec![0.0; n * n.saturating_sub(1) / 2];
        let mut seen = vec![false; pairs.len()];
        for &((i, j), value) in interactions {
            if i == j || i >= n || j >= n {
                return Err(AggregationError::InvalidCapacity(format!(
                    "interaction ({i}, {j}) is not a pair of distinct criteria among {n}"
                )));
            }
            let k = pair_index(n, i, j);
            if seen[k] {
                return Err(AggregationError::InvalidCapacity(format!("interaction ({i}, {j}) listed twice")));
            }
            seen[k] = true;
            pairs[k] = value;
        }
        Ok(Self { singletons, pairs })
    }

    /// Additive capacity: no interactions, `m_i = weights[i]`.
    pub fn additive(weights: Vec<f64>) -> Self {
        let n = weights.len();
        Self { singletons: weights, pairs: vec![0.0; n * n.saturating_sub(1) / 2] }
    }

    /// Uniform additive capacity, `m_i = 1/n`.
    pub fn uniform(n: usize) -> Self {
        Self::additive(vec![1.0 / n as f64; n])
    }

    pub fn len(&self) -> usize {
        self.singletons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.singletons.is_empty()
    }

    pub fn singleton(&self, i: usize) -> f64 {
        self.singletons[i]
    }

    pub fn singletons(&self) -> &[f64] {
        &self.singletons
    }

    /// Möbius coefficient `m_ij`, which for a 2-additive capacity is also the
    /// Shapley interaction index of the pair.
    pub fn interaction(&self, i: usize, j: usize) -> f64 {
        assert!(i != j, "interaction of a criterion with itself");
        self.pairs[pair_index(self.len(), i, j)]
    }

    /// Iterates `((i, j), m_ij)` over all pairs with `i < j`.
    pub fn pairs(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        let n = self.len();
        (0..n).flat_map(move |i| (i + 1..n).map(move |j| ((i, j), self.pairs[pair_index(n, i, j)])))
    }

    /// 2-additive Choquet integral of `x`.
    pub fn choquet(&self, x: &[f64]) -> Result<f64, AggregationError> {
        choquet_2add(self, x)
    }

    /// Shapley importance of each criterion.
    pub fn shapley(&self) -> Vec<f64> {
        shapley(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct InteractionRepr {
    pair: [usize; 2],
    value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CapacityRepr {
    singletons: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    interactions: Vec<InteractionRepr>,
}

impl TryFrom<CapacityRepr> for MobiusCapacity {
    type Error = AggregationError;

    fn try_from(r: CapacityRepr) -> Result<Self, Self::Error> {
        let list: Vec<_> = r.interactions.iter().map(|p| ((p.pair[0], p.pair[1]), p.value)).collect();
        MobiusCapacity::new(r.singletons, &list)
    }
}

impl From<MobiusCapacity> for CapacityRepr {
    fn from(c: MobiusCapacity) -> Self {
        let interactions = c
            .pairs()
            .filter(|&(_, v)| v != 0.0)
            .map(|((i, j), value)| InteractionRepr { pair: [i, j], value })
            .collect();
        CapacityRepr { singletons: c.singletons, interactions }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CapacityViolation {
    NonFinite,
    /// Coefficients do not sum to one.
    Normalization { sum: f64 },
    /// `m_i + Σ_j min(0, m_ij)` is negative for criterion `criterion`.
    Monotonicity { criterion: usize, margin: f64 },
}

impl fmt::Display for CapacityViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NonFinite => write!(f, "capacity has non-finite coefficients"),
            Self::Normalization { sum } => write!(f, "coefficients sum to {sum}, expected 1"),
            Self::Monotonicity { criterion, margin } => {
                write!(f, "monotonicity fails on criterion {criterion} (margin {margin})")
            }
        }
    }
}

/// Checks normalization and monotonicity at [`CAPACITY_TOLERANCE`].
pub fn validate_capacity(c: &MobiusCapacity) -> Vec<CapacityViolation> {
    validate_capacity_with_tolerance(c, CAPACITY_TOLERANCE)
}

/// For a 2-additive capacity, monotonicity of the induced set function is
/// equivalent to `m_i + Σ_{j≠i} min(0, m_ij) >= 0` for every `i`.
pub fn validate_capacity_with_tolerance(c: &MobiusCapacity, tolerance: f64) -> Vec<CapacityViolation> {
    if c.singletons.iter().chain(&c.pairs).any(|v| !v.is_finite()) {
        return vec![CapacityViolation::NonFinite];
    }
    let mut out = Vec::new();
    let sum: f64 = c.singletons.iter().sum::<f64>() + c.pairs.iter().sum::<f64>();
    if (sum - 1.0).abs() > tolerance {
        out.push(CapacityViolation::Normalization { sum });
    }
    let n = c.len();
    for i in 0..n {
        let margin = c.singletons[i] + (0..n).filter(|&j| j != i).map(|j| c.interaction(i, j).min(0.0)).sum::<f64>();
        if margin < -tolerance {
            out.push(CapacityViolation::Monotonicity { criterion: i, margin });
        }
    }
    out
}

fn ensure_valid(c: &MobiusCapacity) -> Result<(), AggregationError> {
    let violations = validate_capacity(c);
    if violations.is_empty() {
        Ok(())
    } else {
        let msg = violations.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ");
        Err(AggregationError::InvalidCapacity(msg))
    }
}

/// 2-additive Choquet integral in Möbius form.
pub fn choquet_2add(c: &MobiusCapacity, x: &[f64]) -> Result<f64, AggregationError> {
    if x.len() != c.len() {
        return Err(AggregationError::DimensionMismatch { expected: c.len(), got: x.len() });
    }
    ensure_valid(c)?;
    let linear: f64 = c.singletons.iter().zip(x).map(|(m, xi)| m * xi).sum();
    let pairwise: f64 = c.pairs().map(|((i, j), m)| m * x[i].min(x[j])).sum();
    Ok(linear + pairwise)
}

/// Shapley values `φ_i = m_i + ½·Σ_{j≠i} m_ij`.
pub fn shapley(c: &MobiusCapacity) -> Vec<f64> {
    let n = c.len();
    (0..n)
        .map(|i| c.singletons[i] + 0.5 * (0..n).filter(|&j| j != i).map(|j| c.interaction(i, j)).sum::<f64>())
        .collect()
}

/// A set function over `n` criteria stored as a `2^n` table indexed by
/// subset bitmask (bit `i` set means criterion `i` is in the subset).
#[derive(Debug, Clone, PartialEq)]
pub struct SetFunction {
    n: usize,
    values: Vec<f64>,
}

impl SetFunction {
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self, AggregationError> {
        if n > MAX_SET_FUNCTION_CRITERIA {
            return Err(AggregationError::TooManyCriteria(n));
        }
        if values.len() != 1 << n {
            return Err(AggregationError::DimensionMismatch { expected: 1 << n, got: values.len() });
        }
        Ok(Self { n, values })
    }

    pub fn from_fn(n: usize, f: impl Fn(usize) -> f64) -> Result<Self, AggregationError> {
        if n > MAX_SET_FUNCTION_CRITERIA {
            return Err(AggregationError::TooManyCriteria(n));
        }
        Self::new(n, (0..1usize << n).map(f).collect())
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn value(&self, mask: usize) -> f64 {
        self.values[mask]
    }

    pub fn full_set(&self) -> usize {
        (1 << self.n) - 1
    }

    /// Pairs `(subset, superset-with-one-more)` where the value drops by more
    /// than `tolerance`.
    pub fn monotonicity_violations(&self, tolerance: f64) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for mask in 0..self.values.len() {
            for i in 0..self.n {
                let bigger = mask | (1 << i);
                if bigger != mask && self.values[bigger] < self.values[mask] - tolerance {
                    out.push((mask, bigger));
                }
            }
        }
        out
    }

    pub fn is_monotone(&self) -> bool {
        self.monotonicity_violations(CAPACITY_TOLERANCE).is_empty()
    }
}

/// Set function induced by a Möbius capacity:
/// `μ(S) = Σ_{i∈S} m_i + Σ_{{i,j}⊆S} m_ij`.
pub fn capacity_from_mobius(c: &MobiusCapacity) -> Result<SetFunction, AggregationError> {
    let n = c.len();
    SetFunction::from_fn(n, |mask| {
        let mut v = 0.0;
        for i in (0..n).filter(|i| mask & (1 << i) != 0) {
            v += c.singletons[i];
            for j in (i + 1..n).filter(|j| mask & (1 << j) != 0) {
                v += c.interaction(i, j);
            }
        }
        v
    })
}

/// Classical sort-based Choquet integral
/// `Σ_k (x_(k) − x_(k−1))·μ(A_k)`, with `x` sorted ascending and `A_k` the
/// criteria whose value is at least `x_(k)`.
///
/// Monotonicity of `mu` is not checked; a non-monotone set function still
/// yields a number, see [`SetFunction::monotonicity_violations`].
pub fn choquet_general(mu: &SetFunction, x: &[f64]) -> Result<f64, AggregationError> {
    if x.len() != mu.len() {
        return Err(AggregationError::DimensionMismatch { expected: mu.len(), got: x.len() });
    }
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut survivors = mu.full_set();
    let mut prev = 0.0;
    let mut total = 0.0;
    for &i in &order {
        total += (x[i] - prev) * mu.value(survivors);
        prev = x[i];
        survivors &= !(1 << i);
    }
    Ok(total)
}

/// OWA weights, applied to samples sorted ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct OwaWeights(Vec<f64>);

impl OwaWeights {
    pub fn new(weights: Vec<f64>) -> Result<Self, AggregationError> {
        if weights.is_empty() {
            return Err(AggregationError::InvalidWeights("empty weight vector".into()));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(AggregationError::InvalidWeights(format!("weight {w} is negative or not finite")));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > CAPACITY_TOLERANCE {
            return Err(AggregationError::InvalidWeights(format!("weights sum to {sum}, expected 1")));
        }
        Ok(Self(weights))
    }

    pub fn uniform(n: usize) -> Result<Self, AggregationError> {
        Self::new(vec![1.0 / n as f64; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_nonincreasing(&self) -> bool {
        self.0.windows(2).all(|w| w[1] <= w[0] + CAPACITY_TOLERANCE)
    }
}

impl TryFrom<Vec<f64>> for OwaWeights {
    type Error = AggregationError;

    fn try_from(v: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<OwaWeights> for Vec<f64> {
    fn from(w: OwaWeights) -> Self {
        w.0
    }
}

/// `Σ_k w_k·s_(k)` with `s` sorted ascending.
pub fn owa(w: &OwaWeights, samples: &[f64]) -> Result<f64, AggregationError> {
    if samples.is_empty() {
        return Err(AggregationError::EmptySamples);
    }
    if w.len() != samples.len() {
        return Err(AggregationError::DimensionMismatch { expected: w.len(), got: samples.len() });
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(w.0.iter().zip(&sorted).map(|(w, s)| w * s).sum())
}

/// Pessimistic quantifier `Q(p) = 1 − (1 − p)^alpha`.
pub fn quantifier(alpha: f64, p: f64) -> f64 {
    1.0 - (1.0 - p.clamp(0.0, 1.0)).powf(alpha)
}

/// Weights `w_k = Q(k/n) − Q((k−1)/n)` for the quantifier above. `alpha = 1`
/// gives uniform weights; larger values shift weight onto the worst samples.
pub fn owa_weights_from_quantifier(alpha: f64, n: usize) -> Result<OwaWeights, AggregationError> {
    if !(alpha >= 1.0) || !alpha.is_finite() {
        return Err(AggregationError::OptimisticQuantifier(alpha));
    }
    if n == 0 {
        return Err(AggregationError::EmptySamples);
    }
    let nf = n as f64;
    let w = (1..=n).map(|k| quantifier(alpha, k as f64 / nf) - quantifier(alpha, (k - 1) as f64 / nf)).collect();
    OwaWeights::new(w)
}
