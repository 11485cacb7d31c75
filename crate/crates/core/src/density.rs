//! Kernel density estimates of normalized scores and gauge scores.
//!
//! A gauge condenses the distribution of one leaf's normalized samples into a
//! single value in `[0, 1]` using an OWA weight profile. Three readings are
//! available:
//!
//! * [`GaugeMode::DiscreteOwa`]: OWA over the raw sorted samples.
//! * [`GaugeMode::SmoothedQuantileOwa`]: `∫₀¹ w(p)·F⁻¹(p) dp`, the continuous
//!   OWA of the KDE distribution `F` under the weight density `w`.
//! * [`GaugeMode::LiteralProduct`]: `∫₀¹ u·f̂(u)·ŵ(u) du`, integrating the
//!   density curve times the weight curve over the score axis. This is not an
//!   OWA functional and is not idempotent; reports flag it as figure-literal.
//!
//! The KDE uses a Gaussian kernel reflected at 0 and 1 and Silverman's rule
//! of thumb for the default bandwidth.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aggregation::{owa, owa_weights_from_quantifier, quantifier, AggregationError, OwaWeights};

pub const DEFAULT_GRID_SIZE: usize = 512;
pub const MIN_BANDWIDTH: f64 = 1e-3;

#[derive(Debug, Error, PartialEq)]
pub enum DensityError {
    #[error("cannot estimate a density from an empty sample set")]
    EmptySamples,
    #[error("sample {0} is outside [0, 1]")]
    OutOfUnitInterval(f64),
    #[error("grid needs at least 2 points, got {0}")]
    InvalidGrid(usize),
    #[error("bandwidth must be positive and finite, got {0}")]
    InvalidBandwidth(f64),
    #[error("unknown gauge mode `{0}` (expected discrete-owa, smoothed-quantile-owa or literal-product)")]
    UnknownMode(String),
    #[error(transparent)]
    Weights(#[from] AggregationError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GaugeMode {
    #[default]
    DiscreteOwa,
    SmoothedQuantileOwa,
    LiteralProduct,
}

impl GaugeMode {
    pub const ALL: [GaugeMode; 3] = [Self::DiscreteOwa, Self::SmoothedQuantileOwa, Self::LiteralProduct];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::DiscreteOwa => "discrete-owa",
            Self::SmoothedQuantileOwa => "smoothed-quantile-owa",
            Self::LiteralProduct => "literal-product",
        }
    }

    /// Modes that integrate against the sample quantile function, and so are
    /// idempotent and nonincreasing in the pessimism exponent.
    pub fn is_quantile_based(self) -> bool {
        !matches!(self, Self::LiteralProduct)
    }
}

impl fmt::Display for GaugeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GaugeMode {
    type Err = DensityError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|m| m.as_str() == s).ok_or_else(|| DensityError::UnknownMode(s.to_string()))
    }
}

/// How OWA weights are obtained for a sample set.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightSpec {
    /// Generated from `Q(p) = 1 − (1 − p)^alpha` for whatever sample count
    /// the leaf has.
    Quantifier { alpha: f64 },
    /// Fixed weight vector; only usable when the sample count matches.
    Explicit(Vec<f64>),
}

impl WeightSpec {
    /// Weights for `n` samples.
    pub fn weights_for(&self, n: usize) -> Result<OwaWeights, AggregationError> {
        match self {
            Self::Quantifier { alpha } => owa_weights_from_quantifier(*alpha, n),
            Self::Explicit(w) => {
                if w.len() != n {
                    return Err(AggregationError::DimensionMismatch { expected: w.len(), got: n });
                }
                OwaWeights::new(w.clone())
            }
        }
    }

    /// Cumulative weight `W(p)` over the quantile axis.
    fn cumulative(&self, p: f64) -> f64 {
        match self {
            Self::Quantifier { alpha } => quantifier(*alpha, p),
            Self::Explicit(w) => {
                let n = w.len() as f64;
                let pos = (p.clamp(0.0, 1.0) * n).min(n);
                let whole = pos.floor() as usize;
                let head: f64 = w[..whole.min(w.len())].iter().sum();
                let frac = pos - whole as f64;
                head + if whole < w.len() { frac * w[whole] } else { 0.0 }
            }
        }
    }

    /// Weight density `W'(p)`, the curve drawn next to the score density.
    fn density(&self, p: f64) -> f64 {
        match self {
            Self::Quantifier { alpha } => alpha * (1.0 - p).max(0.0).powf(alpha - 1.0),
            Self::Explicit(w) => {
                let n = w.len();
                let k = ((p * n as f64).floor() as usize).min(n - 1);
                w[k] * n as f64
            }
        }
    }
}

/// OWA settings for a leaf: the weight profile and the gauge reading.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "OwaConfigRepr", into = "OwaConfigRepr")]
pub struct OwaConfig {
    pub weights: WeightSpec,
    pub mode: GaugeMode,
}

impl OwaConfig {
    pub fn quantifier(alpha: f64, mode: GaugeMode) -> Self {
        Self { weights: WeightSpec::Quantifier { alpha }, mode }
    }

    /// Checks the weight profile independently of any sample count.
    pub fn check(&self) -> Result<(), String> {
        match &self.weights {
            WeightSpec::Quantifier { alpha } => {
                owa_weights_from_quantifier(*alpha, 1).map(|_| ()).map_err(|e| e.to_string())
            }
            WeightSpec::Explicit(w) => OwaWeights::new(w.clone()).map(|_| ()).map_err(|e| e.to_string()),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct OwaConfigRepr {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weights: Option<Vec<f64>>,
    #[serde(default)]
    mode: GaugeMode,
}

impl TryFrom<OwaConfigRepr> for OwaConfig {
    type Error = String;

    fn try_from(r: OwaConfigRepr) -> Result<Self, Self::Error> {
        let weights = match (r.alpha, r.weights) {
            (Some(alpha), None) => WeightSpec::Quantifier { alpha },
            (None, Some(w)) => WeightSpec::Explicit(w),
            (Some(_), Some(_)) => return Err("give either `alpha` or `weights`, not both".into()),
            (None, None) => return Err("missing `alpha` or `weights`".into()),
        };
        Ok(Self { weights, mode: r.mode })
    }
}

impl From<OwaConfig> for OwaConfigRepr {
    fn from(c: OwaConfig) -> Self {
        let (alpha, weights) = match c.weights {
            WeightSpec::Quantifier { alpha } => (Some(alpha), None),
            WeightSpec::Explicit(w) => (None, Some(w)),
        };
        Self { alpha, weights, mode: c.mode }
    }
}

/// Density values on a uniform grid over `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityEstimate {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub bandwidth: f64,
}

pub fn unit_grid(size: usize) -> Vec<f64> {
    let last = (size - 1) as f64;
    (0..size).map(|i| i as f64 / last).collect()
}

/// Trapezoidal integral of `values` over `grid`.
pub fn trapezoid(grid: &[f64], values: &[f64]) -> f64 {
    grid.windows(2).zip(values.windows(2)).map(|(g, v)| 0.5 * (g[1] - g[0]) * (v[0] + v[1])).sum()
}

impl DensityEstimate {
    pub fn integral(&self) -> f64 {
        trapezoid(&self.grid, &self.values)
    }

    pub fn cdf(&self) -> Cdf {
        cdf_and_quantile(self)
    }
}

fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Silverman's rule `0.9·min(σ, IQR/1.34)·n^(−1/5)`.
///
/// When the interquartile range is zero but the sample still has spread, the
/// standard deviation alone is used, which avoids a spike at a repeated value.
/// The caller applies the lower floor.
pub fn silverman_bandwidth(samples: &[f64]) -> f64 {
    let n = samples.len();
    if n < 2 {
        return 0.0;
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let sd = var.sqrt();
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
    let spread = match (sd > 0.0, iqr > 0.0) {
        (true, true) => sd.min(iqr / 1.34),
        (true, false) => sd,
        _ => 0.0,
    };
    0.9 * spread * (n as f64).powf(-0.2)
}

fn gaussian(z: f64) -> f64 {
    const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
    INV_SQRT_2PI * (-0.5 * z * z).exp()
}

/// Gaussian KDE on a uniform grid over `[0, 1]`, reflected at both ends.
///
/// Reflection is done with the full image series (`x + 2k` and `2k − x`) out
/// to eight bandwidths, so no mass leaks out of the unit interval. The
/// bandwidth is floored at [`MIN_BANDWIDTH`] and at the grid step, below which
/// trapezoidal integration of the kernel is no longer accurate.
pub fn kde(samples: &[f64], grid_size: usize, bandwidth: Option<f64>) -> Result<DensityEstimate, DensityError> {
    if samples.is_empty() {
        return Err(DensityError::EmptySamples);
    }
    if grid_size < 2 {
        return Err(DensityError::InvalidGrid(grid_size));
    }
    if let Some(&x) = samples.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(DensityError::OutOfUnitInterval(x));
    }
    let step = 1.0 / (grid_size - 1) as f64;
    let h = match bandwidth {
        Some(h) if !(h > 0.0 && h.is_finite()) => return Err(DensityError::InvalidBandwidth(h)),
        Some(h) => h,
        None => silverman_bandwidth(samples),
    }
    .max(MIN_BANDWIDTH)
    .max(step);

    let reach = 8.0 * h;
    let k_lo = ((-reach - 1.0) / 2.0).floor() as i64;
    let k_hi = ((1.0 + reach + 1.0) / 2.0).ceil() as i64;
    let images = reflected_images(samples, k_lo, k_hi, reach);

    let grid = unit_grid(grid_size);
    let norm = 1.0 / (samples.len() as f64 * h);
    let values = grid
        .iter()
        .map(|&u| {
            let lo = images.partition_point(|&y| y < u - reach);
            let hi = images.partition_point(|&y| y <= u + reach);
            norm * images[lo..hi].iter().map(|&y| gaussian((u - y) / h)).sum::<f64>()
        })
        .collect();
    Ok(DensityEstimate { grid, values, bandwidth: h })
}

/// Sorted images `x + 2k` and `2k − x` within `reach` of `[0, 1]`. At `x = 0`
/// or `x = 1` the two families coincide; both copies stay, each carrying the
/// half of the kernel that folds back into the interval.
fn reflected_images(samples: &[f64], k_lo: i64, k_hi: i64, reach: f64) -> Vec<f64> {
    let mut images = Vec::with_capacity(samples.len() * 4);
    for &x in samples {
        for k in k_lo..=k_hi {
            let shift = 2.0 * k as f64;
            for y in [x + shift, shift - x] {
                if (-reach..=1.0 + reach).contains(&y) {
                    images.push(y);
                }
            }
        }
    }
    images.sort_by(f64::total_cmp);
    images
}

/// Cumulative distribution of a [`DensityEstimate`] on its grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Cdf {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

impl Cdf {
    pub fn total(&self) -> f64 {
        *self.values.last().unwrap_or(&0.0)
    }

    /// Piecewise-linear inverse of the normalized CDF. Flat stretches resolve
    /// to their lowest grid point.
    pub fn quantile(&self, p: f64) -> f64 {
        let total = self.total();
        if total <= 0.0 {
            return self.grid[0];
        }
        let target = p.clamp(0.0, 1.0) * total;
        let i = self.values.partition_point(|&c| c < target);
        if i == 0 {
            return self.grid[0];
        }
        if i >= self.values.len() {
            return self.grid[self.grid.len() - 1];
        }
        let (c0, c1) = (self.values[i - 1], self.values[i]);
        let (g0, g1) = (self.grid[i - 1], self.grid[i]);
        g0 + (target - c0) / (c1 - c0) * (g1 - g0)
    }
}

/// Running trapezoidal integral of the density, starting at 0.
pub fn cdf_and_quantile(d: &DensityEstimate) -> Cdf {
    let mut values = Vec::with_capacity(d.values.len());
    let mut acc = 0.0;
    values.push(0.0);
    for (g, v) in d.grid.windows(2).zip(d.values.windows(2)) {
        acc += 0.5 * (g[1] - g[0]) * (v[0] + v[1]);
        values.push(acc);
    }
    Cdf { grid: d.grid.clone(), values }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaugeScore {
    pub score: f64,
    pub mode: GaugeMode,
    pub density: DensityEstimate,
    /// Weight density on the same grid as `density`.
    pub weight_curve: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KdeOptions {
    pub grid_size: usize,
    pub bandwidth: Option<f64>,
}

impl Default for KdeOptions {
    fn default() -> Self {
        Self { grid_size: DEFAULT_GRID_SIZE, bandwidth: None }
    }
}

/// Gauge score with the default grid and Silverman bandwidth.
pub fn gauge_score(samples: &[f64], weights: &WeightSpec, mode: GaugeMode) -> Result<GaugeScore, DensityError> {
    gauge_score_with(samples, weights, mode, KdeOptions::default())
}

/// Gauge score of normalized `samples`.
///
/// The density and weight curves are always computed so reports can show
/// them. In the quantile-based modes a sample set without spread is a point
/// mass and scores exactly its value; kernel smoothing would only add
/// artefacts there.
pub fn gauge_score_with(
    samples: &[f64],
    weights: &WeightSpec,
    mode: GaugeMode,
    opts: KdeOptions,
) -> Result<GaugeScore, DensityError> {
    let density = kde(samples, opts.grid_size, opts.bandwidth)?;
    let weight_curve: Vec<f64> = density.grid.iter().map(|&p| weights.density(p)).collect();
    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let score = match mode {
        GaugeMode::DiscreteOwa => owa(&weights.weights_for(samples.len())?, samples)?,
        GaugeMode::SmoothedQuantileOwa => {
            // validates the weight spec for this sample count
            weights.weights_for(samples.len())?;
            if hi - lo <= 0.0 {
                lo
            } else {
                let cdf = density.cdf();
                let cells = opts.grid_size - 1;
                (0..cells)
                    .map(|k| {
                        let p0 = k as f64 / cells as f64;
                        let p1 = (k + 1) as f64 / cells as f64;
                        let mass = weights.cumulative(p1) - weights.cumulative(p0);
                        mass * cdf.quantile(0.5 * (p0 + p1))
                    })
                    .sum()
            }
        }
        GaugeMode::LiteralProduct => {
            weights.weights_for(samples.len())?;
            let integrand: Vec<f64> = density
                .grid
                .iter()
                .zip(&density.values)
                .zip(&weight_curve)
                .map(|((u, f), w)| u * f * w)
                .collect();
            trapezoid(&density.grid, &integrand)
        }
    };
    Ok(GaugeScore { score: score.clamp(0.0, 1.0), mode, density, weight_curve })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn argmax(v: &[f64]) -> usize {
        v.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0
    }

    #[test]
    fn single_sample_kernel() {
        let d = kde(&[0.5], DEFAULT_GRID_SIZE, Some(0.1)).unwrap();
        let nearest = (0.5 * 511.0f64).round() as usize;
        assert!(argmax(&d.values).abs_diff(nearest) <= 1);
        assert_abs_diff_eq!(d.integral(), 1.0, epsilon = 1e-3);
        // unimodal
        let peak = argmax(&d.values);
        assert!(d.values[..=peak].windows(2).all(|w| w[1] >= w[0]));
        assert!(d.values[peak..].windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn repeated_value_peaks_there() {
        let d = kde(&[0.7; 20], DEFAULT_GRID_SIZE, None).unwrap();
        assert_abs_diff_eq!(d.grid[argmax(&d.values)], 0.7, epsilon = 1.0 / 511.0);
        assert_abs_diff_eq!(d.integral(), 1.0, epsilon = 1e-3);
    }

    #[test]
    fn uniform_draws_give_flat_density() {
        // Monte-Carlo check, frozen seed. Interior points only see sampling
        // noise; reflection keeps the edges near 1 as well.
        let mut rng = ChaCha8Rng::seed_from_u64(20190923);
        let xs: Vec<f64> = (0..1000).map(|_| rng.gen::<f64>()).collect();
        let d = kde(&xs, DEFAULT_GRID_SIZE, None).unwrap();
        let worst = d.values.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
        assert!(worst < 0.2, "max deviation {worst}");
    }

    #[test]
    fn boundary_samples_keep_mass() {
        for xs in [vec![0.0], vec![1.0], vec![0.0, 0.0, 1.0], vec![0.001, 0.002, 0.0]] {
            let d = kde(&xs, DEFAULT_GRID_SIZE, None).unwrap();
            assert_abs_diff_eq!(d.integral(), 1.0, epsilon = 1e-3);
        }
        let wide = kde(&[0.0, 1.0], DEFAULT_GRID_SIZE, Some(2.0)).unwrap();
        assert_abs_diff_eq!(wide.integral(), 1.0, epsilon = 1e-3);
    }

    #[test]
    fn kde_rejects_bad_input() {
        assert_eq!(kde(&[], 512, None), Err(DensityError::EmptySamples));
        assert_eq!(kde(&[1.5], 512, None), Err(DensityError::OutOfUnitInterval(1.5)));
        assert_eq!(kde(&[0.5], 1, None), Err(DensityError::InvalidGrid(1)));
        assert_eq!(kde(&[0.5], 512, Some(-1.0)), Err(DensityError::InvalidBandwidth(-1.0)));
    }

    #[test]
    fn silverman_matches_hand_computation() {
        let xs = [0.1, 0.2, 0.4, 0.8];
        // mean 0.375, sample sd = sqrt(0.2675/3); type-7 quartiles 0.175 and 0.5
        let sd = (0.2675f64 / 3.0).sqrt();
        let iqr = 0.5 - 0.175;
        let expected = 0.9 * sd.min(iqr / 1.34) * 4f64.powf(-0.2);
        assert_abs_diff_eq!(silverman_bandwidth(&xs), expected, epsilon = 1e-12);
        assert_eq!(silverman_bandwidth(&[0.3]), 0.0);
    }

    #[test]
    fn cdf_of_uniform_density() {
        let grid = unit_grid(DEFAULT_GRID_SIZE);
        let d = DensityEstimate { values: vec![1.0; grid.len()], grid, bandwidth: 0.0 };
        let cdf = d.cdf();
        for (g, c) in cdf.grid.iter().zip(&cdf.values) {
            assert_abs_diff_eq!(g, c, epsilon = 1e-12);
        }
        for p in [0.0, 0.1, 0.5, 0.93, 1.0] {
            assert_abs_diff_eq!(cdf.quantile(p), p, epsilon = 1.0 / 511.0);
        }
    }

    #[test]
    fn quantile_of_point_mass() {
        let d = kde(&[0.7], DEFAULT_GRID_SIZE, None).unwrap();
        let cdf = d.cdf();
        for p in [0.011, 0.25, 0.5, 0.75, 0.989] {
            assert_abs_diff_eq!(cdf.quantile(p), 0.7, epsilon = 0.01);
        }
    }

    #[test]
    fn quantile_of_two_peak_mixture() {
        // Analytic mixture CDF: with narrow equal peaks at 0.2 and 0.8 the
        // quartiles sit at the peaks.
        let d = kde(&[0.2, 0.8], DEFAULT_GRID_SIZE, Some(0.02)).unwrap();
        let cdf = d.cdf();
        assert_abs_diff_eq!(cdf.total(), 1.0, epsilon = 1e-3);
        assert_abs_diff_eq!(cdf.quantile(0.25), 0.2, epsilon = 0.05);
        assert_abs_diff_eq!(cdf.quantile(0.75), 0.8, epsilon = 0.05);
    }

    #[test]
    fn degenerate_gauges() {
        for alpha in [1.0, 2.0, 5.0] {
            let w = WeightSpec::Quantifier { alpha };
            for mode in [GaugeMode::DiscreteOwa, GaugeMode::SmoothedQuantileOwa] {
                let g = gauge_score(&[0.7; 9], &w, mode).unwrap();
                assert_abs_diff_eq!(g.score, 0.7, epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn discrete_gauge_equals_owa() {
        let g = gauge_score(&[0.2, 0.8], &WeightSpec::Quantifier { alpha: 2.0 }, GaugeMode::DiscreteOwa).unwrap();
        assert_abs_diff_eq!(g.score, 0.35, epsilon = 1e-12);
        assert_eq!(g.weight_curve.len(), DEFAULT_GRID_SIZE);
        assert_abs_diff_eq!(g.weight_curve[0], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn steep_utility_drags_gauge_below_mean() {
        // Completeness peaked near 0.85, then the 0.9-threshold utility.
        use crate::utility::PiecewiseLinearUtility;
        let f = PiecewiseLinearUtility::new(vec![(0.0, 0.0), (0.9, 0.3), (1.0, 1.0)]);
        let mut rng = ChaCha8Rng::seed_from_u64(85);
        let raw: Vec<f64> = (0..300).map(|_| (0.85 + 0.06 * (rng.gen::<f64>() - 0.5) * 2.0).clamp(0.0, 1.0)).collect();
        let scores: Vec<f64> = raw.iter().map(|&x| f.evaluate(x).unwrap()).collect();
        let mean = scores.iter().sum::<f64>() / scores.len() as f64;
        for alpha in [2.0, 4.0] {
            for mode in [GaugeMode::DiscreteOwa, GaugeMode::SmoothedQuantileOwa] {
                let g = gauge_score(&scores, &WeightSpec::Quantifier { alpha }, mode).unwrap();
                assert!(g.score < mean, "{mode} alpha {alpha}: {} vs mean {mean}", g.score);
            }
        }
    }

    #[test]
    fn explicit_weights_in_every_mode() {
        let w = WeightSpec::Explicit(vec![0.75, 0.25]);
        for mode in GaugeMode::ALL {
            let g = gauge_score(&[0.2, 0.8], &w, mode).unwrap();
            assert!((0.0..=1.0).contains(&g.score));
        }
        assert!(gauge_score(&[0.2, 0.8, 0.5], &w, GaugeMode::SmoothedQuantileOwa).is_err());
        assert_abs_diff_eq!(w.cumulative(0.25), 0.375, epsilon = 1e-12);
        assert_abs_diff_eq!(w.cumulative(1.0), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn literal_product_with_uniform_weights_is_density_mean() {
        let d = kde(&[0.3, 0.5], DEFAULT_GRID_SIZE, Some(0.05)).unwrap();
        let g = gauge_score_with(&[0.3, 0.5], &WeightSpec::Quantifier { alpha: 1.0 }, GaugeMode::LiteralProduct, KdeOptions { bandwidth: Some(0.05), ..Default::default() }).unwrap();
        let mean = trapezoid(&d.grid, &d.grid.iter().zip(&d.values).map(|(u, f)| u * f).collect::<Vec<_>>());
        assert_abs_diff_eq!(g.score, mean, epsilon = 1e-12);
        assert_abs_diff_eq!(g.score, 0.4, epsilon = 1e-3);
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("literal-product".parse::<GaugeMode>().unwrap(), GaugeMode::LiteralProduct);
        assert_eq!("median".parse::<GaugeMode>(), Err(DensityError::UnknownMode("median".into())));
    }

    #[test]
    fn owa_config_serde() {
        let cfg: OwaConfig = toml::from_str("alpha = 3.0\nmode = \"smoothed-quantile-owa\"").unwrap();
        assert_eq!(cfg, OwaConfig::quantifier(3.0, GaugeMode::SmoothedQuantileOwa));
        let cfg: OwaConfig = toml::from_str("weights = [0.5, 0.5]").unwrap();
        assert_eq!(cfg.weights, WeightSpec::Explicit(vec![0.5, 0.5]));
        assert_eq!(cfg.mode, GaugeMode::DiscreteOwa);
        assert!(toml::from_str::<OwaConfig>("alpha = 2.0\nweights = [1.0]").is_err());
        assert!(toml::from_str::<OwaConfig>("mode = \"discrete-owa\"").is_err());
        assert!(OwaConfig::quantifier(0.5, GaugeMode::DiscreteOwa).check().is_err());
    }

    #[test]
    fn mode_agreement_for_large_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            let a: f64 = rng.gen_range(1.0..4.0);
            let xs: Vec<f64> = (0..250).map(|_| rng.gen::<f64>().powf(a)).collect();
            let w = WeightSpec::Quantifier { alpha: 2.0 };
            let d = gauge_score(&xs, &w, GaugeMode::DiscreteOwa).unwrap().score;
            let s = gauge_score(&xs, &w, GaugeMode::SmoothedQuantileOwa).unwrap().score;
            assert!((d - s).abs() < 0.05, "{d} vs {s}");
        }
    }

    proptest! {
        #[test]
        fn kde_integrates_to_one(xs in prop::collection::vec(prop_oneof![0.0f64..=1.0, 0.0f64..0.01, 0.99f64..=1.0], 1..60)) {
            let d = kde(&xs, DEFAULT_GRID_SIZE, None).unwrap();
            prop_assert!((d.integral() - 1.0).abs() <= 1e-3, "integral {}", d.integral());
            prop_assert!(d.values.iter().all(|v| *v >= 0.0));
        }

        #[test]
        fn quantile_gauges_nonincreasing_in_alpha(xs in prop::collection::vec(0.0f64..=1.0, 1..40)) {
            for mode in [GaugeMode::DiscreteOwa, GaugeMode::SmoothedQuantileOwa] {
                let mut prev = f64::INFINITY;
                for alpha in [1.0, 2.0, 4.0, 8.0] {
                    let g = gauge_score(&xs, &WeightSpec::Quantifier { alpha }, mode).unwrap().score;
                    prop_assert!(g <= prev + 1e-12);
                    prev = g;
                }
            }
        }

        #[test]
        fn quantile_gauge_near_sample_range(xs in prop::collection::vec(0.0f64..=1.0, 1..40), alpha in 1.0f64..8.0) {
            let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            for mode in [GaugeMode::DiscreteOwa, GaugeMode::SmoothedQuantileOwa] {
                let g = gauge_score(&xs, &WeightSpec::Quantifier { alpha }, mode).unwrap();
                let h = g.density.bandwidth;
                prop_assert!(g.score >= (lo - 2.0 * h).max(0.0) - 1e-12 && g.score <= (hi + 2.0 * h).min(1.0) + 1e-12);
            }
        }
    }
}
