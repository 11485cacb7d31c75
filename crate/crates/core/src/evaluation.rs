//! Tree evaluation: utilities and gauges at the leaves, Choquet integrals at
//! the aggregates, for every alternative in a measurement set.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aggregation::{shapley, AggregationError};
use crate::density::{gauge_score_with, kde, DensityError, GaugeMode, KdeOptions, OwaConfig, WeightSpec};
use crate::model::{validate_model, CriteriaNode, MeasurementSet, PreferenceModel, Violation};
use crate::utility::UtilityError;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("model and measurements are not evaluable ({} violations)", .0.len())]
    Invalid(Vec<Violation>),
    #[error("no alternatives to evaluate")]
    NoAlternatives,
    #[error("invalid alpha override {0}: must be finite and >= 1")]
    InvalidAlpha(f64),
    #[error(transparent)]
    Utility(#[from] UtilityError),
    #[error(transparent)]
    Density(#[from] DensityError),
    #[error(transparent)]
    Aggregation(#[from] AggregationError),
}

/// Overrides applied uniformly to every leaf.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EvalOptions {
    /// Replaces every OWA configuration by the quantifier with this alpha.
    pub alpha: Option<f64>,
    pub mode: Option<GaugeMode>,
    pub kde: KdeOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeafDetail {
    pub metric: String,
    pub utility: String,
    pub samples: usize,
    /// Samples outside the utility breakpoint span.
    pub clamped: usize,
    pub mode: GaugeMode,
    pub bandwidth: f64,
    /// Metric natural range; `metric_density` is over `range[0] + g·(range[1] − range[0])`.
    pub range: [f64; 2],
    pub grid: Vec<f64>,
    /// Raw-sample density in metric units per grid point.
    pub metric_density: Vec<f64>,
    /// Density of normalized scores.
    pub criterion_density: Vec<f64>,
    pub weight: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeScore {
    pub id: String,
    pub label: String,
    pub score: f64,
    /// Shapley importance of each child; empty for leaves.
    pub shapley: Vec<f64>,
    pub children: Vec<NodeScore>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub leaf: Option<LeafDetail>,
}

impl NodeScore {
    pub fn walk(&self) -> Vec<(usize, &NodeScore)> {
        fn go<'a>(n: &'a NodeScore, depth: usize, out: &mut Vec<(usize, &'a NodeScore)>) {
            out.push((depth, n));
            for c in &n.children {
                go(c, depth + 1, out);
            }
        }
        let mut out = Vec::new();
        go(self, 0, &mut out);
        out
    }

    pub fn find(&self, id: &str) -> Option<&NodeScore> {
        self.walk().into_iter().map(|(_, n)| n).find(|n| n.id == id)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlternativeScore {
    pub alternative: String,
    pub root: NodeScore,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub alternatives: Vec<AlternativeScore>,
}

impl Evaluation {
    pub fn alternative(&self, id: &str) -> Option<&AlternativeScore> {
        self.alternatives.iter().find(|a| a.alternative == id)
    }

    /// Score of node `node` for alternative `alt`.
    pub fn score(&self, alt: &str, node: &str) -> Option<f64> {
        self.alternative(alt)?.root.find(node).map(|n| n.score)
    }
}

/// Evaluates every alternative in `measurements`, in id order.
pub fn evaluate(model: &PreferenceModel, measurements: &MeasurementSet, opts: &EvalOptions) -> Result<Evaluation, EvalError> {
    if let Some(a) = opts.alpha {
        if !(a.is_finite() && a >= 1.0) {
            return Err(EvalError::InvalidAlpha(a));
        }
    }
    let violations = validate_model(model, measurements);
    if !violations.is_empty() {
        return Err(EvalError::Invalid(violations));
    }
    let alts = measurements.alternatives();
    if alts.is_empty() {
        return Err(EvalError::NoAlternatives);
    }
    let alternatives = alts
        .into_iter()
        .map(|alt| {
            Ok(AlternativeScore { alternative: alt.to_string(), root: eval_node(model, measurements, alt, &model.tree, opts)? })
        })
        .collect::<Result<_, EvalError>>()?;
    Ok(Evaluation { alternatives })
}

fn effective_owa(model: &PreferenceModel, id: &str, opts: &EvalOptions) -> OwaConfig {
    // presence checked by validation
    let mut cfg = model.owa[id].clone();
    if let Some(alpha) = opts.alpha {
        cfg.weights = WeightSpec::Quantifier { alpha };
    }
    if let Some(mode) = opts.mode {
        cfg.mode = mode;
    }
    cfg
}

fn eval_node(
    model: &PreferenceModel,
    ms: &MeasurementSet,
    alt: &str,
    node: &CriteriaNode,
    opts: &EvalOptions,
) -> Result<NodeScore, EvalError> {
    match node {
        CriteriaNode::Leaf(l) => {
            let utility = &model.utilities[&l.utility];
            let def = model.metric(&l.metric).expect("validated metric");
            let raw = ms.values(alt, &l.metric);
            let mut clamped = 0;
            let scores = raw
                .iter()
                .map(|&x| {
                    let v = utility.evaluate_checked(x)?;
                    clamped += usize::from(v.clamped);
                    Ok(v.score)
                })
                .collect::<Result<Vec<f64>, UtilityError>>()?;
            let owa = effective_owa(model, &l.owa, opts);
            let gauge = gauge_score_with(&scores, &owa.weights, owa.mode, opts.kde)?;
            let [lo, hi] = def.range;
            let unit: Vec<f64> = raw.iter().map(|x| ((x - lo) / (hi - lo)).clamp(0.0, 1.0)).collect();
            let metric = kde(&unit, opts.kde.grid_size, None)?;
            let detail = LeafDetail {
                metric: l.metric.clone(),
                utility: l.utility.clone(),
                samples: raw.len(),
                clamped,
                mode: owa.mode,
                bandwidth: gauge.density.bandwidth,
                range: def.range,
                grid: gauge.density.grid.clone(),
                metric_density: metric.values.iter().map(|v| v / (hi - lo)).collect(),
                criterion_density: gauge.density.values,
                weight: gauge.weight_curve,
            };
            Ok(NodeScore {
                id: l.id.clone(),
                label: l.label.clone(),
                score: gauge.score,
                shapley: Vec::new(),
                children: Vec::new(),
                leaf: Some(detail),
            })
        }
        CriteriaNode::Aggregate(a) => {
            let children =
                a.children.iter().map(|c| eval_node(model, ms, alt, c, opts)).collect::<Result<Vec<_>, _>>()?;
            let x: Vec<f64> = children.iter().map(|c| c.score).collect();
            let score = a.capacity.choquet(&x)?.clamp(0.0, 1.0);
            Ok(NodeScore {
                id: a.id.clone(),
                label: a.label.clone(),
                score,
                shapley: shapley(&a.capacity),
                children,
                leaf: None,
            })
        }
    }
}
