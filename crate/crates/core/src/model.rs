//! Alternatives, metrics, measurement sets and the hierarchical criteria tree.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::aggregation::{validate_capacity, CapacityViolation, MobiusCapacity};
use crate::density::{GaugeMode, OwaConfig, WeightSpec};
use crate::utility::{validate_utility, PiecewiseLinearUtility, UtilityViolation};

/// Version string written to and expected in preference model files.
pub const MODEL_VERSION: &str = "1";

/// An algorithm under evaluation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alternative {
    pub id: String,
    pub label: String,
}

impl Alternative {
    pub fn new(id: impl Into<String>, label: impl Into<String>) -> Self {
        Self { id: id.into(), label: label.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    HigherBetter,
    LowerBetter,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::HigherBetter => "higher-better",
            Self::LowerBetter => "lower-better",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricDef {
    pub id: String,
    pub label: String,
    pub direction: Direction,
    /// Closed natural range `[lower, upper]` in `unit`.
    pub range: [f64; 2],
    pub unit: String,
}

impl MetricDef {
    pub fn new(id: &str, label: &str, direction: Direction, range: [f64; 2], unit: &str) -> Self {
        Self { id: id.into(), label: label.into(), direction, range, unit: unit.into() }
    }

    pub fn contains(&self, value: f64) -> bool {
        value >= self.range[0] && value <= self.range[1]
    }
}

/// One raw measurement of a metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub value: f64,
    pub scenario_id: String,
    pub track_id: Option<String>,
}

impl Sample {
    pub fn new(value: f64, scenario_id: impl Into<String>, track_id: Option<String>) -> Self {
        Self { value, scenario_id: scenario_id.into(), track_id }
    }
}

/// Raw samples keyed by `(alternative_id, metric_id)`.
///
/// Samples are never averaged here; counts may differ across alternatives.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MeasurementSet {
    entries: BTreeMap<(String, String), Vec<Sample>>,
}

impl MeasurementSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, alternative: &str, metric: &str, sample: Sample) {
        self.entries.entry((alternative.to_string(), metric.to_string())).or_default().push(sample);
    }

    pub fn samples(&self, alternative: &str, metric: &str) -> Option<&[Sample]> {
        self.entries.get(&(alternative.to_string(), metric.to_string())).map(Vec::as_slice)
    }

    pub fn values(&self, alternative: &str, metric: &str) -> Vec<f64> {
        self.samples(alternative, metric).map(|s| s.iter().map(|s| s.value).collect()).unwrap_or_default()
    }

    /// Alternative ids in sorted order.
    pub fn alternatives(&self) -> Vec<&str> {
        let set: BTreeSet<&str> = self.entries.keys().map(|(a, _)| a.as_str()).collect();
        set.into_iter().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str, &[Sample])> {
        self.entries.iter().map(|((a, m), s)| (a.as_str(), m.as_str(), s.as_slice()))
    }

    /// Total sample count.
    pub fn len(&self) -> usize {
        self.entries.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Moves every sample of `other` into `self`.
    pub fn extend(&mut self, other: MeasurementSet) {
        for (k, v) in other.entries {
            self.entries.entry(k).or_default().extend(v);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Leaf {
    pub id: String,
    pub label: String,
    pub metric: String,
    pub utility: String,
    pub owa: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub id: String,
    pub label: String,
    /// Coefficients are indexed by child position.
    pub capacity: MobiusCapacity,
    pub children: Vec<CriteriaNode>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CriteriaNode {
    Leaf(Leaf),
    Aggregate(Aggregate),
}

impl CriteriaNode {
    pub fn id(&self) -> &str {
        match self {
            Self::Leaf(l) => &l.id,
            Self::Aggregate(a) => &a.id,
        }
    }

    pub fn label(&self) -> &str {
        match self {
            Self::Leaf(l) => &l.label,
            Self::Aggregate(a) => &a.label,
        }
    }

    pub fn children(&self) -> &[CriteriaNode] {
        match self {
            Self::Leaf(_) => &[],
            Self::Aggregate(a) => &a.children,
        }
    }

    /// Depth-first, parents before children, children in declared order.
    pub fn walk(&self) -> Vec<(usize, &CriteriaNode)> {
        fn go<'a>(n: &'a CriteriaNode, depth: usize, out: &mut Vec<(usize, &'a CriteriaNode)>) {
            out.push((depth, n));
            for c in n.children() {
                go(c, depth + 1, out);
            }
        }
        let mut out = Vec::new();
        go(self, 0, &mut out);
        out
    }

    pub fn leaves(&self) -> Vec<&Leaf> {
        self.walk()
            .into_iter()
            .filter_map(|(_, n)| match n {
                Self::Leaf(l) => Some(l),
                Self::Aggregate(_) => None,
            })
            .collect()
    }

    pub fn find(&self, id: &str) -> Option<&CriteriaNode> {
        self.walk().into_iter().map(|(_, n)| n).find(|n| n.id() == id)
    }
}

/// Everything needed to turn measurements into gauges: metric definitions,
/// named utilities, named OWA configurations and the criteria tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferenceModel {
    pub version: String,
    pub metrics: Vec<MetricDef>,
    pub utilities: BTreeMap<String, PiecewiseLinearUtility>,
    pub owa: BTreeMap<String, OwaConfig>,
    pub tree: CriteriaNode,
}

impl PreferenceModel {
    pub fn metric(&self, id: &str) -> Option<&MetricDef> {
        self.metrics.iter().find(|m| m.id == id)
    }

    /// Structural checks that do not need measurements.
    pub fn validate(&self) -> Vec<Violation> {
        validate_structure(self)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    DuplicateMetric(String),
    InvalidMetricRange { metric: String },
    DuplicateNodeId(String),
    EmptyAggregate { node: String },
    DimensionMismatch { node: String, children: usize, capacity: usize },
    InvalidCapacity { node: String, violation: CapacityViolation },
    DanglingMetric { node: String, metric: String },
    DanglingUtility { node: String, utility: String },
    DanglingOwa { node: String, owa: String },
    InvalidUtility { node: String, utility: String, violation: UtilityViolation },
    InvalidOwa { owa: String, reason: String },
    UnknownMetric { alternative: String, metric: String },
    MissingSamples { alternative: String, metric: String },
    OutOfRange { alternative: String, metric: String, index: usize, value: f64, range: [f64; 2] },
    OwaLengthMismatch { node: String, alternative: String, weights: usize, samples: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::DuplicateMetric(m) => write!(f, "metric `{m}` declared twice"),
            Self::InvalidMetricRange { metric } => write!(f, "metric `{metric}`: range lower bound must be below upper bound"),
            Self::DuplicateNodeId(n) => write!(f, "node id `{n}` used twice"),
            Self::EmptyAggregate { node } => write!(f, "node `{node}`: aggregate has no children"),
            Self::DimensionMismatch { node, children, capacity } => {
                write!(f, "node `{node}`: {children} children but capacity over {capacity} criteria")
            }
            Self::InvalidCapacity { node, violation } => write!(f, "node `{node}`: {violation}"),
            Self::DanglingMetric { node, metric } => write!(f, "node `{node}`: unknown metric `{metric}`"),
            Self::DanglingUtility { node, utility } => write!(f, "node `{node}`: unknown utility `{utility}`"),
            Self::DanglingOwa { node, owa } => write!(f, "node `{node}`: unknown OWA configuration `{owa}`"),
            Self::InvalidUtility { node, utility, violation } => {
                write!(f, "node `{node}`: utility `{utility}`: {violation}")
            }
            Self::InvalidOwa { owa, reason } => write!(f, "OWA configuration `{owa}`: {reason}"),
            Self::UnknownMetric { alternative, metric } => {
                write!(f, "alternative `{alternative}`: samples for undeclared metric `{metric}`")
            }
            Self::MissingSamples { alternative, metric } => {
                write!(f, "alternative `{alternative}`: no samples for metric `{metric}`")
            }
            Self::OutOfRange { alternative, metric, index, value, range } => write!(
                f,
                "alternative `{alternative}`, metric `{metric}`, sample {index}: value {value} outside [{}, {}]",
                range[0], range[1]
            ),
            Self::OwaLengthMismatch { node, alternative, weights, samples } => write!(
                f,
                "node `{node}`, alternative `{alternative}`: {weights} explicit OWA weights for {samples} samples"
            ),
        }
    }
}

fn validate_structure(model: &PreferenceModel) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut metric_ids = BTreeSet::new();
    for m in &model.metrics {
        if !metric_ids.insert(m.id.as_str()) {
            out.push(Violation::DuplicateMetric(m.id.clone()));
        }
        if !(m.range[0] < m.range[1]) {
            out.push(Violation::InvalidMetricRange { metric: m.id.clone() });
        }
    }
    for (id, cfg) in &model.owa {
        if let Err(reason) = cfg.check() {
            out.push(Violation::InvalidOwa { owa: id.clone(), reason });
        }
    }
    let mut node_ids = BTreeSet::new();
    for (_, node) in model.tree.walk() {
        if !node_ids.insert(node.id()) {
            out.push(Violation::DuplicateNodeId(node.id().to_string()));
        }
        match node {
            CriteriaNode::Aggregate(a) => {
                if a.children.is_empty() {
                    out.push(Violation::EmptyAggregate { node: a.id.clone() });
                }
                if a.capacity.len() != a.children.len() {
                    out.push(Violation::DimensionMismatch {
                        node: a.id.clone(),
                        children: a.children.len(),
                        capacity: a.capacity.len(),
                    });
                }
                for violation in validate_capacity(&a.capacity) {
                    out.push(Violation::InvalidCapacity { node: a.id.clone(), violation });
                }
            }
            CriteriaNode::Leaf(l) => {
                let metric = model.metric(&l.metric);
                if metric.is_none() {
                    out.push(Violation::DanglingMetric { node: l.id.clone(), metric: l.metric.clone() });
                }
                match (model.utilities.get(&l.utility), metric) {
                    (None, _) => out.push(Violation::DanglingUtility { node: l.id.clone(), utility: l.utility.clone() }),
                    (Some(u), Some(m)) => {
                        for violation in validate_utility(u, m.direction) {
                            out.push(Violation::InvalidUtility {
                                node: l.id.clone(),
                                utility: l.utility.clone(),
                                violation,
                            });
                        }
                    }
                    (Some(_), None) => {}
                }
                if !model.owa.contains_key(&l.owa) {
                    out.push(Violation::DanglingOwa { node: l.id.clone(), owa: l.owa.clone() });
                }
            }
        }
    }
    out
}

/// Lists everything that would stop `measurements` from being evaluated
/// against `model`. An empty report means the pair is evaluable.
pub fn validate_model(model: &PreferenceModel, measurements: &MeasurementSet) -> Vec<Violation> {
    let mut out = validate_structure(model);
    for (alt, metric, samples) in measurements.iter() {
        let Some(def) = model.metric(metric) else {
            out.push(Violation::UnknownMetric { alternative: alt.into(), metric: metric.into() });
            continue;
        };
        for (index, s) in samples.iter().enumerate() {
            if !s.value.is_finite() || !def.contains(s.value) {
                out.push(Violation::OutOfRange {
                    alternative: alt.into(),
                    metric: metric.into(),
                    index,
                    value: s.value,
                    range: def.range,
                });
            }
        }
    }
    for alt in measurements.alternatives() {
        for leaf in model.tree.leaves() {
            let count = measurements.samples(alt, &leaf.metric).map_or(0, <[Sample]>::len);
            if count == 0 {
                out.push(Violation::MissingSamples { alternative: alt.into(), metric: leaf.metric.clone() });
                continue;
            }
            if let Some(OwaConfig { weights: WeightSpec::Explicit(w), .. }) = model.owa.get(&leaf.owa) {
                if w.len() != count {
                    out.push(Violation::OwaLengthMismatch {
                        node: leaf.id.clone(),
                        alternative: alt.into(),
                        weights: w.len(),
                        samples: count,
                    });
                }
            }
        }
    }
    out
}

pub mod ids {
    pub const TC_BALLISTIC_MISSILE: &str = "tc-ballistic-missile";
    pub const TC_COMMERCIAL_AIRCRAFT: &str = "tc-commercial-aircraft";
    pub const TC_RECREATIONAL_AIRCRAFT: &str = "tc-recreational-aircraft";
    pub const TC_BIRD: &str = "tc-bird";
    pub const TC_SHIP: &str = "tc-ship";
    pub const TC_RECREATIONAL_BOAT: &str = "tc-recreational-boat";
    pub const TIME_FRAME: &str = "time-frame";
    pub const TRACK_OCCUPANCY: &str = "track-occupancy";

    pub const ROOT: &str = "rrm-performance";
    pub const SURVEILLANCE: &str = "surveillance";
    pub const TRACKING: &str = "tracking";
    pub const AIR_TARGETS: &str = "air-targets";
    pub const SURFACE_TARGETS: &str = "surface-targets";
    pub const LOAD_BALANCING: &str = "load-balancing";
}

fn leaf(metric: &str, label: &str, utility: &str) -> CriteriaNode {
    CriteriaNode::Leaf(Leaf {
        id: metric.into(),
        label: label.into(),
        metric: metric.into(),
        utility: utility.into(),
        owa: "pessimistic".into(),
    })
}

fn aggregate(id: &str, label: &str, children: Vec<CriteriaNode>) -> CriteriaNode {
    CriteriaNode::Aggregate(Aggregate {
        id: id.into(),
        label: label.into(),
        capacity: MobiusCapacity::uniform(children.len()),
        children,
    })
}

/// The eight-leaf RRM criteria tree with placeholder capacities (uniform
/// weights, no interactions), default utilities and a pessimistic OWA
/// configuration shared by all leaves.
///
/// Default utilities: identity for track completeness, a steep shape above
/// 0.9 for ballistic missiles, and linear decreasing utilities for time frame
/// and track occupancy. These are defaults, not elicited preferences.
pub fn default_paper_model() -> PreferenceModel {
    use ids::*;
    let metrics = vec![
        MetricDef::new(TC_BALLISTIC_MISSILE, "TC for Ballistic Missiles", Direction::HigherBetter, [0.0, 1.0], "fraction"),
        MetricDef::new(TC_COMMERCIAL_AIRCRAFT, "TC for Commercial Aircrafts", Direction::HigherBetter, [0.0, 1.0], "fraction"),
        MetricDef::new(TC_RECREATIONAL_AIRCRAFT, "TC for Recreational Aircrafts", Direction::HigherBetter, [0.0, 1.0], "fraction"),
        MetricDef::new(TC_BIRD, "TC for Birds", Direction::HigherBetter, [0.0, 1.0], "fraction"),
        MetricDef::new(TC_SHIP, "TC for Ships", Direction::HigherBetter, [0.0, 1.0], "fraction"),
        MetricDef::new(TC_RECREATIONAL_BOAT, "TC for Recreational Boats", Direction::HigherBetter, [0.0, 1.0], "fraction"),
        MetricDef::new(TIME_FRAME, "Time Frame", Direction::LowerBetter, [0.0, 3600.0], "s"),
        MetricDef::new(TRACK_OCCUPANCY, "Track Occupancy", Direction::LowerBetter, [0.0, 1.0], "fraction"),
    ];
    let mut utilities = BTreeMap::new();
    utilities.insert("identity".to_string(), PiecewiseLinearUtility::identity());
    utilities.insert(
        "steep-above-0.9".to_string(),
        PiecewiseLinearUtility::new(vec![(0.0, 0.0), (0.9, 0.3), (1.0, 1.0)]),
    );
    utilities.insert("time-frame".to_string(), PiecewiseLinearUtility::linear(Direction::LowerBetter, 0.5, 2.0));
    utilities.insert(
        "track-occupancy".to_string(),
        PiecewiseLinearUtility::linear(Direction::LowerBetter, 0.2, 0.8),
    );
    let mut owa = BTreeMap::new();
    owa.insert(
        "pessimistic".to_string(),
        OwaConfig { weights: WeightSpec::Quantifier { alpha: 2.0 }, mode: GaugeMode::DiscreteOwa },
    );

    let tree = aggregate(
        ROOT,
        "RRM performance",
        vec![
            aggregate(SURVEILLANCE, "Surveillance", vec![leaf(TIME_FRAME, "Time Frame", "time-frame")]),
            aggregate(
                TRACKING,
                "Tracking",
                vec![
                    aggregate(
                        AIR_TARGETS,
                        "Air Targets",
                        vec![
                            leaf(TC_BALLISTIC_MISSILE, "TC for Ballistic Missiles", "steep-above-0.9"),
                            leaf(TC_COMMERCIAL_AIRCRAFT, "TC for Commercial Aircrafts", "identity"),
                            leaf(TC_RECREATIONAL_AIRCRAFT, "TC for Recreational Aircrafts", "identity"),
                            leaf(TC_BIRD, "TC for Birds", "identity"),
                        ],
                    ),
                    aggregate(
                        SURFACE_TARGETS,
                        "Surface Targets",
                        vec![
                            leaf(TC_SHIP, "TC for Ships", "identity"),
                            leaf(TC_RECREATIONAL_BOAT, "TC for Recreational Boats", "identity"),
                        ],
                    ),
                ],
            ),
            aggregate(LOAD_BALANCING, "Load Balancing", vec![leaf(TRACK_OCCUPANCY, "Track Occupancy", "track-occupancy")]),
        ],
    );
    PreferenceModel { version: MODEL_VERSION.into(), metrics, utilities, owa, tree }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn consistent_measurements(model: &PreferenceModel) -> MeasurementSet {
        let mut set = MeasurementSet::new();
        for alt in ["a-stu", "na-nsr"] {
            for m in &model.metrics {
                let v = 0.5 * (m.range[0] + m.range[1]).min(2.0);
                set.push(alt, &m.id, Sample::new(v, "s0", None));
            }
        }
        set
    }

    #[test]
    fn default_tree_shape() {
        let model = default_paper_model();
        let leaves: Vec<&str> = model.tree.leaves().iter().map(|l| l.metric.as_str()).collect();
        assert_eq!(leaves.len(), 8);
        let expected: BTreeSet<&str> = [
            ids::TC_BALLISTIC_MISSILE,
            ids::TC_COMMERCIAL_AIRCRAFT,
            ids::TC_RECREATIONAL_AIRCRAFT,
            ids::TC_BIRD,
            ids::TC_SHIP,
            ids::TC_RECREATIONAL_BOAT,
            ids::TIME_FRAME,
            ids::TRACK_OCCUPANCY,
        ]
        .into();
        assert_eq!(leaves.iter().copied().collect::<BTreeSet<_>>(), expected);

        let root_children: Vec<&str> = model.tree.children().iter().map(CriteriaNode::id).collect();
        assert_eq!(root_children, [ids::SURVEILLANCE, ids::TRACKING, ids::LOAD_BALANCING]);

        let tracking = model.tree.find(ids::TRACKING).unwrap();
        let sub: Vec<(&str, usize)> = tracking.children().iter().map(|c| (c.id(), c.children().len())).collect();
        assert_eq!(sub, [(ids::AIR_TARGETS, 4), (ids::SURFACE_TARGETS, 2)]);
    }

    #[test]
    fn walk_visits_each_node_once() {
        let model = default_paper_model();
        let walk = model.tree.walk();
        assert_eq!(walk.len(), 14);
        let ids: BTreeSet<&str> = walk.iter().map(|(_, n)| n.id()).collect();
        assert_eq!(ids.len(), walk.len());
        assert_eq!(walk[0].0, 0);
    }

    #[test]
    fn default_model_with_consistent_measurements_is_clean() {
        let model = default_paper_model();
        let set = consistent_measurements(&model);
        assert_eq!(validate_model(&model, &set), vec![]);
        // idempotent
        assert_eq!(validate_model(&model, &set), validate_model(&model, &set));
    }

    #[test]
    fn capacity_dimension_mismatch() {
        let mut model = default_paper_model();
        if let CriteriaNode::Aggregate(root) = &mut model.tree {
            root.capacity = MobiusCapacity::uniform(2);
        }
        let report = model.validate();
        assert_eq!(
            report,
            vec![Violation::DimensionMismatch { node: ids::ROOT.into(), children: 3, capacity: 2 }]
        );
    }

    #[test]
    fn out_of_range_sample() {
        let model = default_paper_model();
        let mut set = consistent_measurements(&model);
        set.push("a-stu", ids::TC_BIRD, Sample::new(1.2, "s1", Some("t7".into())));
        let report = validate_model(&model, &set);
        assert_eq!(
            report,
            vec![Violation::OutOfRange {
                alternative: "a-stu".into(),
                metric: ids::TC_BIRD.into(),
                index: 1,
                value: 1.2,
                range: [0.0, 1.0],
            }]
        );
    }

    #[test]
    fn dangling_references_and_missing_samples() {
        let mut model = default_paper_model();
        model.utilities.remove("identity");
        model.owa.clear();
        let report = model.validate();
        assert!(report.iter().any(|v| matches!(v, Violation::DanglingUtility { utility, .. } if utility == "identity")));
        assert_eq!(report.iter().filter(|v| matches!(v, Violation::DanglingOwa { .. })).count(), 8);

        let model = default_paper_model();
        let mut set = MeasurementSet::new();
        set.push("a-stu", "made-up", Sample::new(0.5, "s0", None));
        let report = validate_model(&model, &set);
        assert!(report.contains(&Violation::UnknownMetric { alternative: "a-stu".into(), metric: "made-up".into() }));
        assert_eq!(report.iter().filter(|v| matches!(v, Violation::MissingSamples { .. })).count(), 8);
    }

    #[test]
    fn explicit_weights_must_match_sample_count() {
        let mut model = default_paper_model();
        model.owa.insert(
            "pessimistic".into(),
            OwaConfig { weights: WeightSpec::Explicit(vec![0.75, 0.25]), mode: GaugeMode::DiscreteOwa },
        );
        let set = consistent_measurements(&model);
        let report = validate_model(&model, &set);
        assert_eq!(report.iter().filter(|v| matches!(v, Violation::OwaLengthMismatch { .. })).count(), 16);
    }

    #[test]
    fn utility_direction_is_checked() {
        let mut model = default_paper_model();
        model.utilities.insert("time-frame".into(), PiecewiseLinearUtility::identity());
        let report = model.validate();
        assert!(report.iter().all(|v| matches!(v, Violation::InvalidUtility { node, .. } if node == ids::TIME_FRAME)));
        assert!(!report.is_empty());
    }

    #[test]
    fn measurement_set_bookkeeping() {
        let mut a = MeasurementSet::new();
        a.push("x", "m", Sample::new(0.1, "s0", None));
        let mut b = MeasurementSet::new();
        b.push("x", "m", Sample::new(0.2, "s1", None));
        b.push("w", "m", Sample::new(0.3, "s1", None));
        a.extend(b);
        assert_eq!(a.len(), 3);
        assert_eq!(a.alternatives(), ["w", "x"]);
        assert_eq!(a.values("x", "m"), [0.1, 0.2]);
        assert!(a.samples("x", "other").is_none());
    }
}
