//! Figures of merit computed from ground truth, track logs and the radar
//! timeline: track completeness, time frame, track occupancy and
//! untracked-target counts.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ids, MeasurementSet, Sample};

#[derive(Debug, Error, PartialEq)]
pub enum FomError {
    #[error("target `{0}` has a zero-length or reversed trajectory")]
    ZeroLengthTrajectory(String),
    #[error("untracked threshold must be in [0, 1), got {0}")]
    InvalidThreshold(f64),
    #[error("alternative `{0}` has no scenario outputs")]
    NoScenarios(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetClass {
    BallisticMissile,
    CommercialAircraft,
    RecreationalAircraft,
    Bird,
    Ship,
    RecreationalBoat,
}

impl TargetClass {
    pub const ALL: [TargetClass; 6] = [
        Self::BallisticMissile,
        Self::CommercialAircraft,
        Self::RecreationalAircraft,
        Self::Bird,
        Self::Ship,
        Self::RecreationalBoat,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::BallisticMissile => "ballistic-missile",
            Self::CommercialAircraft => "commercial-aircraft",
            Self::RecreationalAircraft => "recreational-aircraft",
            Self::Bird => "bird",
            Self::Ship => "ship",
            Self::RecreationalBoat => "recreational-boat",
        }
    }

    /// Track-completeness metric fed by this class.
    pub fn completeness_metric(self) -> &'static str {
        match self {
            Self::BallisticMissile => ids::TC_BALLISTIC_MISSILE,
            Self::CommercialAircraft => ids::TC_COMMERCIAL_AIRCRAFT,
            Self::RecreationalAircraft => ids::TC_RECREATIONAL_AIRCRAFT,
            Self::Bird => ids::TC_BIRD,
            Self::Ship => ids::TC_SHIP,
            Self::RecreationalBoat => ids::TC_RECREATIONAL_BOAT,
        }
    }

    pub fn is_air(self) -> bool {
        !matches!(self, Self::Ship | Self::RecreationalBoat)
    }
}

impl fmt::Display for TargetClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Ground-truth lifetime of a target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthTrajectory {
    pub target_id: String,
    pub class: TargetClass,
    /// `[t0, t1]` in seconds.
    pub alive: [f64; 2],
}

/// Intervals during which a track on `target_id` existed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackRecord {
    pub target_id: String,
    pub intervals: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DwellKind {
    Surveillance { sector: u32 },
    /// Confirmation look on a fresh detection; counted as surveillance time.
    Confirmation,
    TrackUpdate { target_id: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dwell {
    pub start: f64,
    pub duration: f64,
    #[serde(flatten)]
    pub kind: DwellKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadarTimeline {
    pub duration: f64,
    pub entries: Vec<Dwell>,
}

/// Everything one simulated (or recorded) scenario run produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioOutput {
    pub scenario_id: String,
    pub truths: Vec<TruthTrajectory>,
    pub tracks: Vec<TrackRecord>,
    pub timeline: RadarTimeline,
}

/// Total length of the union of `intervals` clipped to `[lo, hi]`.
fn covered_length(intervals: &[[f64; 2]], lo: f64, hi: f64) -> f64 {
    let mut clipped: Vec<(f64, f64)> = intervals
        .iter()
        .map(|&[a, b]| (a.max(lo), b.min(hi)))
        .filter(|(a, b)| b > a)
        .collect();
    clipped.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut total = 0.0;
    let mut current: Option<(f64, f64)> = None;
    for (a, b) in clipped {
        current = match current {
            Some((ca, cb)) if a <= cb => Some((ca, cb.max(b))),
            Some((ca, cb)) => {
                total += cb - ca;
                Some((a, b))
            }
            None => Some((a, b)),
        };
    }
    if let Some((ca, cb)) = current {
        total += cb - ca;
    }
    total
}

/// Fraction of the target's lifetime covered by its track intervals.
pub fn track_completeness(truth: &TruthTrajectory, track: Option<&TrackRecord>) -> Result<f64, FomError> {
    let [t0, t1] = truth.alive;
    if !(t1 > t0) {
        return Err(FomError::ZeroLengthTrajectory(truth.target_id.clone()));
    }
    let covered = track.map_or(0.0, |t| covered_length(&t.intervals, t0, t1));
    Ok((covered / (t1 - t0)).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeFrame {
    pub seconds: f64,
    /// Sectors visited fewer than twice; each contributed the scenario
    /// duration.
    pub unrevisited: Vec<u32>,
}

/// Mean over sectors of each sector's mean surveillance revisit interval.
///
/// A sector visited fewer than twice contributes the full scenario duration.
pub fn time_frame(timeline: &RadarTimeline, sectors: u32) -> TimeFrame {
    let mut visits: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
    for d in &timeline.entries {
        if let DwellKind::Surveillance { sector } = d.kind {
            visits.entry(sector).or_default().push(d.start);
        }
    }
    let mut unrevisited = Vec::new();
    let mut total = 0.0;
    for s in 0..sectors {
        let mut times = visits.remove(&s).unwrap_or_default();
        times.sort_by(f64::total_cmp);
        if times.len() < 2 {
            unrevisited.push(s);
            total += timeline.duration;
        } else {
            total += (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
        }
    }
    let seconds = if sectors == 0 { 0.0 } else { total / sectors as f64 };
    TimeFrame { seconds, unrevisited }
}

/// Fraction of the scenario spent on track-update beams.
pub fn track_occupancy(timeline: &RadarTimeline) -> f64 {
    busy_fraction(timeline, |k| matches!(k, DwellKind::TrackUpdate { .. }))
}

/// Fraction spent on surveillance, confirmations included.
pub fn surveillance_fraction(timeline: &RadarTimeline) -> f64 {
    busy_fraction(timeline, |k| !matches!(k, DwellKind::TrackUpdate { .. }))
}

fn busy_fraction(timeline: &RadarTimeline, keep: impl Fn(&DwellKind) -> bool) -> f64 {
    if timeline.duration <= 0.0 {
        return 0.0;
    }
    timeline.entries.iter().filter(|d| keep(&d.kind)).map(|d| d.duration).sum::<f64>() / timeline.duration
}

/// Fraction of the scenario with no beam scheduled, measured from the gaps
/// between consecutive dwells.
pub fn idle_fraction(timeline: &RadarTimeline) -> f64 {
    if timeline.duration <= 0.0 {
        return 0.0;
    }
    let mut spans: Vec<(f64, f64)> = timeline.entries.iter().map(|d| (d.start, d.start + d.duration)).collect();
    spans.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut cursor = 0.0;
    let mut idle = 0.0;
    for (a, b) in spans {
        idle += a - cursor;
        cursor = b;
    }
    idle += timeline.duration - cursor;
    idle / timeline.duration
}

/// Per class, the number of targets whose completeness is at most
/// `threshold`. With the default threshold 0 this counts targets that were
/// never tracked. Every class appears in the result.
pub fn untracked_count(
    truths: &[TruthTrajectory],
    tracks: &[TrackRecord],
    threshold: f64,
) -> Result<BTreeMap<TargetClass, usize>, FomError> {
    if !(0.0..1.0).contains(&threshold) {
        return Err(FomError::InvalidThreshold(threshold));
    }
    let by_target = index_tracks(tracks);
    let mut counts: BTreeMap<TargetClass, usize> = TargetClass::ALL.iter().map(|&c| (c, 0)).collect();
    for truth in truths {
        let tc = track_completeness(truth, by_target.get(truth.target_id.as_str()))?;
        if tc <= threshold {
            *counts.entry(truth.class).or_default() += 1;
        }
    }
    Ok(counts)
}

fn index_tracks(tracks: &[TrackRecord]) -> BTreeMap<&str, TrackRecord> {
    let mut out: BTreeMap<&str, TrackRecord> = BTreeMap::new();
    for t in tracks {
        out.entry(t.target_id.as_str())
            .or_insert_with(|| TrackRecord { target_id: t.target_id.clone(), intervals: Vec::new() })
            .intervals
            .extend_from_slice(&t.intervals);
    }
    out
}

/// Scenario outputs of one alternative.
#[derive(Debug, Clone, PartialEq)]
pub struct AlternativeRuns {
    pub alternative: String,
    pub outputs: Vec<ScenarioOutput>,
}

/// Turns scenario outputs into a [`MeasurementSet`]: one completeness sample
/// per target and scenario under its class's leaf, and one time-frame and one
/// occupancy sample per scenario.
pub fn collect_measurements(runs: &[AlternativeRuns], sectors: u32) -> Result<MeasurementSet, FomError> {
    let mut set = MeasurementSet::new();
    for run in runs {
        if run.outputs.is_empty() {
            return Err(FomError::NoScenarios(run.alternative.clone()));
        }
        for out in &run.outputs {
            let by_target = index_tracks(&out.tracks);
            for truth in &out.truths {
                let tc = track_completeness(truth, by_target.get(truth.target_id.as_str()))?;
                set.push(
                    &run.alternative,
                    truth.class.completeness_metric(),
                    Sample::new(tc, out.scenario_id.clone(), Some(truth.target_id.clone())),
                );
            }
            let tf = time_frame(&out.timeline, sectors);
            set.push(&run.alternative, ids::TIME_FRAME, Sample::new(tf.seconds, out.scenario_id.clone(), None));
            set.push(
                &run.alternative,
                ids::TRACK_OCCUPANCY,
                Sample::new(track_occupancy(&out.timeline), out.scenario_id.clone(), None),
            );
        }
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn truth(id: &str, class: TargetClass, t0: f64, t1: f64) -> TruthTrajectory {
        TruthTrajectory { target_id: id.into(), class, alive: [t0, t1] }
    }

    fn track(id: &str, intervals: &[[f64; 2]]) -> TrackRecord {
        TrackRecord { target_id: id.into(), intervals: intervals.to_vec() }
    }

    fn surv(start: f64, sector: u32) -> Dwell {
        Dwell { start, duration: 0.05, kind: DwellKind::Surveillance { sector } }
    }

    #[test]
    fn completeness_examples() {
        let t = truth("t1", TargetClass::Bird, 0.0, 100.0);
        assert_eq!(track_completeness(&t, Some(&track("t1", &[[10.0, 60.0]]))).unwrap(), 0.5);
        assert_eq!(track_completeness(&t, None).unwrap(), 0.0);
        assert_eq!(track_completeness(&t, Some(&track("t1", &[]))).unwrap(), 0.0);
        assert_eq!(track_completeness(&t, Some(&track("t1", &[[0.0, 100.0]]))).unwrap(), 1.0);
    }

    #[test]
    fn completeness_clips_to_lifetime() {
        let t = truth("t1", TargetClass::Ship, 20.0, 70.0);
        let tr = track("t1", &[[0.0, 30.0], [60.0, 90.0]]);
        assert_abs_diff_eq!(track_completeness(&t, Some(&tr)).unwrap(), 0.4, epsilon = 1e-12);
        let degenerate = truth("t2", TargetClass::Ship, 5.0, 5.0);
        assert_eq!(track_completeness(&degenerate, None), Err(FomError::ZeroLengthTrajectory("t2".into())));
    }

    #[test]
    fn time_frame_examples() {
        let tl = RadarTimeline { duration: 12.0, entries: vec![surv(0.0, 0), surv(4.0, 0), surv(8.0, 0)] };
        let tf = time_frame(&tl, 1);
        assert_eq!(tf.seconds, 4.0);
        assert!(tf.unrevisited.is_empty());

        let tl = RadarTimeline {
            duration: 12.0,
            entries: vec![surv(0.0, 0), surv(1.0, 1), surv(4.0, 0), surv(7.0, 1), surv(8.0, 0)],
        };
        assert_eq!(time_frame(&tl, 2).seconds, 5.0);

        let tl = RadarTimeline { duration: 60.0, entries: vec![surv(3.0, 0)] };
        let tf = time_frame(&tl, 1);
        assert_eq!(tf.seconds, 60.0);
        assert_eq!(tf.unrevisited, vec![0]);
    }

    #[test]
    fn occupancy_examples() {
        let update = |start: f64, duration: f64| Dwell {
            start,
            duration,
            kind: DwellKind::TrackUpdate { target_id: "t".into() },
        };
        let tl = RadarTimeline { duration: 100.0, entries: vec![update(0.0, 10.0), update(50.0, 20.0)] };
        assert_abs_diff_eq!(track_occupancy(&tl), 0.3, epsilon = 1e-12);
        assert_abs_diff_eq!(idle_fraction(&tl), 0.7, epsilon = 1e-12);
        let empty = RadarTimeline { duration: 100.0, entries: vec![] };
        assert_eq!(track_occupancy(&empty), 0.0);
        assert_eq!(idle_fraction(&empty), 1.0);
        let full = RadarTimeline { duration: 100.0, entries: vec![update(0.0, 100.0)] };
        assert_eq!(track_occupancy(&full), 1.0);
    }

    #[test]
    fn untracked_examples() {
        let truths = vec![
            truth("a", TargetClass::BallisticMissile, 0.0, 10.0),
            truth("b", TargetClass::Bird, 0.0, 100.0),
            truth("c", TargetClass::Bird, 0.0, 100.0),
        ];
        let tracks = vec![track("a", &[[0.0, 10.0]]), track("b", &[[0.0, 5.0]])];
        let zero = untracked_count(&truths, &tracks, 0.0).unwrap();
        assert_eq!(zero[&TargetClass::Bird], 1);
        assert_eq!(zero[&TargetClass::BallisticMissile], 0);
        assert_eq!(zero.len(), 6);
        let ten = untracked_count(&truths, &tracks, 0.1).unwrap();
        assert_eq!(ten[&TargetClass::Bird], 2);

        let all = vec![track("a", &[[0.0, 10.0]]), track("b", &[[0.0, 100.0]]), track("c", &[[0.0, 100.0]])];
        assert!(untracked_count(&truths, &all, 0.0).unwrap().values().all(|&c| c == 0));
        assert_eq!(untracked_count(&truths, &all, 1.0), Err(FomError::InvalidThreshold(1.0)));
    }

    fn scenario(id: &str, missiles: usize, occupancy: f64) -> ScenarioOutput {
        let truths = (0..missiles)
            .map(|i| truth(&format!("bm{i}"), TargetClass::BallisticMissile, 0.0, 50.0))
            .collect();
        ScenarioOutput {
            scenario_id: id.into(),
            truths,
            tracks: vec![track("bm0", &[[0.0, 25.0]])],
            timeline: RadarTimeline {
                duration: 100.0,
                entries: vec![
                    surv(0.0, 0),
                    surv(2.0, 0),
                    Dwell { start: 10.0, duration: occupancy * 100.0, kind: DwellKind::TrackUpdate { target_id: "bm0".into() } },
                ],
            },
        }
    }

    #[test]
    fn collect_counts_samples() {
        let runs = vec![
            AlternativeRuns { alternative: "a-stu".into(), outputs: vec![scenario("s0", 3, 0.3), scenario("s1", 3, 0.5)] },
            AlternativeRuns { alternative: "na-nsr".into(), outputs: vec![scenario("s0", 3, 0.3)] },
        ];
        let set = collect_measurements(&runs, 1).unwrap();
        let bm = set.samples("a-stu", ids::TC_BALLISTIC_MISSILE).unwrap();
        assert_eq!(bm.len(), 6);
        assert_eq!(bm[0].value, 0.5);
        assert_eq!(bm[0].track_id.as_deref(), Some("bm0"));
        let occ = set.values("a-stu", ids::TRACK_OCCUPANCY);
        assert_abs_diff_eq!(occ[0], 0.3, epsilon = 1e-12);
        assert_abs_diff_eq!(occ[1], 0.5, epsilon = 1e-12);
        assert_eq!(set.values("a-stu", ids::TIME_FRAME), [2.0, 2.0]);
        assert_eq!(set.samples("na-nsr", ids::TC_BALLISTIC_MISSILE).unwrap().len(), 3);

        let empty = vec![AlternativeRuns { alternative: "x".into(), outputs: vec![] }];
        assert_eq!(collect_measurements(&empty, 1), Err(FomError::NoScenarios("x".into())));
    }

    proptest! {
        #[test]
        fn completeness_additive_over_disjoint_intervals(cuts in prop::collection::vec(0.0f64..100.0, 4)) {
            let mut c = cuts.clone();
            c.sort_by(f64::total_cmp);
            let t = truth("t", TargetClass::Bird, 0.0, 100.0);
            let a = track_completeness(&t, Some(&track("t", &[[c[0], c[1]]]))).unwrap();
            let b = track_completeness(&t, Some(&track("t", &[[c[2], c[3]]]))).unwrap();
            let both = track_completeness(&t, Some(&track("t", &[[c[0], c[1]], [c[2], c[3]]]))).unwrap();
            prop_assert!((both - a - b).abs() <= 1e-12);
            prop_assert!((0.0..=1.0).contains(&both));
        }

        #[test]
        fn untracked_grows_with_threshold(covers in prop::collection::vec(0.0f64..1.0, 1..20), th in 0.0f64..0.99) {
            let truths: Vec<_> = covers.iter().enumerate().map(|(i, _)| truth(&i.to_string(), TargetClass::ALL[i % 6], 0.0, 1.0)).collect();
            let tracks: Vec<_> = covers.iter().enumerate().filter(|(i, _)| i % 3 != 0).map(|(i, c)| track(&i.to_string(), &[[0.0, *c]])).collect();
            let zero = untracked_count(&truths, &tracks, 0.0).unwrap();
            let some = untracked_count(&truths, &tracks, th).unwrap();
            for class in TargetClass::ALL {
                prop_assert!(zero[&class] <= some[&class]);
            }
        }
    }
}
