//! Seeded, desk-scale radar resource simulator.
//!
//! Time advances in fixed ticks. Each tick offers `beam_budget · tick` beams;
//! every beam goes to a track update, a confirmation look or the surveillance
//! scan. Kinematics are abstract (normalized range and closing speed), clutter
//! is a per-dwell detection multiplier plus false alarms, and association is
//! perfect.
//!
//! Two policies are provided:
//!
//! * `na-nsr`: every track is revisited at one fixed interval, updates are
//!   served earliest-due first.
//! * `a-stu`: fuzzy prioritization, priority-ordered time-balancing scheduling
//!   and adaptive update intervals per track.
//!
//! Random numbers come from ChaCha8 (`rand_chacha`), seeded with the scenario
//! seed. Stream 0 generates the ground truth, stream `1 + i` drives the
//! detections of target `i` and stream `u64::MAX` the false alarms, so truth
//! is identical across policies and clutter conditions.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fom::{Dwell, DwellKind, RadarTimeline, ScenarioOutput, TargetClass, TrackRecord, TruthTrajectory};

/// Recorded in run manifests.
pub const RNG_DESCRIPTION: &str =
    "ChaCha8 (rand_chacha 0.3) seeded from the scenario seed; stream 0 truth, stream 1+i target i, stream 2^64-1 false alarms";

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("invalid scenario configuration: {0}")]
    InvalidConfig(String),
    #[error("unknown policy `{0}` (expected na-nsr or a-stu)")]
    UnknownPolicy(String),
}

/// Tunable radar and tracking constants. Defaults are documented assumptions
/// for a desk-scale stand-in, not measured radar parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadarParams {
    /// Detections needed within the last `initiation_window` looks.
    pub initiation_hits: usize,
    pub initiation_window: usize,
    /// Consecutive missed updates before a track is dropped.
    pub drop_after_misses: u32,
    /// Share of each tick's beams reserved for surveillance and confirmation.
    pub min_surveillance_fraction: f64,
    /// Detection multiplier under clutter for small and large targets.
    pub clutter_small: f64,
    pub clutter_large: f64,
    /// Probability that a surveillance look produces a false alarm under
    /// clutter. Each false alarm costs one confirmation beam.
    pub false_alarm_probability: f64,
}

impl Default for RadarParams {
    fn default() -> Self {
        Self {
            initiation_hits: 2,
            initiation_window: 3,
            drop_after_misses: 3,
            min_surveillance_fraction: 0.3,
            clutter_small: 0.6,
            clutter_large: 0.9,
            false_alarm_probability: 0.05,
        }
    }
}

fn default_sectors() -> u32 {
    16
}

fn default_tick() -> f64 {
    0.25
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Scenario id; derived from the other fields when absent.
    #[serde(default)]
    pub name: Option<String>,
    /// Seconds.
    pub duration: f64,
    pub seed: u64,
    pub populations: BTreeMap<TargetClass, u32>,
    #[serde(default)]
    pub clutter: bool,
    /// Relative area of the ballistic-missile launch region. Larger regions
    /// spread launches over more sectors, each of which is searched twice per
    /// surveillance cycle.
    #[serde(default = "one")]
    pub launch_region_scale: f64,
    /// Beams per second.
    pub beam_budget: u32,
    #[serde(default = "default_sectors")]
    pub sectors: u32,
    /// Scheduling tick in seconds.
    #[serde(default = "default_tick")]
    pub tick: f64,
    #[serde(default)]
    pub radar: RadarParams,
}

fn one() -> f64 {
    1.0
}

impl ScenarioConfig {
    /// Default desk-scale scenario: five minutes, 40 beams per second, a
    /// population that saturates a fixed-rate tracker.
    pub fn desk_scale(seed: u64) -> Self {
        let populations = [
            (TargetClass::BallisticMissile, 8),
            (TargetClass::CommercialAircraft, 30),
            (TargetClass::RecreationalAircraft, 25),
            (TargetClass::Bird, 40),
            (TargetClass::Ship, 15),
            (TargetClass::RecreationalBoat, 25),
        ]
        .into_iter()
        .collect();
        Self {
            name: None,
            duration: 300.0,
            seed,
            populations,
            clutter: false,
            launch_region_scale: 1.0,
            beam_budget: 40,
            sectors: default_sectors(),
            tick: default_tick(),
            radar: RadarParams::default(),
        }
    }

    pub fn scenario_id(&self) -> String {
        match &self.name {
            Some(n) => n.clone(),
            None => format!(
                "seed{}-lrs{}-{}",
                self.seed,
                self.launch_region_scale,
                if self.clutter { "clutter" } else { "clear" }
            ),
        }
    }

    pub fn beams_per_tick(&self) -> usize {
        (self.beam_budget as f64 * self.tick).round() as usize
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidConfig(m));
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return bad(format!("duration must be positive, got {}", self.duration));
        }
        if self.beam_budget == 0 {
            return bad("beam_budget must be positive".into());
        }
        if !(self.tick > 0.0 && self.tick.is_finite()) {
            return bad(format!("tick must be positive, got {}", self.tick));
        }
        let per_tick = self.beam_budget as f64 * self.tick;
        if per_tick < 1.0 || (per_tick - per_tick.round()).abs() > 1e-9 {
            return bad(format!("beam_budget * tick must be a positive integer, got {per_tick}"));
        }
        if self.sectors == 0 {
            return bad("sectors must be positive".into());
        }
        if !(self.launch_region_scale >= 0.0 && self.launch_region_scale.is_finite()) {
            return bad(format!("launch_region_scale must be >= 0, got {}", self.launch_region_scale));
        }
        let r = &self.radar;
        if r.initiation_hits == 0 || r.initiation_hits > r.initiation_window {
            return bad("initiation needs 1 <= hits <= window".into());
        }
        if r.drop_after_misses == 0 {
            return bad("drop_after_misses must be positive".into());
        }
        for (name, v) in [
            ("min_surveillance_fraction", r.min_surveillance_fraction),
            ("clutter_small", r.clutter_small),
            ("clutter_large", r.clutter_large),
            ("false_alarm_probability", r.false_alarm_probability),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} must be in [0, 1], got {v}"));
            }
        }
        Ok(())
    }

    fn launch_sectors(&self) -> u32 {
        ((self.launch_region_scale * 2.0).ceil() as u32).min(self.sectors)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PolicyKind {
    #[serde(rename = "na-nsr")]
    NaNsr,
    #[serde(rename = "a-stu")]
    AStu,
}

impl PolicyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::NaNsr => "na-nsr",
            Self::AStu => "a-stu",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::NaNsr => "NA+NSR",
            Self::AStu => "A+STU",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PolicyKind {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "na-nsr" => Ok(Self::NaNsr),
            "a-stu" => Ok(Self::AStu),
            other => Err(SimError::UnknownPolicy(other.into())),
        }
    }
}

/// Resource management policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Policy {
    pub kind: PolicyKind,
    /// Revisit interval of every track under `na-nsr`, seconds.
    pub fixed_interval: f64,
    /// Per-class base intervals under `a-stu`, seconds.
    pub base_intervals: BTreeMap<TargetClass, f64>,
    /// Shortest adaptive interval as a fraction of the base interval.
    pub min_interval_factor: f64,
}

impl Policy {
    pub fn na_nsr() -> Self {
        Self { kind: PolicyKind::NaNsr, fixed_interval: 2.0, base_intervals: BTreeMap::new(), min_interval_factor: 1.0 }
    }

    pub fn a_stu() -> Self {
        let base_intervals = TargetClass::ALL.iter().map(|&c| (c, profile(c).base_interval)).collect();
        Self { kind: PolicyKind::AStu, fixed_interval: 2.0, base_intervals, min_interval_factor: 0.25 }
    }

    pub fn of_kind(kind: PolicyKind) -> Self {
        match kind {
            PolicyKind::NaNsr => Self::na_nsr(),
            PolicyKind::AStu => Self::a_stu(),
        }
    }

    fn priority(&self, state: &TargetState) -> f64 {
        match self.kind {
            // no prioritization: every track ranks the same
            PolicyKind::NaNsr => 0.5,
            PolicyKind::AStu => fuzzy_priority(state),
        }
    }

    fn interval(&self, class: TargetClass, priority: f64) -> f64 {
        match self.kind {
            PolicyKind::NaNsr => self.fixed_interval,
            PolicyKind::AStu => {
                let base = self.base_intervals.get(&class).copied().unwrap_or(profile(class).base_interval);
                adaptive_update_interval(priority, base, self.min_interval_factor)
            }
        }
    }

    fn validate(&self) -> Result<(), SimError> {
        let ok = self.fixed_interval > 0.0
            && self.base_intervals.values().all(|&v| v > 0.0)
            && self.min_interval_factor > 0.0
            && self.min_interval_factor <= 1.0;
        if ok {
            Ok(())
        } else {
            Err(SimError::InvalidConfig("policy intervals must be positive".into()))
        }
    }
}

/// Kinematic snapshot fed to the prioritization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetState {
    pub class: TargetClass,
    /// Normalized distance, 0 at the radar.
    pub range: f64,
    /// Normalized closing speed; positive means approaching.
    pub closing_speed: f64,
    /// Base detection probability per surveillance look.
    pub detectability: f64,
}

struct ClassProfile {
    /// Per-look detection probability in surveillance.
    search_pd: f64,
    /// Per-dwell detection probability of a pointed track beam.
    track_pd: f64,
    /// Class threat level, input to the prioritization.
    threat: f64,
    large: bool,
    lifetime: (f64, f64),
    closing: (f64, f64),
    /// Seconds over which an unrefreshed track prediction stays usable.
    coherence: f64,
    base_interval: f64,
}

fn profile(class: TargetClass) -> ClassProfile {
    use TargetClass::*;
    match class {
        BallisticMissile => ClassProfile {
            search_pd: 0.8,
            track_pd: 0.98,
            threat: 1.0,
            large: true,
            lifetime: (60.0, 150.0),
            closing: (0.6, 1.0),
            coherence: 2.5,
            base_interval: 2.0,
        },
        CommercialAircraft => ClassProfile {
            search_pd: 0.85,
            track_pd: 0.98,
            threat: 0.5,
            large: true,
            lifetime: (90.0, 240.0),
            closing: (-0.5, 0.5),
            coherence: 8.0,
            base_interval: 4.0,
        },
        RecreationalAircraft => ClassProfile {
            search_pd: 0.6,
            track_pd: 0.93,
            threat: 0.55,
            large: false,
            lifetime: (90.0, 240.0),
            closing: (-0.5, 0.5),
            coherence: 7.0,
            base_interval: 3.5,
        },
        Bird => ClassProfile {
            search_pd: 0.5,
            track_pd: 0.92,
            threat: 0.0,
            large: false,
            lifetime: (60.0, 200.0),
            closing: (-0.2, 0.2),
            coherence: 15.0,
            base_interval: 7.0,
        },
        Ship => ClassProfile {
            search_pd: 0.9,
            track_pd: 0.99,
            threat: 0.5,
            large: true,
            lifetime: (150.0, 300.0),
            closing: (-0.2, 0.2),
            coherence: 30.0,
            base_interval: 8.0,
        },
        RecreationalBoat => ClassProfile {
            search_pd: 0.6,
            track_pd: 0.93,
            threat: 0.3,
            large: false,
            lifetime: (100.0, 300.0),
            closing: (-0.3, 0.3),
            coherence: 15.0,
            base_interval: 6.0,
        },
    }
}

// Shouldered triangular membership: 1 at `peak`, 0 at and beyond `lo`/`hi`;
// `lo == peak` or `peak == hi` make a shoulder.
fn tri(x: f64, lo: f64, peak: f64, hi: f64) -> f64 {
    if x == peak {
        1.0
    } else if x < peak {
        if x <= lo {
            0.0
        } else {
            (x - lo) / (peak - lo)
        }
    } else if x >= hi {
        0.0
    } else {
        (hi - x) / (hi - peak)
    }
}

fn ramp_down(x: f64, full: f64, zero: f64) -> f64 {
    if x <= full {
        1.0
    } else if x >= zero {
        0.0
    } else {
        (zero - x) / (zero - full)
    }
}

fn ramp_up(x: f64, zero: f64, full: f64) -> f64 {
    1.0 - ramp_down(x, zero, full)
}

/// Mamdani fuzzy priority in `[0, 1]` from class threat, range and closing
/// speed; min for AND, max for OR and aggregation, centroid defuzzification.
///
/// Rule base:
/// 1. threat high → high
/// 2. threat medium ∧ (range near ∨ closing) → high
/// 3. threat medium ∧ range mid → medium
/// 4. threat medium ∧ neutral speed → medium
/// 5. threat medium ∧ range far ∧ ¬closing → low
/// 6. threat low → low
///
/// Ballistic missiles have maximal threat, so only rule 1 fires for them and
/// they always outrank birds, which have minimal threat and only fire rule 6.
pub fn fuzzy_priority(s: &TargetState) -> f64 {
    let threat = profile(s.class).threat;
    let t_low = ramp_down(threat, 0.0, 0.5);
    let t_med = tri(threat, 0.0, 0.5, 1.0);
    let t_high = ramp_up(threat, 0.5, 1.0);

    let range = s.range.clamp(0.0, 1.0);
    let near = ramp_down(range, 0.0, 0.5);
    let mid = tri(range, 0.2, 0.5, 0.8);
    let far = ramp_up(range, 0.5, 1.0);

    let v = s.closing_speed.clamp(-1.0, 1.0);
    let closing = ramp_up(v, 0.0, 1.0);
    let neutral = tri(v, -0.5, 0.0, 0.5);

    let high = t_high.max(t_med.min(near.max(closing)));
    let medium = t_med.min(mid).max(t_med.min(neutral));
    let low = t_low.max(t_med.min(far).min(1.0 - closing));

    const STEPS: usize = 1000;
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..=STEPS {
        let y = i as f64 / STEPS as f64;
        let mu = tri(y, 0.0, 0.0, 0.4)
            .min(low)
            .max(tri(y, 0.2, 0.5, 0.8).min(medium))
            .max(tri(y, 0.6, 1.0, 1.0).min(high));
        num += y * mu;
        den += mu;
    }
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// `base · (f + (1 − priority)·(1 − f))`: `base` at priority 0, `f · base` at
/// priority 1.
pub fn adaptive_update_interval(priority: f64, base_interval: f64, min_factor: f64) -> f64 {
    let p = priority.clamp(0.0, 1.0);
    base_interval * (min_factor + (1.0 - p) * (1.0 - min_factor))
}

/// A track update waiting for a beam.
#[derive(Debug, Clone, PartialEq)]
pub struct PendingUpdate {
    pub target_id: String,
    pub due: f64,
    pub priority: f64,
}

/// Round-robin surveillance pattern: every sector once, then the launch
/// sectors again.
#[derive(Debug, Clone, PartialEq)]
pub struct SurveillanceQueue {
    pattern: Vec<u32>,
    cursor: usize,
}

impl SurveillanceQueue {
    pub fn new(sectors: u32, launch_sectors: u32) -> Self {
        let mut pattern: Vec<u32> = (0..sectors).collect();
        pattern.extend(0..launch_sectors.min(sectors));
        Self { pattern, cursor: 0 }
    }

    pub fn next_sector(&mut self) -> u32 {
        let s = self.pattern[self.cursor];
        self.cursor = (self.cursor + 1) % self.pattern.len();
        s
    }

    pub fn cycle_len(&self) -> usize {
        self.pattern.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TickBudget {
    pub beams: usize,
    /// Cap on track-update beams; the rest is kept for surveillance.
    pub max_track_beams: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BeamAssignment {
    TrackUpdate(String),
    Confirmation,
    Surveillance(u32),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TickPlan {
    pub beams: Vec<BeamAssignment>,
    /// Due updates that did not get a beam, in scheduling order.
    pub deferred: Vec<String>,
    pub deferred_confirmations: usize,
}

/// Assigns one tick's beams.
///
/// Due updates are ordered by priority (highest first), then due time
/// (most overdue first), then target id, and take beams up to the track cap.
/// Pending confirmations come next and surveillance fills the rest, so no
/// beam is left unassigned or used twice.
pub fn schedule_tick(
    pending: &[PendingUpdate],
    confirmations: usize,
    surveillance: &mut SurveillanceQueue,
    budget: TickBudget,
) -> TickPlan {
    let mut order: Vec<&PendingUpdate> = pending.iter().collect();
    order.sort_by(|a, b| {
        b.priority
            .total_cmp(&a.priority)
            .then(a.due.total_cmp(&b.due))
            .then_with(|| a.target_id.cmp(&b.target_id))
    });
    let track_beams = budget.max_track_beams.min(budget.beams).min(order.len());
    let mut beams: Vec<BeamAssignment> =
        order[..track_beams].iter().map(|p| BeamAssignment::TrackUpdate(p.target_id.clone())).collect();
    let deferred = order[track_beams..].iter().map(|p| p.target_id.clone()).collect();
    let confirm = confirmations.min(budget.beams - beams.len());
    beams.extend(std::iter::repeat(BeamAssignment::Confirmation).take(confirm));
    while beams.len() < budget.beams {
        beams.push(BeamAssignment::Surveillance(surveillance.next_sector()));
    }
    TickPlan { beams, deferred, deferred_confirmations: confirmations - confirm }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SimStats {
    pub initiations: u64,
    pub drops: u64,
    pub deferred_updates: u64,
    pub deferred_confirmations: u64,
    pub false_alarms: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationRun {
    pub output: ScenarioOutput,
    pub stats: SimStats,
}

struct Track {
    start: f64,
    last_hit: f64,
    due: f64,
    priority: f64,
    misses: u32,
}

struct Target {
    id: String,
    class: TargetClass,
    alive: [f64; 2],
    range0: f64,
    closing: f64,
    sector: u32,
    rng: ChaCha8Rng,
    looks: VecDeque<bool>,
    track: Option<Track>,
    intervals: Vec<[f64; 2]>,
}

impl Target {
    fn is_alive(&self, t: f64) -> bool {
        t >= self.alive[0] && t < self.alive[1]
    }

    fn state(&self, t: f64) -> TargetState {
        let frac = ((t - self.alive[0]) / (self.alive[1] - self.alive[0])).clamp(0.0, 1.0);
        let range = (self.range0 - 0.8 * self.closing * frac).clamp(0.0, 1.0);
        TargetState { class: self.class, range, closing_speed: self.closing, detectability: profile(self.class).search_pd }
    }

    fn close_track(&mut self, t: f64) {
        if let Some(tr) = self.track.take() {
            let end = t.min(self.alive[1]);
            if end > tr.start {
                self.intervals.push([tr.start, end]);
            }
        }
        self.looks.clear();
    }
}

fn generate_targets(cfg: &ScenarioConfig) -> Vec<Target> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let launch = cfg.launch_sectors().max(1);
    let mut targets = Vec::new();
    for (&class, &count) in &cfg.populations {
        let p = profile(class);
        for k in 0..count {
            let lifetime = rng.gen_range(p.lifetime.0..=p.lifetime.1).min(cfg.duration);
            let t0 = rng.gen_range(0.0..=(cfg.duration - lifetime).max(0.0));
            let range0 = rng.gen_range(0.3..1.0);
            let closing = rng.gen_range(p.closing.0..=p.closing.1);
            let sector = if class == TargetClass::BallisticMissile {
                rng.gen_range(0..launch)
            } else {
                rng.gen_range(0..cfg.sectors)
            };
            let index = targets.len() as u64;
            let mut trng = ChaCha8Rng::seed_from_u64(cfg.seed);
            trng.set_stream(1 + index);
            targets.push(Target {
                id: format!("{}-{k:03}", class.as_str()),
                class,
                alive: [t0, t0 + lifetime],
                range0,
                closing,
                sector,
                rng: trng,
                looks: VecDeque::new(),
                track: None,
                intervals: Vec::new(),
            });
        }
    }
    targets
}

fn clutter_factor(cfg: &ScenarioConfig, class: TargetClass) -> f64 {
    match (cfg.clutter, profile(class).large) {
        (false, _) => 1.0,
        (true, true) => cfg.radar.clutter_large,
        (true, false) => cfg.radar.clutter_small,
    }
}

fn range_factor(range: f64) -> f64 {
    1.0 - 0.3 * range
}

/// Runs one scenario under one policy. Identical inputs give bit-identical
/// outputs.
pub fn run_scenario(cfg: &ScenarioConfig, policy: &Policy) -> Result<SimulationRun, SimError> {
    cfg.validate()?;
    policy.validate()?;
    let mut targets = generate_targets(cfg);
    let index: BTreeMap<String, usize> = targets.iter().enumerate().map(|(i, t)| (t.id.clone(), i)).collect();
    let mut fa_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    fa_rng.set_stream(u64::MAX);

    let beams = cfg.beams_per_tick();
    let reserve = (beams as f64 * cfg.radar.min_surveillance_fraction).ceil() as usize;
    let budget = TickBudget { beams, max_track_beams: beams.saturating_sub(reserve) };
    let beam_time = 1.0 / cfg.beam_budget as f64;
    let mut queue = SurveillanceQueue::new(cfg.sectors, cfg.launch_sectors());
    let mut by_sector: Vec<Vec<usize>> = vec![Vec::new(); cfg.sectors as usize];
    for (i, t) in targets.iter().enumerate() {
        by_sector[t.sector as usize].push(i);
    }

    let mut entries = Vec::new();
    let mut stats = SimStats::default();
    let mut confirmations = 0usize;
    let ticks = (cfg.duration / cfg.tick).round() as usize;

    for tick in 0..ticks {
        let now = tick as f64 * cfg.tick;
        let tick_end = now + cfg.tick;
        for t in targets.iter_mut() {
            if t.track.is_some() && now >= t.alive[1] {
                t.close_track(t.alive[1]);
            }
        }
        let pending: Vec<PendingUpdate> = targets
            .iter()
            .filter_map(|t| {
                t.track.as_ref().filter(|tr| tr.due < tick_end).map(|tr| PendingUpdate {
                    target_id: t.id.clone(),
                    due: tr.due,
                    priority: tr.priority,
                })
            })
            .collect();
        let plan = schedule_tick(&pending, confirmations, &mut queue, budget);
        stats.deferred_updates += plan.deferred.len() as u64;
        stats.deferred_confirmations += plan.deferred_confirmations as u64;
        confirmations = plan.deferred_confirmations;

        for (slot, beam) in plan.beams.into_iter().enumerate() {
            let start = now + slot as f64 * beam_time;
            let kind = match beam {
                BeamAssignment::TrackUpdate(id) => {
                    let t = &mut targets[index[&id]];
                    let state = t.state(start);
                    let p = profile(t.class);
                    let tr = t.track.as_mut().expect("pending update without a track");
                    let stale = (start - tr.last_hit).max(0.0) / p.coherence;
                    let pd = p.track_pd * range_factor(state.range) * clutter_factor(cfg, t.class) * (-stale * stale).exp();
                    if t.rng.gen::<f64>() < pd {
                        tr.last_hit = start;
                        tr.misses = 0;
                        tr.priority = policy.priority(&state);
                        tr.due = start + policy.interval(t.class, tr.priority);
                    } else {
                        tr.misses += 1;
                        tr.due = start + cfg.tick;
                        if tr.misses >= cfg.radar.drop_after_misses {
                            stats.drops += 1;
                            t.close_track(start);
                        }
                    }
                    DwellKind::TrackUpdate { target_id: id }
                }
                BeamAssignment::Confirmation => DwellKind::Confirmation,
                BeamAssignment::Surveillance(sector) => {
                    for &i in &by_sector[sector as usize] {
                        let t = &mut targets[i];
                        if !t.is_alive(start) || t.track.is_some() {
                            continue;
                        }
                        let state = t.state(start);
                        let pd = state.detectability * range_factor(state.range) * clutter_factor(cfg, t.class);
                        let hit = t.rng.gen::<f64>() < pd;
                        t.looks.push_back(hit);
                        if t.looks.len() > cfg.radar.initiation_window {
                            t.looks.pop_front();
                        }
                        if t.looks.iter().filter(|h| **h).count() >= cfg.radar.initiation_hits {
                            let priority = policy.priority(&state);
                            t.looks.clear();
                            t.track = Some(Track {
                                start,
                                last_hit: start,
                                due: start + policy.interval(t.class, priority),
                                priority,
                                misses: 0,
                            });
                            stats.initiations += 1;
                        }
                    }
                    if cfg.clutter && fa_rng.gen::<f64>() < cfg.radar.false_alarm_probability {
                        confirmations += 1;
                        stats.false_alarms += 1;
                    }
                    DwellKind::Surveillance { sector }
                }
            };
            entries.push(Dwell { start, duration: beam_time, kind });
        }
    }
    for t in targets.iter_mut() {
        t.close_track(cfg.duration);
    }

    let truths = targets
        .iter()
        .map(|t| TruthTrajectory { target_id: t.id.clone(), class: t.class, alive: t.alive })
        .collect();
    let tracks = targets
        .iter()
        .filter(|t| !t.intervals.is_empty())
        .map(|t| TrackRecord { target_id: t.id.clone(), intervals: t.intervals.clone() })
        .collect();
    let output = ScenarioOutput {
        scenario_id: cfg.scenario_id(),
        truths,
        tracks,
        timeline: RadarTimeline { duration: ticks as f64 * cfg.tick, entries },
    };
    Ok(SimulationRun { output, stats })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fom::{idle_fraction, surveillance_fraction, track_completeness, track_occupancy};
    use approx::assert_abs_diff_eq;

    fn state(class: TargetClass, range: f64, closing: f64) -> TargetState {
        TargetState { class, range, closing_speed: closing, detectability: 0.5 }
    }

    #[test]
    fn priority_bounds_from_rule_base() {
        let bm = fuzzy_priority(&state(TargetClass::BallisticMissile, 0.2, 0.9));
        // centroid of the "high" triangle (0.6, 1, 1)
        assert_abs_diff_eq!(bm, (0.6 + 1.0 + 1.0) / 3.0, epsilon = 1e-3);
        assert!(bm >= 0.8);
        for (r, v) in [(0.0, 1.0), (0.5, 0.0), (1.0, -1.0), (0.1, 0.7)] {
            let bird = fuzzy_priority(&state(TargetClass::Bird, r, v));
            assert!(bird <= 0.3, "bird priority {bird}");
            assert!(fuzzy_priority(&state(TargetClass::BallisticMissile, r, v)) >= bird);
        }
        let a = fuzzy_priority(&state(TargetClass::Ship, 0.4, 0.1));
        assert_eq!(a, fuzzy_priority(&state(TargetClass::Ship, 0.4, 0.1)));
    }

    #[test]
    fn priority_reacts_to_kinematics_for_medium_threats() {
        let near_closing = fuzzy_priority(&state(TargetClass::CommercialAircraft, 0.1, 0.8));
        let far_receding = fuzzy_priority(&state(TargetClass::CommercialAircraft, 0.95, -0.8));
        assert!(near_closing > far_receding);
    }

    #[test]
    fn adaptive_interval_examples() {
        assert_abs_diff_eq!(adaptive_update_interval(1.0, 4.0, 0.25), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(adaptive_update_interval(0.0, 4.0, 0.25), 4.0, epsilon = 1e-12);
        let mut prev = f64::INFINITY;
        for i in 0..=20 {
            let v = adaptive_update_interval(i as f64 / 20.0, 4.0, 0.25);
            assert!(v <= prev);
            prev = v;
        }
    }

    fn pending(id: &str, due: f64, priority: f64) -> PendingUpdate {
        PendingUpdate { target_id: id.into(), due, priority }
    }

    #[test]
    fn schedule_prefers_priority() {
        let mut q = SurveillanceQueue::new(4, 0);
        let plan = schedule_tick(
            &[pending("low", 0.0, 0.2), pending("high", 0.0, 0.9)],
            0,
            &mut q,
            TickBudget { beams: 1, max_track_beams: 1 },
        );
        assert_eq!(plan.beams, vec![BeamAssignment::TrackUpdate("high".into())]);
        assert_eq!(plan.deferred, vec!["low".to_string()]);
    }

    #[test]
    fn schedule_without_updates_is_all_surveillance() {
        let mut q = SurveillanceQueue::new(3, 1);
        let plan = schedule_tick(&[], 0, &mut q, TickBudget { beams: 5, max_track_beams: 3 });
        assert_eq!(
            plan.beams,
            [0, 1, 2, 0, 0].map(BeamAssignment::Surveillance).to_vec()
        );
    }

    #[test]
    fn schedule_tie_breaks() {
        let mut q = SurveillanceQueue::new(1, 0);
        let plan = schedule_tick(
            &[pending("b", 1.0, 0.5), pending("c", 0.5, 0.5), pending("a", 1.0, 0.5)],
            2,
            &mut q,
            TickBudget { beams: 4, max_track_beams: 3 },
        );
        assert_eq!(
            plan.beams,
            vec![
                BeamAssignment::TrackUpdate("c".into()),
                BeamAssignment::TrackUpdate("a".into()),
                BeamAssignment::TrackUpdate("b".into()),
                BeamAssignment::Confirmation,
            ]
        );
        assert_eq!(plan.deferred_confirmations, 1);
    }

    #[test]
    fn schedule_respects_track_cap() {
        let mut q = SurveillanceQueue::new(2, 0);
        let many: Vec<_> = (0..10).map(|i| pending(&format!("t{i}"), 0.0, 0.5)).collect();
        let plan = schedule_tick(&many, 0, &mut q, TickBudget { beams: 10, max_track_beams: 7 });
        assert_eq!(plan.beams.len(), 10);
        assert_eq!(plan.beams.iter().filter(|b| matches!(b, BeamAssignment::TrackUpdate(_))).count(), 7);
        assert_eq!(plan.deferred.len(), 3);
    }

    #[test]
    fn empty_population_is_surveillance_only() {
        let mut cfg = ScenarioConfig::desk_scale(1);
        cfg.populations.clear();
        cfg.duration = 30.0;
        let run = run_scenario(&cfg, &Policy::a_stu()).unwrap();
        assert!(run.output.tracks.is_empty());
        assert_eq!(track_occupancy(&run.output.timeline), 0.0);
        assert!(run.output.timeline.entries.iter().all(|d| matches!(d.kind, DwellKind::Surveillance { .. })));
    }

    #[test]
    fn runs_are_deterministic() {
        let mut cfg = ScenarioConfig::desk_scale(11);
        cfg.duration = 120.0;
        cfg.clutter = true;
        for policy in [Policy::a_stu(), Policy::na_nsr()] {
            let a = run_scenario(&cfg, &policy).unwrap();
            let b = run_scenario(&cfg, &policy).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn truth_does_not_depend_on_policy_or_clutter() {
        let mut cfg = ScenarioConfig::desk_scale(5);
        cfg.duration = 60.0;
        let base = run_scenario(&cfg, &Policy::a_stu()).unwrap().output.truths;
        cfg.clutter = true;
        assert_eq!(run_scenario(&cfg, &Policy::na_nsr()).unwrap().output.truths, base);
    }

    #[test]
    fn timeline_is_consistent() {
        let mut cfg = ScenarioConfig::desk_scale(3);
        cfg.duration = 90.0;
        cfg.clutter = true;
        let run = run_scenario(&cfg, &Policy::na_nsr()).unwrap();
        let tl = &run.output.timeline;
        for w in tl.entries.windows(2) {
            assert!(w[1].start >= w[0].start + w[0].duration - 1e-9);
        }
        let total = track_occupancy(tl) + surveillance_fraction(tl) + idle_fraction(tl);
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-9);
        // per-second beam time never exceeds the budget
        let mut per_second = vec![0.0; cfg.duration as usize];
        for d in &tl.entries {
            per_second[d.start as usize] += d.duration;
        }
        assert!(per_second.iter().all(|&s| s <= 1.0 + 1e-9));
        for tr in &run.output.tracks {
            let truth = run.output.truths.iter().find(|t| t.target_id == tr.target_id).unwrap();
            assert!(tr.intervals.windows(2).all(|w| w[0][1] <= w[1][0]));
            assert!((0.0..=1.0).contains(&track_completeness(truth, Some(tr)).unwrap()));
        }
    }

    #[test]
    fn config_validation() {
        let mut cfg = ScenarioConfig::desk_scale(0);
        cfg.beam_budget = 0;
        assert!(run_scenario(&cfg, &Policy::a_stu()).is_err());
        let mut cfg = ScenarioConfig::desk_scale(0);
        cfg.tick = 0.33;
        assert!(cfg.validate().is_err());
        let mut cfg = ScenarioConfig::desk_scale(0);
        cfg.duration = -1.0;
        assert!(cfg.validate().is_err());
        assert_eq!("x".parse::<PolicyKind>(), Err(SimError::UnknownPolicy("x".into())));
    }

    #[test]
    fn config_parses_from_toml() {
        let text = r#"
            duration = 120.0
            seed = 9
            beam_budget = 40
            clutter = true
            [populations]
            ballistic-missile = 2
            bird = 5
        "#;
        let cfg: ScenarioConfig = toml::from_str(text).unwrap();
        assert_eq!(cfg.populations[&TargetClass::Bird], 5);
        assert_eq!(cfg.sectors, 16);
        assert_eq!(cfg.radar, RadarParams::default());
        assert!(cfg.validate().is_ok());
        assert_eq!(cfg.scenario_id(), "seed9-lrs1-clutter");
    }
}
