//! The bundled end-to-end run: simulate both policies with and without
//! clutter, extract figures of merit, evaluate against the default model and
//! compare.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::evaluation::{evaluate, EvalError, EvalOptions};
use crate::fom::{collect_measurements, untracked_count, AlternativeRuns, FomError, TargetClass};
use crate::io::report::{compare, CompareError, Comparison, Report};
use crate::io::{create_dir, save_measurements, write_text, IoError};
use crate::model::{default_paper_model, MeasurementSet, PreferenceModel};
use crate::simulator::{run_scenario, Policy, PolicyKind, ScenarioConfig, SimError, SimStats};

pub const DEMO_SEED: u64 = 7;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Fom(#[from] FomError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Compare(#[from] CompareError),
    #[error(transparent)]
    Io(#[from] IoError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemoConfig {
    pub seed: u64,
    pub launch_scales: Vec<f64>,
    /// Seeds per launch scale for each policy; unequal counts are allowed.
    pub seeds_per_scale: BTreeMap<PolicyKind, u64>,
    pub sectors: u32,
    pub untracked_threshold: f64,
}

impl Default for DemoConfig {
    fn default() -> Self {
        Self {
            seed: DEMO_SEED,
            launch_scales: vec![0.5, 1.0, 1.5, 2.0],
            seeds_per_scale: [(PolicyKind::AStu, 2), (PolicyKind::NaNsr, 1)].into_iter().collect(),
            sectors: 16,
            untracked_threshold: 0.0,
        }
    }
}

impl DemoConfig {
    /// Scenario configurations run for `policy` under one clutter condition.
    pub fn scenarios(&self, policy: PolicyKind, clutter: bool) -> Vec<ScenarioConfig> {
        let seeds = self.seeds_per_scale.get(&policy).copied().unwrap_or(0);
        let mut out = Vec::new();
        for &scale in &self.launch_scales {
            for k in 0..seeds {
                let mut cfg = ScenarioConfig::desk_scale(self.seed + k);
                cfg.sectors = self.sectors;
                cfg.clutter = clutter;
                cfg.launch_region_scale = scale;
                out.push(cfg);
            }
        }
        out
    }
}

/// Results for one clutter condition.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionRun {
    pub clutter: bool,
    pub measurements: MeasurementSet,
    pub report: Report,
    /// Untracked targets per alternative and class, summed over scenarios.
    pub untracked: BTreeMap<String, BTreeMap<TargetClass, usize>>,
    pub stats: BTreeMap<String, SimStats>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemoResult {
    pub clear: ConditionRun,
    pub clutter: ConditionRun,
}

impl DemoResult {
    /// A+STU against NA+NSR under one condition.
    pub fn policy_comparison(&self, clutter: bool) -> Result<Comparison, CompareError> {
        let run = if clutter { &self.clutter } else { &self.clear };
        compare(&run.report, Some(PolicyKind::NaNsr.as_str()), &run.report, Some(PolicyKind::AStu.as_str()))
    }

    /// `policy` with clutter against `policy` without.
    pub fn clutter_comparison(&self, policy: PolicyKind) -> Result<Comparison, CompareError> {
        compare(&self.clear.report, Some(policy.as_str()), &self.clutter.report, Some(policy.as_str()))
    }
}

fn run_condition(cfg: &DemoConfig, model: &PreferenceModel, clutter: bool) -> Result<ConditionRun, PipelineError> {
    let mut runs = Vec::new();
    let mut untracked = BTreeMap::new();
    let mut stats = BTreeMap::new();
    for policy in [PolicyKind::AStu, PolicyKind::NaNsr] {
        let mut outputs = Vec::new();
        let mut counts: BTreeMap<TargetClass, usize> = BTreeMap::new();
        let mut total = SimStats::default();
        for scenario in cfg.scenarios(policy, clutter) {
            let run = run_scenario(&scenario, &Policy::of_kind(policy))?;
            for (class, n) in untracked_count(&run.output.truths, &run.output.tracks, cfg.untracked_threshold)? {
                *counts.entry(class).or_default() += n;
            }
            total.initiations += run.stats.initiations;
            total.drops += run.stats.drops;
            total.deferred_updates += run.stats.deferred_updates;
            total.deferred_confirmations += run.stats.deferred_confirmations;
            total.false_alarms += run.stats.false_alarms;
            outputs.push(run.output);
        }
        untracked.insert(policy.as_str().to_string(), counts);
        stats.insert(policy.as_str().to_string(), total);
        runs.push(AlternativeRuns { alternative: policy.as_str().into(), outputs });
    }
    let measurements = collect_measurements(&runs, cfg.sectors)?;
    let opts = EvalOptions::default();
    let evaluation = evaluate(model, &measurements, &opts)?;
    let report = Report::new(&evaluation, model, &opts);
    Ok(ConditionRun { clutter, measurements, report, untracked, stats })
}

/// Runs the demo against the default model.
pub fn run_demo(cfg: &DemoConfig) -> Result<DemoResult, PipelineError> {
    run_demo_with(cfg, &default_paper_model())
}

pub fn run_demo_with(cfg: &DemoConfig, model: &PreferenceModel) -> Result<DemoResult, PipelineError> {
    Ok(DemoResult { clear: run_condition(cfg, model, false)?, clutter: run_condition(cfg, model, true)? })
}

#[derive(Serialize)]
struct Summary<'a> {
    untracked: BTreeMap<&'static str, &'a BTreeMap<String, BTreeMap<TargetClass, usize>>>,
    stats: BTreeMap<&'static str, &'a BTreeMap<String, SimStats>>,
}

/// Writes measurements, reports, comparisons and an untracked-target
/// summary into `dir`.
pub fn write_demo(result: &DemoResult, dir: &Path) -> Result<Vec<PathBuf>, PipelineError> {
    create_dir(dir)?;
    let mut paths = Vec::new();
    for run in [&result.clear, &result.clutter] {
        let tag = if run.clutter { "clutter" } else { "clear" };
        let p = dir.join(format!("measurements-{tag}.csv"));
        save_measurements(&run.measurements, &p)?;
        paths.push(p);
        let p = dir.join(format!("report-{tag}.json"));
        write_text(&p, &run.report.to_json())?;
        paths.push(p);
        let p = dir.join(format!("report-{tag}.md"));
        write_text(&p, &run.report.to_markdown())?;
        paths.push(p);
        let p = dir.join(format!("comparison-{tag}.md"));
        write_text(&p, &result.policy_comparison(run.clutter)?.to_markdown())?;
        paths.push(p);
    }
    let p = dir.join("comparison-clutter-effect.md");
    write_text(&p, &result.clutter_comparison(PolicyKind::AStu)?.to_markdown())?;
    paths.push(p);
    let summary = Summary {
        untracked: [("clear", &result.clear.untracked), ("clutter", &result.clutter.untracked)].into_iter().collect(),
        stats: [("clear", &result.clear.stats), ("clutter", &result.clutter.stats)].into_iter().collect(),
    };
    let p = dir.join("summary.json");
    write_text(&p, &(serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n"))?;
    paths.push(p);
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ids;

    fn small() -> DemoConfig {
        DemoConfig { launch_scales: vec![1.0], ..DemoConfig::default() }
    }

    #[test]
    fn unequal_scenario_counts() {
        let cfg = DemoConfig::default();
        assert_eq!(cfg.scenarios(PolicyKind::AStu, false).len(), 8);
        assert_eq!(cfg.scenarios(PolicyKind::NaNsr, true).len(), 4);
    }

    #[test]
    fn small_demo_runs_and_writes() {
        let result = run_demo(&small()).unwrap();
        let ms = &result.clear.measurements;
        assert_eq!(ms.values("a-stu", ids::TIME_FRAME).len(), 2);
        assert_eq!(ms.values("na-nsr", ids::TIME_FRAME).len(), 1);
        assert_eq!(result.clear.untracked["a-stu"].len(), 6);
        let dir = tempfile::tempdir().unwrap();
        let paths = write_demo(&result, dir.path()).unwrap();
        assert_eq!(paths.len(), 10);
        assert!(paths.iter().all(|p| p.exists()));
    }
}
