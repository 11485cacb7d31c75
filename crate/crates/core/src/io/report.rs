//! Evaluation reports and report comparison.
//!
//! JSON reports are the machine interface: keys in fixed order, every float
//! rounded to 12 significant digits, so identical inputs give byte-identical
//! files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use super::{create_dir, model_hash, write_text, IoError};
use crate::density::GaugeMode;
use crate::evaluation::{AlternativeScore, EvalOptions, Evaluation, NodeScore};
use crate::model::PreferenceModel;

pub const REPORT_FORMAT: &str = "rrm-eval-report/1";

/// Attached to reports whose leaves use the literal-product gauge.
pub const LITERAL_PRODUCT_NOTE: &str =
    "literal-product gauge: figure-literal reading of density times weight curve, interpretation uncertain";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Markdown,
    PlotCsv,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(Self::Json),
            "markdown" | "md" => Ok(Self::Markdown),
            "plotcsv" => Ok(Self::PlotCsv),
            other => Err(format!("unknown report format `{other}` (expected json, markdown or plotcsv)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportOptions {
    pub alpha: Option<f64>,
    pub gauge_mode: Option<GaugeMode>,
    pub grid_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub format: String,
    pub model_sha256: String,
    pub options: ReportOptions,
    pub notes: Vec<String>,
    pub alternatives: Vec<AlternativeScore>,
}

impl Report {
    pub fn new(evaluation: &Evaluation, model: &PreferenceModel, opts: &EvalOptions) -> Self {
        let literal = evaluation.alternatives.iter().any(|a| {
            a.root.walk().iter().any(|(_, n)| n.leaf.as_ref().is_some_and(|l| l.mode == GaugeMode::LiteralProduct))
        });
        Self {
            format: REPORT_FORMAT.into(),
            model_sha256: model_hash(model),
            options: ReportOptions { alpha: opts.alpha, gauge_mode: opts.mode, grid_size: opts.kde.grid_size },
            notes: if literal { vec![LITERAL_PRODUCT_NOTE.into()] } else { Vec::new() },
            alternatives: evaluation.alternatives.clone(),
        }
    }

    pub fn alternative(&self, id: &str) -> Option<&AlternativeScore> {
        self.alternatives.iter().find(|a| a.alternative == id)
    }

    pub fn to_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serializes");
        round_floats(&mut v);
        let mut s = serde_json::to_string_pretty(&v).expect("value serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str, location: &str) -> Result<Self, IoError> {
        let r: Report =
            serde_json::from_str(text).map_err(|e| IoError::Parse { location: location.into(), message: e.to_string() })?;
        if r.format != REPORT_FORMAT {
            return Err(IoError::Parse {
                location: location.into(),
                message: format!("unsupported report format `{}`", r.format),
            });
        }
        Ok(r)
    }

    pub fn load(path: &Path) -> Result<Self, IoError> {
        let text = std::fs::read_to_string(path).map_err(|source| IoError::Read { path: path.into(), source })?;
        Self::from_json(&text, &path.display().to_string())
    }

    /// One gauge table per alternative, rows in depth-first tree order.
    pub fn to_markdown(&self) -> String {
        let mut s = String::from("# Evaluation report\n\n");
        let _ = writeln!(s, "- model sha256: `{}`", self.model_sha256);
        let _ = writeln!(
            s,
            "- gauge mode: {}",
            self.options.gauge_mode.map_or("per model".to_string(), |m| m.to_string())
        );
        let _ = writeln!(s, "- alpha: {}", self.options.alpha.map_or("per model".to_string(), |a| a.to_string()));
        for n in &self.notes {
            let _ = writeln!(s, "- note: {n}");
        }
        for alt in &self.alternatives {
            let _ = write!(s, "\n## {}\n\n| Node | Score | Samples | Clamped | Mode |\n|---|---:|---:|---:|---|\n", alt.alternative);
            for (depth, n) in alt.root.walk() {
                let indent = "&nbsp;&nbsp;".repeat(depth);
                let (samples, clamped, mode) = match &n.leaf {
                    Some(l) => (l.samples.to_string(), l.clamped.to_string(), l.mode.to_string()),
                    None => (String::new(), String::new(), String::new()),
                };
                let _ = writeln!(s, "| {indent}{} | {:.4} | {samples} | {clamped} | {mode} |", n.label, n.score);
            }
        }
        s
    }

    /// Writes one CSV per (alternative, leaf) with columns `grid`,
    /// `metric_density`, `criterion_density` and `weight`.
    pub fn write_plot_csv(&self, dir: &Path) -> Result<Vec<PathBuf>, IoError> {
        create_dir(dir)?;
        let mut paths = Vec::new();
        for alt in &self.alternatives {
            for (_, n) in alt.root.walk() {
                let Some(l) = &n.leaf else { continue };
                let mut text = String::from("grid,metric_density,criterion_density,weight\n");
                for i in 0..l.grid.len() {
                    let _ = writeln!(
                        text,
                        "{},{},{},{}",
                        round_sig(l.grid[i]),
                        round_sig(l.metric_density[i]),
                        round_sig(l.criterion_density[i]),
                        round_sig(l.weight[i])
                    );
                }
                let p = dir.join(format!("{}--{}.csv", alt.alternative, n.id));
                write_text(&p, &text)?;
                paths.push(p);
            }
        }
        Ok(paths)
    }

    /// Writes the report; `path` is a file for json and markdown and a
    /// directory for plotcsv.
    pub fn write(&self, path: &Path, format: ReportFormat) -> Result<Vec<PathBuf>, IoError> {
        match format {
            ReportFormat::Json => write_text(path, &self.to_json()).map(|_| vec![path.into()]),
            ReportFormat::Markdown => write_text(path, &self.to_markdown()).map(|_| vec![path.into()]),
            ReportFormat::PlotCsv => self.write_plot_csv(path),
        }
    }
}

/// `x` rounded to 12 significant digits.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().expect("formatted float parses")
}

fn round_floats(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = round_sig(n.as_f64().expect("f64 number"));
            *v = serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number);
        }
        Value::Array(items) => items.iter_mut().for_each(round_floats),
        Value::Object(map) => map.values_mut().for_each(round_floats),
        _ => {}
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum CompareError {
    #[error("reports were produced with different models ({0} vs {1})")]
    ModelMismatch(String, String),
    #[error("report structure differs: {0}")]
    Structure(String),
    #[error("{which} report has alternatives {available:?}; choose one explicitly")]
    AmbiguousAlternative { which: &'static str, available: Vec<String> },
    #[error("{which} report has no alternative `{id}`")]
    UnknownAlternative { which: &'static str, id: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeDelta {
    pub id: String,
    pub label: String,
    pub depth: usize,
    pub baseline: f64,
    pub candidate: f64,
    pub delta: f64,
}

impl NodeDelta {
    pub fn winner(&self) -> &'static str {
        if self.delta.abs() <= 1e-12 {
            "tie"
        } else if self.delta > 0.0 {
            "candidate"
        } else {
            "baseline"
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub baseline: String,
    pub candidate: String,
    pub model_sha256: String,
    pub nodes: Vec<NodeDelta>,
}

impl Comparison {
    pub fn node(&self, id: &str) -> Option<&NodeDelta> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn to_markdown(&self) -> String {
        let mut s = format!(
            "# Comparison: {} (candidate) vs {} (baseline)\n\n- model sha256: `{}`\n\n| Node | Baseline | Candidate | Delta | Winner |\n|---|---:|---:|---:|---|\n",
            self.candidate, self.baseline, self.model_sha256
        );
        for n in &self.nodes {
            let sign = match n.winner() {
                "tie" => "0".to_string(),
                _ => format!("{:+.4}", n.delta),
            };
            let _ = writeln!(
                s,
                "| {}{} | {:.4} | {:.4} | {sign} | {} |",
                "&nbsp;&nbsp;".repeat(n.depth),
                n.label,
                n.baseline,
                n.candidate,
                n.winner()
            );
        }
        s
    }
}

fn pick<'a>(r: &'a Report, id: Option<&str>, which: &'static str) -> Result<&'a AlternativeScore, CompareError> {
    match id {
        Some(id) => r.alternative(id).ok_or_else(|| CompareError::UnknownAlternative { which, id: id.into() }),
        None if r.alternatives.len() == 1 => Ok(&r.alternatives[0]),
        None => Err(CompareError::AmbiguousAlternative {
            which,
            available: r.alternatives.iter().map(|a| a.alternative.clone()).collect(),
        }),
    }
}

/// Per-node score deltas `candidate − baseline`. Both reports must come from
/// the same model and share the tree structure. Alternatives may be omitted
/// when a report holds exactly one.
pub fn compare(
    baseline: &Report,
    baseline_alt: Option<&str>,
    candidate: &Report,
    candidate_alt: Option<&str>,
) -> Result<Comparison, CompareError> {
    if baseline.model_sha256 != candidate.model_sha256 {
        return Err(CompareError::ModelMismatch(baseline.model_sha256.clone(), candidate.model_sha256.clone()));
    }
    let b = pick(baseline, baseline_alt, "baseline")?;
    let c = pick(candidate, candidate_alt, "candidate")?;
    let mut nodes = Vec::new();
    zip_nodes(&b.root, &c.root, 0, &mut nodes)?;
    Ok(Comparison {
        baseline: b.alternative.clone(),
        candidate: c.alternative.clone(),
        model_sha256: baseline.model_sha256.clone(),
        nodes,
    })
}

fn zip_nodes(b: &NodeScore, c: &NodeScore, depth: usize, out: &mut Vec<NodeDelta>) -> Result<(), CompareError> {
    if b.id != c.id {
        return Err(CompareError::Structure(format!("node `{}` vs `{}`", b.id, c.id)));
    }
    if b.children.len() != c.children.len() {
        let missing: Vec<&str> = {
            let (long, short) = if b.children.len() > c.children.len() { (b, c) } else { (c, b) };
            long.children.iter().map(|n| n.id.as_str()).filter(|id| short.children.iter().all(|s| s.id != *id)).collect()
        };
        return Err(CompareError::Structure(format!("node `{}`: missing children {missing:?}", b.id)));
    }
    out.push(NodeDelta {
        id: b.id.clone(),
        label: b.label.clone(),
        depth,
        baseline: b.score,
        candidate: c.score,
        delta: c.score - b.score,
    });
    for (x, y) in b.children.iter().zip(&c.children) {
        zip_nodes(x, y, depth + 1, out)?;
    }
    Ok(())
}
