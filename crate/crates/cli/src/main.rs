use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chrono::{DateTime, SecondsFormat, Utc};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use thiserror::Error;

use rrm_eval::density::GaugeMode;
use rrm_eval::evaluation::{evaluate, EvalError, EvalOptions};
use rrm_eval::fom::{collect_measurements, untracked_count, AlternativeRuns, FomError, TargetClass};
use rrm_eval::io::report::{compare, CompareError, Report, ReportFormat};
use rrm_eval::io::{
    bundled_model, create_dir, load_measurements_for, load_preference_model, load_scenario_config, read_scenario_output,
    save_measurements, sha256_file, sha256_hex, write_scenario_output, write_text, ErrorClass, IoError,
};
use rrm_eval::model::PreferenceModel;
use rrm_eval::pipeline::{run_demo, write_demo, DemoConfig, PipelineError};
use rrm_eval::simulator::{run_scenario, Policy, PolicyKind, SimError, RNG_DESCRIPTION};

const OUT_ENV: &str = "RRM_EVAL_OUT";

#[derive(Parser)]
#[command(name = "rrm-eval", version, about = "Multi-criteria evaluation of radar resource management")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario under one policy and write truths, tracks and timeline.
    Simulate(SimulateArgs),
    /// Turn scenario outputs into a measurements CSV.
    Measure(MeasureArgs),
    /// Score measurements against a preference model.
    Evaluate(EvaluateArgs),
    /// Per-node deltas between two JSON reports.
    Compare(CompareArgs),
    /// Run the bundled demo end to end.
    Demo(DemoArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario TOML file.
    #[arg(short, long)]
    config: PathBuf,
    /// `a-stu` or `na-nsr`.
    #[arg(short, long)]
    policy: PolicyKind,
    /// Output directory [default: $RRM_EVAL_OUT].
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Force clutter on regardless of the config.
    #[arg(long)]
    clutter: bool,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct MeasureArgs {
    /// `alternative=dir`, repeatable.
    #[arg(long = "run", value_parser = parse_run, required = true)]
    runs: Vec<(String, PathBuf)>,
    /// Output CSV [default: $RRM_EVAL_OUT/measurements.csv].
    #[arg(short, long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 16)]
    sectors: u32,
    /// Completeness at or below which a target counts as untracked.
    #[arg(long, default_value_t = 0.0)]
    untracked_threshold: f64,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Measurements CSV.
    #[arg(short, long)]
    measurements: PathBuf,
    /// Preference model TOML [default: bundled model].
    #[arg(long)]
    model: Option<PathBuf>,
    /// Replace every OWA configuration by the quantifier with this alpha.
    #[arg(long)]
    alpha: Option<f64>,
    /// `discrete-owa`, `smoothed-quantile-owa` or `literal-product`.
    #[arg(long)]
    gauge_mode: Option<GaugeMode>,
    /// `json`, `markdown` or `plotcsv`.
    #[arg(long, default_value = "json")]
    format: ReportFormat,
    /// Output file, or directory for plotcsv [default: $RRM_EVAL_OUT/report.<ext>].
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    baseline: PathBuf,
    candidate: PathBuf,
    #[arg(long)]
    baseline_alt: Option<String>,
    #[arg(long)]
    candidate_alt: Option<String>,
    /// Markdown output; printed to stdout when absent.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DemoArgs {
    /// Output directory [default: $RRM_EVAL_OUT].
    #[arg(short, long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = rrm_eval::pipeline::DEMO_SEED)]
    seed: u64,
}

fn parse_run(s: &str) -> Result<(String, PathBuf), String> {
    match s.split_once('=') {
        Some((alt, dir)) if !alt.is_empty() && !dir.is_empty() => Ok((alt.into(), dir.into())),
        _ => Err(format!("expected `alternative=dir`, got `{s}`")),
    }
}

#[derive(Debug, Error)]
enum CliError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Fom(#[from] FomError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Compare(#[from] CompareError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("no output path given and {OUT_ENV} is not set")]
    NoOutput,
    #[error("invalid SOURCE_DATE_EPOCH `{0}`")]
    SourceDateEpoch(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        let class = match self {
            Self::Io(e) => e.class(),
            Self::Sim(_) | Self::Compare(_) | Self::NoOutput | Self::SourceDateEpoch(_) => ErrorClass::Validation,
            Self::Eval(EvalError::Invalid(_) | EvalError::InvalidAlpha(_) | EvalError::NoAlternatives) => {
                ErrorClass::Validation
            }
            Self::Fom(FomError::InvalidThreshold(_)) => ErrorClass::Validation,
            Self::Pipeline(PipelineError::Io(e)) => e.class(),
            Self::Eval(_) | Self::Fom(_) | Self::Pipeline(_) => ErrorClass::Runtime,
        };
        match class {
            ErrorClass::Parse => 2,
            ErrorClass::Validation => 3,
            ErrorClass::Runtime => 4,
        }
    }
}

#[derive(Serialize)]
struct Manifest {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    flags: BTreeMap<&'static str, String>,
    seeds: Vec<u64>,
    inputs: BTreeMap<String, String>,
    outputs: BTreeMap<String, String>,
    rng: &'static str,
    timestamp: String,
}

impl Manifest {
    fn new(command: &'static str) -> Self {
        Self {
            tool: "rrm-eval",
            version: env!("CARGO_PKG_VERSION"),
            command,
            flags: BTreeMap::new(),
            seeds: Vec::new(),
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            rng: RNG_DESCRIPTION,
            timestamp: String::new(),
        }
    }

    fn flag(&mut self, name: &'static str, value: impl ToString) {
        self.flags.insert(name, value.to_string());
    }

    fn input(&mut self, path: &Path) -> Result<(), CliError> {
        self.inputs.insert(path.display().to_string(), sha256_file(path)?);
        Ok(())
    }

    fn outputs(&mut self, paths: &[PathBuf]) -> Result<(), CliError> {
        for p in paths {
            if p.is_file() {
                let name = p.file_name().map_or_else(|| p.display().to_string(), |n| n.to_string_lossy().into_owned());
                self.outputs.insert(name, sha256_file(p)?);
            }
        }
        Ok(())
    }

    fn write(mut self, path: &Path) -> Result<(), CliError> {
        self.timestamp = timestamp()?;
        let text = serde_json::to_string_pretty(&self).expect("manifest serializes") + "\n";
        write_text(path, &text)?;
        Ok(())
    }
}

fn timestamp() -> Result<String, CliError> {
    let now = match std::env::var("SOURCE_DATE_EPOCH") {
        Ok(v) => v
            .trim()
            .parse::<i64>()
            .ok()
            .and_then(|s| DateTime::from_timestamp(s, 0))
            .ok_or(CliError::SourceDateEpoch(v))?,
        Err(_) => Utc::now(),
    };
    Ok(now.to_rfc3339_opts(SecondsFormat::Secs, true))
}

fn out_dir(out: Option<PathBuf>) -> Result<PathBuf, CliError> {
    out.or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from)).ok_or(CliError::NoOutput)
}

fn out_file(out: Option<PathBuf>, default_name: &str) -> Result<PathBuf, CliError> {
    match out {
        Some(p) => Ok(p),
        None => Ok(out_dir(None)?.join(default_name)),
    }
}

/// Manifest next to a single-file output.
fn sidecar(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    path.with_file_name(name)
}

fn ensure_parent(path: &Path) -> Result<(), CliError> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => Ok(create_dir(p)?),
        _ => Ok(()),
    }
}

fn simulate(args: SimulateArgs) -> Result<(), CliError> {
    let mut cfg = load_scenario_config(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.clutter |= args.clutter;
    let dir = out_dir(args.out)?;
    let run = run_scenario(&cfg, &Policy::of_kind(args.policy))?;
    let paths = write_scenario_output(&run.output, &dir)?;
    let mut m = Manifest::new("simulate");
    m.flag("policy", args.policy);
    m.flag("clutter", cfg.clutter);
    m.flag("scenario_id", &run.output.scenario_id);
    m.seeds.push(cfg.seed);
    m.input(&args.config)?;
    m.outputs(&paths)?;
    m.write(&dir.join("manifest.json"))?;
    eprintln!(
        "{}: {} targets, {} tracks, {} initiations, {} drops",
        run.output.scenario_id,
        run.output.truths.len(),
        run.output.tracks.len(),
        run.stats.initiations,
        run.stats.drops
    );
    Ok(())
}

fn measure(args: MeasureArgs) -> Result<(), CliError> {
    let out = out_file(args.out, "measurements.csv")?;
    let mut m = Manifest::new("measure");
    let mut runs: Vec<AlternativeRuns> = Vec::new();
    let mut untracked: BTreeMap<String, BTreeMap<TargetClass, usize>> = BTreeMap::new();
    for (alt, dir) in &args.runs {
        let output = read_scenario_output(dir)?;
        let counts = untracked.entry(alt.clone()).or_default();
        for (class, n) in untracked_count(&output.truths, &output.tracks, args.untracked_threshold)? {
            *counts.entry(class).or_default() += n;
        }
        for file in [rrm_eval::io::TRUTHS_FILE, rrm_eval::io::TRACKS_FILE, rrm_eval::io::TIMELINE_FILE] {
            m.input(&dir.join(file))?;
        }
        match runs.iter_mut().find(|r| &r.alternative == alt) {
            Some(r) => r.outputs.push(output),
            None => runs.push(AlternativeRuns { alternative: alt.clone(), outputs: vec![output] }),
        }
    }
    let set = collect_measurements(&runs, args.sectors)?;
    ensure_parent(&out)?;
    save_measurements(&set, &out)?;
    m.flag("sectors", args.sectors);
    m.flag("untracked_threshold", args.untracked_threshold);
    m.outputs(&[out.clone()])?;
    m.write(&sidecar(&out))?;
    for (alt, counts) in &untracked {
        let line: Vec<String> = counts.iter().map(|(c, n)| format!("{}={n}", c.as_str())).collect();
        println!("untracked {alt}: {}", line.join(" "));
    }
    Ok(())
}

fn load_model(path: Option<&Path>) -> Result<PreferenceModel, CliError> {
    let Some(path) = path else { return Ok(bundled_model()) };
    let loaded = load_preference_model(path)?;
    for w in &loaded.warnings {
        eprintln!("warning: {w}");
    }
    Ok(loaded.model)
}

fn evaluate_cmd(args: EvaluateArgs) -> Result<(), CliError> {
    let model = load_model(args.model.as_deref())?;
    let set = load_measurements_for(&args.measurements, &model)?;
    let opts = EvalOptions { alpha: args.alpha, mode: args.gauge_mode, ..EvalOptions::default() };
    let report = Report::new(&evaluate(&model, &set, &opts)?, &model, &opts);
    let default_name = match args.format {
        ReportFormat::Json => "report.json",
        ReportFormat::Markdown => "report.md",
        ReportFormat::PlotCsv => "plots",
    };
    let out = out_file(args.out, default_name)?;
    let (paths, manifest_path) = match args.format {
        ReportFormat::PlotCsv => (report.write(&out, args.format)?, out.join("manifest.json")),
        _ => {
            ensure_parent(&out)?;
            (report.write(&out, args.format)?, sidecar(&out))
        }
    };
    let mut m = Manifest::new("evaluate");
    m.input(&args.measurements)?;
    match &args.model {
        Some(p) => m.input(p)?,
        None => m.flag("model", "bundled"),
    }
    m.flag("model_sha256", &report.model_sha256);
    if let Some(a) = args.alpha {
        m.flag("alpha", a);
    }
    if let Some(g) = args.gauge_mode {
        m.flag("gauge_mode", g);
    }
    m.flag("format", format!("{:?}", args.format).to_lowercase());
    m.outputs(&paths)?;
    m.write(&manifest_path)?;
    for note in &report.notes {
        eprintln!("note: {note}");
    }
    Ok(())
}

fn compare_cmd(args: CompareArgs) -> Result<(), CliError> {
    let base = Report::load(&args.baseline)?;
    let cand = Report::load(&args.candidate)?;
    let cmp = compare(&base, args.baseline_alt.as_deref(), &cand, args.candidate_alt.as_deref())?;
    let text = cmp.to_markdown();
    match args.out {
        Some(out) => {
            ensure_parent(&out)?;
            write_text(&out, &text)?;
            let mut m = Manifest::new("compare");
            m.input(&args.baseline)?;
            m.input(&args.candidate)?;
            m.flag("baseline", &cmp.baseline);
            m.flag("candidate", &cmp.candidate);
            m.outputs(&[out.clone()])?;
            m.write(&sidecar(&out))?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn demo(args: DemoArgs) -> Result<(), CliError> {
    let dir = out_dir(args.out)?;
    let cfg = DemoConfig { seed: args.seed, ..DemoConfig::default() };
    let result = run_demo(&cfg)?;
    let paths = write_demo(&result, &dir)?;
    let mut m = Manifest::new("demo");
    for policy in [PolicyKind::AStu, PolicyKind::NaNsr] {
        for s in cfg.scenarios(policy, false) {
            if !m.seeds.contains(&s.seed) {
                m.seeds.push(s.seed);
            }
        }
    }
    m.flag("launch_scales", format!("{:?}", cfg.launch_scales));
    m.flag("model_sha256", &result.clear.report.model_sha256);
    m.inputs.insert("bundled-model".into(), sha256_hex(rrm_eval::io::DEFAULT_MODEL_TOML.as_bytes()));
    m.outputs(&paths)?;
    m.write(&dir.join("manifest.json"))?;
    print!("{}", result.policy_comparison(false)?.to_markdown());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Measure(a) => measure(a),
        Command::Evaluate(a) => evaluate_cmd(a),
        Command::Compare(a) => compare_cmd(a),
        Command::Demo(a) => demo(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
