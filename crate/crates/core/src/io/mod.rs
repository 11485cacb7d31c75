//! File formats: preference models and scenario configs in TOML, measurements
//! in CSV, scenario outputs and reports in JSON.

pub mod report;

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::fom::{Dwell, RadarTimeline, ScenarioOutput, TrackRecord, TruthTrajectory};
use crate::model::{MeasurementSet, PreferenceModel, Sample, Violation, MODEL_VERSION};
use crate::simulator::{ScenarioConfig, SimError};

/// The bundled preference model, identical to
/// [`default_paper_model`](crate::model::default_paper_model).
pub const DEFAULT_MODEL_TOML: &str = include_str!("../../models/default.toml");

pub const MEASUREMENT_HEADER: [&str; 5] = ["alternative_id", "metric_id", "scenario_id", "track_id", "value"];

pub const TRUTHS_FILE: &str = "truths.json";
pub const TRACKS_FILE: &str = "tracks.json";
pub const TIMELINE_FILE: &str = "timeline.json";

#[derive(Debug, Error)]
pub enum IoError {
    #[error("cannot read {}: {source}", .path.display())]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", .path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{location}: {message}")]
    Parse { location: String, message: String },
    #[error("{location}: line {line}: {message}")]
    Row { location: String, line: u64, message: String },
    #[error("{location}: {} validation error(s): {}", .violations.len(), join(.violations))]
    Invalid { location: String, violations: Vec<Violation> },
    #[error("{location}: {source}")]
    Scenario { location: String, source: SimError },
    #[error("{location}: scenario ids disagree (`{expected}` vs `{found}`)")]
    ScenarioMismatch { location: String, expected: String, found: String },
}

fn join(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

/// Coarse failure class, used for exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Parse,
    Validation,
    Runtime,
}

impl IoError {
    pub fn class(&self) -> ErrorClass {
        match self {
            Self::Io { .. } => ErrorClass::Runtime,
            Self::Read { .. } | Self::Parse { .. } | Self::Row { .. } => ErrorClass::Parse,
            Self::Invalid { .. } | Self::Scenario { .. } | Self::ScenarioMismatch { .. } => ErrorClass::Validation,
        }
    }
}

fn read_text(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|source| IoError::Read { path: path.into(), source })
}

pub fn write_text(path: &Path, text: &str) -> Result<(), IoError> {
    fs::write(path, text).map_err(|source| IoError::Io { path: path.into(), source })
}

pub fn create_dir(path: &Path) -> Result<(), IoError> {
    fs::create_dir_all(path).map_err(|source| IoError::Io { path: path.into(), source })
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String, IoError> {
    let mut f = fs::File::open(path).map_err(|source| IoError::Read { path: path.into(), source })?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 1 << 16];
    loop {
        let n = f.read(&mut buf).map_err(|source| IoError::Read { path: path.into(), source })?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

/// Content hash of a model, independent of file formatting.
pub fn model_hash(model: &PreferenceModel) -> String {
    sha256_hex(&serde_json::to_vec(model).expect("model serializes"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedModel {
    pub model: PreferenceModel,
    /// Non-fatal findings such as a version mismatch.
    pub warnings: Vec<String>,
}

/// Parses and structurally validates a TOML preference model.
pub fn parse_preference_model(text: &str, location: &str) -> Result<LoadedModel, IoError> {
    let model: PreferenceModel =
        toml::from_str(text).map_err(|e| IoError::Parse { location: location.into(), message: e.to_string() })?;
    let violations = model.validate();
    if !violations.is_empty() {
        return Err(IoError::Invalid { location: location.into(), violations });
    }
    let mut warnings = Vec::new();
    if model.version != MODEL_VERSION {
        warnings.push(format!("{location}: model version `{}`, this build reads `{MODEL_VERSION}`", model.version));
    }
    Ok(LoadedModel { model, warnings })
}

pub fn load_preference_model(path: &Path) -> Result<LoadedModel, IoError> {
    parse_preference_model(&read_text(path)?, &path.display().to_string())
}

pub fn bundled_model() -> PreferenceModel {
    parse_preference_model(DEFAULT_MODEL_TOML, "bundled model").expect("bundled model is valid").model
}

pub fn preference_model_to_toml(model: &PreferenceModel) -> String {
    toml::to_string(model).expect("model serializes to TOML")
}

pub fn save_preference_model(model: &PreferenceModel, path: &Path) -> Result<(), IoError> {
    write_text(path, &preference_model_to_toml(model))
}

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    alternative_id: String,
    metric_id: String,
    scenario_id: String,
    track_id: Option<String>,
    value: f64,
}

/// Reads measurement CSV. Values are parsed exactly; non-finite values are
/// rejected with their line number.
pub fn read_measurements<R: Read>(reader: R, location: &str) -> Result<MeasurementSet, IoError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = rdr.headers().map_err(|e| IoError::Parse { location: location.into(), message: e.to_string() })?;
    if header.iter().ne(MEASUREMENT_HEADER) {
        return Err(IoError::Row {
            location: location.into(),
            line: 1,
            message: format!("expected header `{}`", MEASUREMENT_HEADER.join(",")),
        });
    }
    let mut set = MeasurementSet::new();
    for (i, row) in rdr.deserialize::<Row>().enumerate() {
        // header is line 1
        let fallback = i as u64 + 2;
        let row = row.map_err(|e| IoError::Row {
            location: location.into(),
            line: e.position().map_or(fallback, |p| p.line()),
            message: e.to_string(),
        })?;
        if !row.value.is_finite() {
            return Err(IoError::Row { location: location.into(), line: fallback, message: "non-finite value".into() });
        }
        set.push(&row.alternative_id, &row.metric_id, Sample::new(row.value, row.scenario_id, row.track_id));
    }
    Ok(set)
}

pub fn load_measurements(path: &Path) -> Result<MeasurementSet, IoError> {
    let f = fs::File::open(path).map_err(|source| IoError::Read { path: path.into(), source })?;
    read_measurements(f, &path.display().to_string())
}

/// Loads measurements and rejects samples outside their metric's range
/// under `model`.
pub fn load_measurements_for(path: &Path, model: &PreferenceModel) -> Result<MeasurementSet, IoError> {
    let set = load_measurements(path)?;
    let bad: Vec<Violation> = crate::model::validate_model(model, &set)
        .into_iter()
        .filter(|v| matches!(v, Violation::OutOfRange { .. } | Violation::UnknownMetric { .. }))
        .collect();
    if bad.is_empty() {
        Ok(set)
    } else {
        Err(IoError::Invalid { location: path.display().to_string(), violations: bad })
    }
}

/// Writes measurement CSV in key order. Floats use the shortest text that
/// parses back to the same value.
pub fn write_measurements<W: Write>(set: &MeasurementSet, writer: W) -> Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    w.write_record(MEASUREMENT_HEADER)?;
    for (alt, metric, samples) in set.iter() {
        for s in samples {
            w.serialize(Row {
                alternative_id: alt.into(),
                metric_id: metric.into(),
                scenario_id: s.scenario_id.clone(),
                track_id: s.track_id.clone(),
                value: s.value,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn save_measurements(set: &MeasurementSet, path: &Path) -> Result<(), IoError> {
    let f = fs::File::create(path).map_err(|source| IoError::Io { path: path.into(), source })?;
    write_measurements(set, std::io::BufWriter::new(f)).map_err(|e| IoError::Io { path: path.into(), source: e.into() })
}

pub fn parse_scenario_config(text: &str, location: &str) -> Result<ScenarioConfig, IoError> {
    let cfg: ScenarioConfig =
        toml::from_str(text).map_err(|e| IoError::Parse { location: location.into(), message: e.to_string() })?;
    cfg.validate().map_err(|source| IoError::Scenario { location: location.into(), source })?;
    Ok(cfg)
}

pub fn load_scenario_config(path: &Path) -> Result<ScenarioConfig, IoError> {
    parse_scenario_config(&read_text(path)?, &path.display().to_string())
}

#[derive(Serialize, Deserialize)]
struct TruthsFile {
    scenario_id: String,
    truths: Vec<TruthTrajectory>,
}

#[derive(Serialize, Deserialize)]
struct TracksFile {
    scenario_id: String,
    tracks: Vec<TrackRecord>,
}

#[derive(Serialize, Deserialize)]
struct TimelineFile {
    scenario_id: String,
    duration: f64,
    entries: Vec<Dwell>,
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, IoError> {
    serde_json::from_str(&read_text(path)?)
        .map_err(|e| IoError::Parse { location: path.display().to_string(), message: e.to_string() })
}

/// Writes `truths.json`, `tracks.json` and `timeline.json` into `dir` and
/// returns their paths.
pub fn write_scenario_output(out: &ScenarioOutput, dir: &Path) -> Result<Vec<PathBuf>, IoError> {
    create_dir(dir)?;
    let id = out.scenario_id.clone();
    let files = [
        (TRUTHS_FILE, to_json(&TruthsFile { scenario_id: id.clone(), truths: out.truths.clone() })),
        (TRACKS_FILE, to_json(&TracksFile { scenario_id: id.clone(), tracks: out.tracks.clone() })),
        (
            TIMELINE_FILE,
            to_json(&TimelineFile { scenario_id: id, duration: out.timeline.duration, entries: out.timeline.entries.clone() }),
        ),
    ];
    let mut paths = Vec::new();
    for (name, text) in files {
        let p = dir.join(name);
        write_text(&p, &text)?;
        paths.push(p);
    }
    Ok(paths)
}

pub fn read_scenario_output(dir: &Path) -> Result<ScenarioOutput, IoError> {
    let truths: TruthsFile = read_json(&dir.join(TRUTHS_FILE))?;
    let tracks: TracksFile = read_json(&dir.join(TRACKS_FILE))?;
    let timeline: TimelineFile = read_json(&dir.join(TIMELINE_FILE))?;
    for found in [&tracks.scenario_id, &timeline.scenario_id] {
        if *found != truths.scenario_id {
            return Err(IoError::ScenarioMismatch {
                location: dir.display().to_string(),
                expected: truths.scenario_id.clone(),
                found: found.clone(),
            });
        }
    }
    Ok(ScenarioOutput {
        scenario_id: truths.scenario_id,
        truths: truths.truths,
        tracks: tracks.tracks,
        timeline: RadarTimeline { duration: timeline.duration, entries: timeline.entries },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aggregation::MobiusCapacity;
    use crate::model::{default_paper_model, ids, CriteriaNode};
    use crate::simulator::{run_scenario, Policy};
    use proptest::prelude::*;

    #[test]
    fn bundled_model_matches_default() {
        assert_eq!(bundled_model(), default_paper_model());
    }

    #[test]
    fn model_toml_round_trip() {
        let m = default_paper_model();
        let text = preference_model_to_toml(&m);
        let back = parse_preference_model(&text, "mem").unwrap();
        assert_eq!(back.model, m);
        assert!(back.warnings.is_empty());
        assert_eq!(model_hash(&back.model), model_hash(&m));
    }

    fn root_capacity_text(cap: &MobiusCapacity) -> String {
        let mut m = default_paper_model();
        if let CriteriaNode::Aggregate(a) = &mut m.tree {
            a.capacity = cap.clone();
        }
        preference_model_to_toml(&m)
    }

    #[test]
    fn bad_capacity_names_node() {
        let cap = MobiusCapacity::new(vec![0.5, 0.5, 0.2], &[((0, 1), 0.2)]).unwrap();
        let err = parse_preference_model(&root_capacity_text(&cap), "m.toml").unwrap_err();
        assert!(matches!(err, IoError::Invalid { .. }));
        assert!(err.to_string().contains(ids::ROOT), "{err}");
        assert_eq!(err.class(), ErrorClass::Validation);
    }

    #[test]
    fn dangling_metric_is_reported() {
        let text = preference_model_to_toml(&default_paper_model()).replacen(
            "metric = \"tc-bird\"",
            "metric = \"tc-dragon\"",
            1,
        );
        let err = parse_preference_model(&text, "m.toml").unwrap_err();
        match err {
            IoError::Invalid { violations, .. } => {
                assert!(violations.iter().any(|v| matches!(v, Violation::DanglingMetric { metric, .. } if metric == "tc-dragon")))
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn version_mismatch_warns() {
        let text = preference_model_to_toml(&default_paper_model()).replacen("version = \"1\"", "version = \"0\"", 1);
        let loaded = parse_preference_model(&text, "m.toml").unwrap();
        assert_eq!(loaded.warnings.len(), 1);
    }

    #[test]
    fn malformed_toml_is_parse_error() {
        let err = parse_preference_model("version = ", "m.toml").unwrap_err();
        assert_eq!(err.class(), ErrorClass::Parse);
    }

    fn csv_text(body: &str) -> String {
        format!("{}\n{body}", MEASUREMENT_HEADER.join(","))
    }

    #[test]
    fn bad_value_reports_line() {
        let text = csv_text("a,tc-bird,s1,t1,0.5\na,tc-bird,s1,t2,abc\n");
        match read_measurements(text.as_bytes(), "m.csv").unwrap_err() {
            IoError::Row { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn header_only_is_empty() {
        assert!(read_measurements(csv_text("").as_bytes(), "m.csv").unwrap().is_empty());
        assert!(read_measurements("a,b\n".as_bytes(), "m.csv").is_err());
    }

    #[test]
    fn optional_track_id() {
        let set = read_measurements(csv_text("a,time-frame,s1,,1.5\n").as_bytes(), "m.csv").unwrap();
        assert_eq!(set.samples("a", "time-frame").unwrap()[0].track_id, None);
    }

    #[test]
    fn out_of_range_rejected_against_model() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        write_text(&p, &csv_text("a,tc-bird,s1,t1,1.2\n")).unwrap();
        assert!(load_measurements(&p).is_ok());
        assert!(matches!(load_measurements_for(&p, &default_paper_model()), Err(IoError::Invalid { .. })));
    }

    fn arb_set() -> impl Strategy<Value = MeasurementSet> {
        let row = (0..3usize, 0..4usize, 0..5usize, proptest::option::of(0..9u8), any::<f64>().prop_filter("finite", |v| v.is_finite()));
        proptest::collection::vec(row, 0..40).prop_map(|rows| {
            let mut set = MeasurementSet::new();
            for (a, m, s, t, v) in rows {
                set.push(&format!("alt{a}"), &format!("m{m}"), Sample::new(v, format!("s{s}"), t.map(|t| format!("t{t}"))));
            }
            set
        })
    }

    proptest! {
        #[test]
        fn measurements_round_trip(set in arb_set()) {
            let mut buf = Vec::new();
            write_measurements(&set, &mut buf).unwrap();
            let back = read_measurements(buf.as_slice(), "mem").unwrap();
            prop_assert_eq!(back, set);
        }
    }

    #[test]
    fn scenario_output_round_trip() {
        let mut cfg = ScenarioConfig::desk_scale(4);
        cfg.duration = 30.0;
        let out = run_scenario(&cfg, &Policy::a_stu()).unwrap().output;
        let dir = tempfile::tempdir().unwrap();
        let paths = write_scenario_output(&out, dir.path()).unwrap();
        assert_eq!(paths.len(), 3);
        assert_eq!(read_scenario_output(dir.path()).unwrap(), out);
    }

    #[test]
    fn scenario_config_errors() {
        assert_eq!(parse_scenario_config("duration = 1", "s.toml").unwrap_err().class(), ErrorClass::Parse);
        let text = "duration = 10.0\nseed = 1\nbeam_budget = 0\n[populations]\n";
        assert_eq!(parse_scenario_config(text, "s.toml").unwrap_err().class(), ErrorClass::Validation);
    }

    #[test]
    fn guide_model_example_parses() {
        let guide = include_str!("../../../../book/src/file-formats.md");
        let start = guide.find("```toml\n").unwrap() + "```toml\n".len();
        let len = guide[start..].find("```").unwrap();
        let loaded = parse_preference_model(&guide[start..start + len], "guide").unwrap();
        assert_eq!(loaded.model.tree.leaves().len(), 1);
    }

    #[test]
    fn hashes() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
