//! On-disk formats: waypoint matrices, kinematic limits, RR logs, pace
//! ladders, optimization fronts, session reports and session configs.
//!
//! CSV columns hold floats in Rust's shortest round-trip notation, so
//! reading a file back reproduces the written values bit for bit. JSON
//! carriers get the same guarantee from the serializer.

use std::fs;
use std::io::{BufWriter, Write as _};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::adaptation::{HrvParams, RrSample};
use crate::error::{Error, Result};
use crate::harness::{
    CycleRow, HumanPhase, RrSegment, RrSource, SessionConfig, SessionPath, SessionReport,
    SyntheticRrProfile, TimelineRow,
};
use crate::interpolation::{JointLimits, TrajectoryProblem};
use crate::optimizer::{GenerationStats, ObjectivePoint, SolutionLadder};

fn parse_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        message: message.into(),
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| parse_err(path, format!("cannot read: {e}")))
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| parse_err(path, e.to_string()))?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_str(&read_text(path)?).map_err(|e| parse_err(path, e.to_string()))
}

/// Waypoint matrix plus joint names, positions indexed `[joint][waypoint]`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaypointSet {
    pub joint_names: Vec<String>,
    pub positions: Vec<Vec<f64>>,
}

impl WaypointSet {
    pub fn new(joint_names: Vec<String>, positions: Vec<Vec<f64>>) -> Result<Self> {
        if joint_names.len() != positions.len() {
            return Err(Error::InvalidArgument(format!(
                "{} joint names for {} joints",
                joint_names.len(),
                positions.len()
            )));
        }
        if positions.is_empty() {
            return Err(Error::InvalidArgument("need at least one joint".into()));
        }
        let count = positions[0].len();
        if positions.iter().any(|p| p.len() != count) {
            return Err(Error::InvalidArgument(
                "all joints must have the same waypoint count".into(),
            ));
        }
        Ok(WaypointSet {
            joint_names,
            positions,
        })
    }

    /// Interpolation problem with no kinematic bounds.
    pub fn problem(&self) -> Result<TrajectoryProblem> {
        TrajectoryProblem::unconstrained(self.positions.clone())
    }

    /// Interpolation problem bounded by the given per-joint limits.
    pub fn problem_with_limits(&self, limits: Vec<JointLimits>) -> Result<TrajectoryProblem> {
        TrajectoryProblem::new(self.positions.clone(), limits)
    }
}

/// Reads a waypoint file, dispatching on the `.json` extension and falling
/// back to CSV for everything else.
pub fn read_waypoints(path: &Path) -> Result<WaypointSet> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => read_waypoints_json(path),
        _ => read_waypoints_csv(path),
    }
}

/// CSV waypoints: one row per waypoint, one column per joint. A first row
/// that does not parse as numbers is taken as joint names; otherwise names
/// `joint0, joint1, ...` are synthesized.
pub fn read_waypoints_csv(path: &Path) -> Result<WaypointSet> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| parse_err(path, e.to_string()))?;
    let mut records = Vec::new();
    for r in rdr.records() {
        records.push(r.map_err(|e| parse_err(path, e.to_string()))?);
    }
    if records.is_empty() {
        return Err(parse_err(path, "no rows"));
    }
    let has_header = records[0].iter().any(|f| f.parse::<f64>().is_err());
    let (joint_names, rows): (Vec<String>, &[csv::StringRecord]) = if has_header {
        (records[0].iter().map(String::from).collect(), &records[1..])
    } else {
        (
            (0..records[0].len()).map(|j| format!("joint{j}")).collect(),
            &records[..],
        )
    };
    let joints = joint_names.len();
    if rows.is_empty() {
        return Err(parse_err(path, "no waypoint rows"));
    }
    let mut positions = vec![Vec::with_capacity(rows.len()); joints];
    for (i, row) in rows.iter().enumerate() {
        if row.len() != joints {
            return Err(parse_err(
                path,
                format!("row {} has {} fields, expected {}", i + 1, row.len(), joints),
            ));
        }
        for (j, field) in row.iter().enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| parse_err(path, format!("bad number '{field}' in row {}", i + 1)))?;
            positions[j].push(v);
        }
    }
    WaypointSet::new(joint_names, positions)
}

pub fn write_waypoints_csv(path: &Path, set: &WaypointSet) -> Result<()> {
    let file = fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    writeln!(w, "{}", set.joint_names.join(","))?;
    let count = set.positions[0].len();
    for i in 0..count {
        let row: Vec<String> = set.positions.iter().map(|p| p[i].to_string()).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct WaypointsJson {
    joint_names: Vec<String>,
    /// One inner array per waypoint, one entry per joint.
    waypoints: Vec<Vec<f64>>,
}

pub fn read_waypoints_json(path: &Path) -> Result<WaypointSet> {
    let raw: WaypointsJson = read_json(path)?;
    let joints = raw.joint_names.len();
    if raw.waypoints.is_empty() {
        return Err(parse_err(path, "no waypoints"));
    }
    if raw.waypoints.iter().any(|row| row.len() != joints) {
        return Err(parse_err(
            path,
            format!("every waypoint must list {joints} joint values"),
        ));
    }
    let mut positions = vec![Vec::with_capacity(raw.waypoints.len()); joints];
    for row in &raw.waypoints {
        for (j, v) in row.iter().enumerate() {
            positions[j].push(*v);
        }
    }
    WaypointSet::new(raw.joint_names, positions)
}

pub fn write_waypoints_json(path: &Path, set: &WaypointSet) -> Result<()> {
    let count = set.positions[0].len();
    let waypoints: Vec<Vec<f64>> = (0..count)
        .map(|i| set.positions.iter().map(|p| p[i]).collect())
        .collect();
    write_json(
        path,
        &WaypointsJson {
            joint_names: set.joint_names.clone(),
            waypoints,
        },
    )
}

#[derive(Serialize, Deserialize)]
struct LimitsJson {
    max_velocity: Vec<f64>,
    max_acceleration: Vec<f64>,
    max_jerk: Vec<f64>,
}

/// JSON kinematic limits: three arrays indexed by joint.
pub fn read_limits_json(path: &Path) -> Result<Vec<JointLimits>> {
    let raw: LimitsJson = read_json(path)?;
    if raw.max_velocity.len() != raw.max_acceleration.len()
        || raw.max_velocity.len() != raw.max_jerk.len()
    {
        return Err(parse_err(
            path,
            format!(
                "limit arrays disagree on joint count: {} velocities, {} accelerations, {} jerks",
                raw.max_velocity.len(),
                raw.max_acceleration.len(),
                raw.max_jerk.len()
            ),
        ));
    }
    raw.max_velocity
        .iter()
        .zip(&raw.max_acceleration)
        .zip(&raw.max_jerk)
        .map(|((&v, &a), &j)| {
            JointLimits::new(v, a, j).map_err(|e| parse_err(path, e.to_string()))
        })
        .collect()
}

pub fn write_limits_json(path: &Path, limits: &[JointLimits]) -> Result<()> {
    write_json(
        path,
        &LimitsJson {
            max_velocity: limits.iter().map(|l| l.max_velocity).collect(),
            max_acceleration: limits.iter().map(|l| l.max_acceleration).collect(),
            max_jerk: limits.iter().map(|l| l.max_jerk).collect(),
        },
    )
}

/// CSV RR log: columns `timestamp_s,rr_s` (header optional), timestamps
/// strictly increasing, intervals positive.
pub fn read_rr_csv(path: &Path) -> Result<Vec<RrSample>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| parse_err(path, e.to_string()))?;
    let mut samples = Vec::new();
    for (i, r) in rdr.records().enumerate() {
        let row = r.map_err(|e| parse_err(path, e.to_string()))?;
        if i == 0 && row.iter().any(|f| f.parse::<f64>().is_err()) {
            continue; // header row
        }
        if row.len() != 2 {
            return Err(parse_err(
                path,
                format!("row {} has {} fields, expected 2", i + 1, row.len()),
            ));
        }
        let parse = |field: &str| -> Result<f64> {
            field
                .parse()
                .map_err(|_| parse_err(path, format!("bad number '{field}' in row {}", i + 1)))
        };
        let sample = RrSample {
            timestamp: parse(&row[0])?,
            rr: parse(&row[1])?,
        };
        if !(sample.timestamp.is_finite() && sample.timestamp > 0.0)
            || !(sample.rr.is_finite() && sample.rr > 0.0)
        {
            return Err(parse_err(
                path,
                format!("row {}: timestamp and rr must be positive", i + 1),
            ));
        }
        if let Some(prev) = samples.last() {
            let prev: &RrSample = prev;
            if sample.timestamp <= prev.timestamp {
                return Err(parse_err(
                    path,
                    format!(
                        "row {}: timestamp {} does not increase past {}",
                        i + 1,
                        sample.timestamp,
                        prev.timestamp
                    ),
                ));
            }
        }
        samples.push(sample);
    }
    Ok(samples)
}

pub fn write_rr_csv(path: &Path, samples: &[RrSample]) -> Result<()> {
    let file = fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    writeln!(w, "timestamp_s,rr_s")?;
    for s in samples {
        writeln!(w, "{},{}", s.timestamp, s.rr)?;
    }
    w.flush()?;
    Ok(())
}

/// CSV decision log: `window_end_s,mean_rr_s,delta,index,gap` with an empty
/// mean before any data arrived and gap flagged as 0/1.
pub fn write_timeline_csv(path: &Path, rows: &[TimelineRow]) -> Result<()> {
    let file = fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    writeln!(w, "window_end_s,mean_rr_s,delta,index,gap")?;
    for r in rows {
        let mean = r.mean_rr.map(|m| m.to_string()).unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{}",
            r.window_end, mean, r.delta, r.index, r.gap as u8
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_timeline_csv(path: &Path) -> Result<Vec<TimelineRow>> {
    let text = read_text(path)?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 {
            continue; // header
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(parse_err(
                path,
                format!("row {} has {} fields, expected 5", i + 1, fields.len()),
            ));
        }
        let num = |f: &str| -> Result<f64> {
            f.parse()
                .map_err(|_| parse_err(path, format!("bad number '{f}' in row {}", i + 1)))
        };
        rows.push(TimelineRow {
            window_end: num(fields[0])?,
            mean_rr: if fields[1].is_empty() {
                None
            } else {
                Some(num(fields[1])?)
            },
            delta: fields[2]
                .parse()
                .map_err(|_| parse_err(path, format!("bad delta in row {}", i + 1)))?,
            index: fields[3]
                .parse()
                .map_err(|_| parse_err(path, format!("bad index in row {}", i + 1)))?,
            gap: match fields[4] {
                "0" => false,
                "1" => true,
                other => {
                    return Err(parse_err(path, format!("bad gap flag '{other}'")));
                }
            },
        });
    }
    Ok(rows)
}

/// CSV cycle log: `cycle,start_s,duration_s,index`.
pub fn write_cycles_csv(path: &Path, rows: &[CycleRow]) -> Result<()> {
    let file = fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    writeln!(w, "cycle,start_s,duration_s,index")?;
    for r in rows {
        writeln!(w, "{},{},{},{}", r.cycle, r.start, r.duration, r.index)?;
    }
    w.flush()?;
    Ok(())
}

/// CSV of densely sampled joint kinematics: a time column followed by
/// position, velocity, acceleration and jerk columns per joint.
pub fn write_trajectory_csv(
    path: &Path,
    joint_names: &[String],
    sampled: &crate::interpolation::SampledTrajectory,
) -> Result<()> {
    if joint_names.len() != sampled.positions.len() {
        return Err(Error::InvalidArgument(format!(
            "{} joint names for {} sampled joints",
            joint_names.len(),
            sampled.positions.len()
        )));
    }
    let file = fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    let mut header = vec!["t_s".to_string()];
    for name in joint_names {
        for field in ["position", "velocity", "acceleration", "jerk"] {
            header.push(format!("{name}_{field}"));
        }
    }
    writeln!(w, "{}", header.join(","))?;
    for (k, t) in sampled.times.iter().enumerate() {
        let mut row = vec![t.to_string()];
        for j in 0..joint_names.len() {
            row.push(sampled.positions[j][k].to_string());
            row.push(sampled.velocities[j][k].to_string());
            row.push(sampled.accelerations[j][k].to_string());
            row.push(sampled.jerks[j][k].to_string());
        }
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Stored pace ladder with provenance: the digest of the waypoint matrix it
/// was optimized for, the optimizer seed and the requested rung count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderFile {
    pub waypoints_hash: String,
    pub seed: u64,
    pub requested_size: usize,
    pub ladder: SolutionLadder,
}

pub fn write_ladder_json(path: &Path, file: &LadderFile) -> Result<()> {
    write_json(path, file)
}

/// Reads a stored ladder; ordering and monotonicity are re-validated on
/// load, so a hand-edited file that breaks the pace ordering is rejected.
pub fn read_ladder_json(path: &Path) -> Result<LadderFile> {
    read_json(path)
}

/// Verifies a ladder file belongs to the given problem's waypoint matrix.
pub fn check_ladder_pairing(
    path: &Path,
    file: &LadderFile,
    problem: &TrajectoryProblem,
) -> Result<()> {
    let expected = problem.waypoints_hash();
    if file.waypoints_hash != expected {
        return Err(Error::InvalidArgument(format!(
            "ladder {} was produced for a different waypoint matrix \
             (stored digest {}, waypoints digest {})",
            path.display(),
            file.waypoints_hash,
            expected
        )));
    }
    Ok(())
}

/// Full optimization artifact: the final non-dominated set with search
/// telemetry. Write-only; downstream steps consume the ladder file instead.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrontFile {
    pub waypoints_hash: String,
    pub seed: u64,
    pub population_size: usize,
    pub generations: usize,
    pub evaluations: usize,
    pub reference: Option<[f64; 2]>,
    pub history: Vec<GenerationStats>,
    pub front: Vec<ObjectivePoint>,
}

pub fn write_front_json(path: &Path, file: &FrontFile) -> Result<()> {
    write_json(path, file)
}

pub fn write_report_json(path: &Path, report: &SessionReport) -> Result<()> {
    write_json(path, report)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SessionToml {
    duration_s: f64,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    pin_index: Option<usize>,
    #[serde(default)]
    error_events_s: Vec<f64>,
    #[serde(default)]
    hrv: Option<HrvToml>,
    #[serde(default)]
    human: Option<HumanToml>,
    rr: RrToml,
    paths: Vec<PathToml>,
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct HrvToml {
    window_s: Option<f64>,
    rest_mean_rr_s: Option<f64>,
    stress_mean_rr_s: Option<f64>,
    rest_spread_s: Option<f64>,
    stress_spread_s: Option<f64>,
    rest_to_stress_threshold_s: Option<f64>,
    stress_to_rest_threshold_s: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "lowercase")]
enum HumanToml {
    Fixed { seconds: f64 },
    Uniform { min_s: f64, max_s: f64 },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "lowercase")]
enum RrToml {
    File {
        path: String,
    },
    Synthetic {
        #[serde(default)]
        noise_std_s: f64,
        segments: Vec<SegmentToml>,
    },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SegmentToml {
    start_s: f64,
    end_s: f64,
    mean_rr_s: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PathToml {
    waypoints: String,
    ladder: String,
}

fn resolve_hrv(section: Option<HrvToml>) -> Result<HrvParams> {
    let s = section.unwrap_or_default();
    let rest = s.rest_mean_rr_s.unwrap_or(0.80);
    let mut params = HrvParams::for_rest_rr(rest)?;
    if let Some(v) = s.window_s {
        params.window_seconds = v;
    }
    if let Some(v) = s.stress_mean_rr_s {
        params.stress_mean_rr = v;
    }
    if let Some(v) = s.rest_spread_s {
        params.rest_spread = v;
    }
    if let Some(v) = s.stress_spread_s {
        params.stress_spread = v;
    }
    if let Some(v) = s.rest_to_stress_threshold_s {
        params.rest_to_stress_threshold = v;
    }
    if let Some(v) = s.stress_to_rest_threshold_s {
        params.stress_to_rest_threshold = v;
    }
    params.validate()?;
    Ok(params)
}

fn resolve_against(dir: &Path, p: &str) -> PathBuf {
    let pb = Path::new(p);
    if pb.is_absolute() {
        pb.to_path_buf()
    } else {
        dir.join(pb)
    }
}

/// Files a session description references, as (role, resolved path) pairs,
/// for recording input digests in run manifests.
pub fn session_input_files(path: &Path) -> Result<Vec<(String, PathBuf)>> {
    let text = read_text(path)?;
    let file: SessionToml =
        toml::from_str(&text).map_err(|e| parse_err(path, e.to_string()))?;
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let mut out = Vec::new();
    if let RrToml::File { path: p } = &file.rr {
        out.push(("rr".to_string(), resolve_against(dir, p)));
    }
    for (i, section) in file.paths.iter().enumerate() {
        out.push((format!("waypoints[{i}]"), resolve_against(dir, &section.waypoints)));
        out.push((format!("ladder[{i}]"), resolve_against(dir, &section.ladder)));
    }
    Ok(out)
}

/// Loads a TOML session description and every file it references. Relative
/// paths are resolved against the config file's directory. Each ladder is
/// checked against the waypoint matrix it is paired with.
pub fn load_session_config(path: &Path) -> Result<SessionConfig> {
    let text = read_text(path)?;
    let file: SessionToml =
        toml::from_str(&text).map_err(|e| parse_err(path, e.to_string()))?;
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let resolve = |p: &str| resolve_against(dir, p);

    let hrv = resolve_hrv(file.hrv)?;
    let human = match file.human {
        None => HumanPhase::Fixed { seconds: 0.0 },
        Some(HumanToml::Fixed { seconds }) => HumanPhase::Fixed { seconds },
        Some(HumanToml::Uniform { min_s, max_s }) => HumanPhase::Uniform {
            min: min_s,
            max: max_s,
        },
    };
    let rr_source = match file.rr {
        RrToml::File { path: p } => RrSource::Replay(read_rr_csv(&resolve(&p))?),
        RrToml::Synthetic {
            noise_std_s,
            segments,
        } => RrSource::Synthetic(SyntheticRrProfile {
            segments: segments
                .into_iter()
                .map(|s| RrSegment {
                    start: s.start_s,
                    end: s.end_s,
                    mean_rr: s.mean_rr_s,
                })
                .collect(),
            noise_std: noise_std_s,
        }),
    };
    let mut paths = Vec::with_capacity(file.paths.len());
    for section in &file.paths {
        let waypoints = read_waypoints(&resolve(&section.waypoints))?;
        let ladder_path = resolve(&section.ladder);
        let ladder_file = read_ladder_json(&ladder_path)?;
        let problem = waypoints.problem()?;
        check_ladder_pairing(&ladder_path, &ladder_file, &problem)?;
        paths.push(SessionPath {
            problem,
            ladder: ladder_file.ladder,
        });
    }
    Ok(SessionConfig {
        duration: file.duration_s,
        seed: file.seed,
        hrv,
        human,
        rr_source,
        paths,
        pinned_index: file.pin_index,
        error_events: file.error_events_s,
    })
}
