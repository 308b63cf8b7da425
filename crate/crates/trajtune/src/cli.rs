//! Command-line front end. Four subcommands cover the workflow: `optimize`
//! searches interval vectors and stores the trade-off as a pace ladder,
//! `plan` interpolates one rung into a dense trajectory, `adapt` replays an
//! RR log through the decision rule, and `simulate` runs a closed-loop
//! session. Every command writes a manifest naming its inputs by digest.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::adaptation::{
    advance, window_mean, DecisionState, HrvParams, DEFAULT_REST_SPREAD,
    DEFAULT_REST_STRESS_GAP, DEFAULT_REST_TO_STRESS_THRESHOLD, DEFAULT_STRESS_SPREAD,
    DEFAULT_STRESS_TO_REST_THRESHOLD, DEFAULT_WINDOW_SECONDS,
};
use crate::error::{Error, Result};
use crate::formats::{
    check_ladder_pairing, load_session_config, read_ladder_json, read_limits_json,
    read_rr_csv, read_waypoints, session_input_files, write_cycles_csv, write_front_json,
    write_ladder_json, write_report_json, write_timeline_csv, write_trajectory_csv,
    FrontFile, LadderFile,
};
use crate::harness::{run_session, SessionReport, TimelineRow};
use crate::interpolation::solve_trajectory;
use crate::manifest::RunManifest;
use crate::optimizer::{downsample, nsga2, Nsga2Config};

#[derive(Parser)]
#[command(
    name = "trajtune",
    version,
    about = "Time/jerk trajectory optimization with heart-rate adaptive pacing"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Search interval vectors for a waypoint path and keep the time/jerk
    /// trade-off as a pace ladder
    Optimize(OptimizeArgs),
    /// Interpolate one ladder rung into a densely sampled trajectory
    Plan(PlanArgs),
    /// Replay an RR log through the pace decision rule
    Adapt(AdaptArgs),
    /// Run a closed-loop production session from a TOML description
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct OptimizeArgs {
    /// Waypoint matrix: CSV (rows are waypoints, columns joints) or JSON
    #[arg(long)]
    waypoints: PathBuf,
    /// Per-joint kinematic limits, JSON
    #[arg(long)]
    limits: PathBuf,
    /// Directory receiving front.json, ladder.json and manifest.json
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 90)]
    population: usize,
    #[arg(long, default_value_t = 200)]
    generations: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of rungs kept from the non-dominated front
    #[arg(long, default_value_t = 15)]
    ladder_size: usize,
}

#[derive(Args)]
struct PlanArgs {
    /// Waypoint matrix the ladder was produced for
    #[arg(long)]
    waypoints: PathBuf,
    /// Pace ladder, JSON
    #[arg(long)]
    ladder: PathBuf,
    /// 1-based rung to execute (1 is slowest)
    #[arg(long)]
    index: usize,
    /// Sample rate in Hz
    #[arg(long, default_value_t = 500.0)]
    rate: f64,
    /// Output CSV of sampled joint kinematics
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AdaptArgs {
    /// RR log CSV with columns timestamp_s,rr_s
    #[arg(long)]
    rr: PathBuf,
    /// Pace ladder the indices refer to, JSON
    #[arg(long)]
    ladder: PathBuf,
    /// Output CSV: one row per decision window
    #[arg(long)]
    out: PathBuf,
    /// Decision window length in seconds
    #[arg(long, default_value_t = DEFAULT_WINDOW_SECONDS)]
    window: f64,
    /// Resting mean RR baseline in seconds
    #[arg(long, default_value_t = 0.80)]
    rr_rest: f64,
    /// Stress mean RR baseline in seconds; defaults to the rest baseline
    /// minus 0.10
    #[arg(long)]
    rr_stress: Option<f64>,
    /// RR spread at rest in seconds
    #[arg(long, default_value_t = DEFAULT_REST_SPREAD)]
    sigma_r: f64,
    /// RR spread under stress in seconds
    #[arg(long, default_value_t = DEFAULT_STRESS_SPREAD)]
    sigma_s: f64,
    /// Mean-RR drop per slow-down step in seconds
    #[arg(long, default_value_t = DEFAULT_REST_TO_STRESS_THRESHOLD)]
    delta_rs: f64,
    /// Mean-RR rise per speed-up step in seconds
    #[arg(long, default_value_t = DEFAULT_STRESS_TO_REST_THRESHOLD)]
    delta_sr: f64,
}

#[derive(Args)]
struct SimulateArgs {
    /// Session description, TOML
    #[arg(long)]
    config: PathBuf,
    /// Directory receiving report.json, timeline.csv, cycles.csv and
    /// manifest.json
    #[arg(long)]
    out_dir: PathBuf,
    /// Fix the executed ladder index, overriding the config
    #[arg(long)]
    pin_index: Option<usize>,
    /// Override the config's seed
    #[arg(long)]
    seed: Option<u64>,
}

pub fn run() -> Result<()> {
    match Cli::parse().command {
        Command::Optimize(a) => optimize(a),
        Command::Plan(a) => plan(a),
        Command::Adapt(a) => adapt(a),
        Command::Simulate(a) => simulate(a),
    }
}

fn optimize(a: OptimizeArgs) -> Result<()> {
    fs::create_dir_all(&a.out_dir)?;
    let set = read_waypoints(&a.waypoints)?;
    let limits = read_limits_json(&a.limits)?;
    let problem = set.problem_with_limits(limits)?;
    let config = Nsga2Config {
        population_size: a.population,
        generations: a.generations,
        seed: a.seed,
        ..Nsga2Config::default()
    };
    let run = nsga2(&problem, &config)?;
    let ladder = downsample(&run.front, a.ladder_size)?;
    let waypoints_hash = problem.waypoints_hash();

    let front_path = a.out_dir.join("front.json");
    write_front_json(
        &front_path,
        &FrontFile {
            waypoints_hash: waypoints_hash.clone(),
            seed: a.seed,
            population_size: a.population,
            generations: a.generations,
            evaluations: run.evaluations,
            reference: run.reference,
            history: run.history.clone(),
            front: run.front.clone(),
        },
    )?;
    let ladder_path = a.out_dir.join("ladder.json");
    write_ladder_json(
        &ladder_path,
        &LadderFile {
            waypoints_hash,
            seed: a.seed,
            requested_size: a.ladder_size,
            ladder: ladder.clone(),
        },
    )?;
    RunManifest::new("optimize")
        .with_seed(a.seed)
        .parameter("population", a.population)
        .parameter("generations", a.generations)
        .parameter("ladder_size", a.ladder_size)
        .input("waypoints", &a.waypoints)?
        .input("limits", &a.limits)?
        .output(&front_path)
        .output(&ladder_path)
        .write(&a.out_dir.join("manifest.json"))?;

    let hv = run
        .history
        .last()
        .and_then(|s| s.hypervolume)
        .map_or_else(|| "n/a".to_string(), |h| format!("{h:.6}"));
    println!(
        "front: {} solutions after {} evaluations, hypervolume {hv}",
        run.front.len(),
        run.evaluations
    );
    println!("ladder: {} rungs (slowest first)", ladder.len());
    for (i, e) in ladder.entries().iter().enumerate() {
        println!(
            "  {:>3}  duration {:>8.4} s  time {:>10.4}  jerk {:>12.4}",
            i + 1,
            e.intervals.total_duration(),
            e.f_time,
            e.f_jerk
        );
    }
    Ok(())
}

fn plan(a: PlanArgs) -> Result<()> {
    let set = read_waypoints(&a.waypoints)?;
    let problem = set.problem()?;
    let ladder_file = read_ladder_json(&a.ladder)?;
    check_ladder_pairing(&a.ladder, &ladder_file, &problem)?;
    let entry = ladder_file.ladder.entry(a.index)?;
    let trajectory = solve_trajectory(&entry.intervals, &problem)?;
    let sampled = trajectory.sample(a.rate)?;
    write_trajectory_csv(&a.out, &set.joint_names, &sampled)?;
    RunManifest::new("plan")
        .parameter("index", a.index)
        .parameter("rate", a.rate)
        .input("waypoints", &a.waypoints)?
        .input("ladder", &a.ladder)?
        .output(&a.out)
        .write(&manifest_sibling(&a.out))?;
    println!(
        "rung {} of {}: duration {} s, {} samples at {} Hz -> {}",
        a.index,
        ladder_file.ladder.len(),
        trajectory.duration(),
        sampled.times.len(),
        a.rate,
        a.out.display()
    );
    Ok(())
}

fn adapt(a: AdaptArgs) -> Result<()> {
    let samples = read_rr_csv(&a.rr)?;
    if samples.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "RR log {} contains no samples",
            a.rr.display()
        )));
    }
    let ladder_file = read_ladder_json(&a.ladder)?;
    let params = HrvParams {
        window_seconds: a.window,
        rest_mean_rr: a.rr_rest,
        stress_mean_rr: a.rr_stress.unwrap_or(a.rr_rest - DEFAULT_REST_STRESS_GAP),
        rest_spread: a.sigma_r,
        stress_spread: a.sigma_s,
        rest_to_stress_threshold: a.delta_rs,
        stress_to_rest_threshold: a.delta_sr,
    };
    params.validate()?;
    let mut state = DecisionState::single(&params, ladder_file.ladder.len())?;
    let last = samples.last().expect("non-empty").timestamp;
    let windows = (last / params.window_seconds).floor() as u64;
    if windows == 0 {
        return Err(Error::InvalidArgument(format!(
            "RR log ends at {last} s, shorter than one {} s window",
            params.window_seconds
        )));
    }
    let mut rows = Vec::with_capacity(windows as usize);
    for k in 1..=windows {
        let end = k as f64 * params.window_seconds;
        let record = advance(
            &mut state,
            window_mean(&samples, end, params.window_seconds),
            &params,
        );
        rows.push(TimelineRow {
            window_end: end,
            mean_rr: record.mean_rr,
            delta: record.delta,
            index: record.indices[0],
            gap: record.gap,
        });
    }
    write_timeline_csv(&a.out, &rows)?;
    RunManifest::new("adapt")
        .parameter("window", params.window_seconds)
        .parameter("rest_mean_rr", params.rest_mean_rr)
        .parameter("stress_mean_rr", params.stress_mean_rr)
        .parameter("rest_spread", params.rest_spread)
        .parameter("stress_spread", params.stress_spread)
        .parameter("rest_to_stress_threshold", params.rest_to_stress_threshold)
        .parameter("stress_to_rest_threshold", params.stress_to_rest_threshold)
        .input("rr", &a.rr)?
        .input("ladder", &a.ladder)?
        .output(&a.out)
        .write(&manifest_sibling(&a.out))?;
    println!(
        "{} windows processed, index {} -> {} ({} rungs)",
        rows.len(),
        rows.first().expect("windows > 0").index,
        rows.last().expect("windows > 0").index,
        ladder_file.ladder.len()
    );
    Ok(())
}

fn simulate(a: SimulateArgs) -> Result<()> {
    fs::create_dir_all(&a.out_dir)?;
    let mut config = load_session_config(&a.config)?;
    if let Some(p) = a.pin_index {
        config.pinned_index = Some(p);
    }
    if let Some(s) = a.seed {
        config.seed = s;
    }
    let mut manifest = RunManifest::new("simulate")
        .with_seed(config.seed)
        .parameter("duration", config.duration)
        .parameter(
            "pin_index",
            config
                .pinned_index
                .map_or_else(|| "none".to_string(), |p| p.to_string()),
        )
        .input("config", &a.config)?;
    for (role, path) in session_input_files(&a.config)? {
        manifest = manifest.input(&role, &path)?;
    }

    match run_session(&config) {
        Ok(report) => {
            write_outputs(&a.out_dir, &report, manifest)?;
            println!(
                "session complete: {} cycles in {} s, {:.4} cycles/min, \
                 {} errors ({:.4} per cycle), final indices {:?}",
                report.cycles_completed,
                report.duration,
                report.production_rate,
                report.errors,
                report.error_rate,
                report.final_indices
            );
            Ok(())
        }
        Err(Error::TruncatedSession { at_s, partial }) => {
            write_outputs(&a.out_dir, &partial, manifest.parameter("truncated", true))?;
            println!(
                "partial report written: {} cycles observed before the RR \
                 stream ended at {at_s} s",
                partial.cycles_completed
            );
            Err(Error::TruncatedSession { at_s, partial })
        }
        Err(e) => Err(e),
    }
}

fn write_outputs(out_dir: &Path, report: &SessionReport, manifest: RunManifest) -> Result<()> {
    let report_path = out_dir.join("report.json");
    let timeline_path = out_dir.join("timeline.csv");
    let cycles_path = out_dir.join("cycles.csv");
    write_report_json(&report_path, report)?;
    write_timeline_csv(&timeline_path, &report.timeline)?;
    write_cycles_csv(&cycles_path, &report.cycles)?;
    manifest
        .output(&report_path)
        .output(&timeline_path)
        .output(&cycles_path)
        .write(&out_dir.join("manifest.json"))
}

/// Manifest path next to a single-file output: the extension is replaced,
/// so `timeline.csv` gets `timeline.manifest.json`.
fn manifest_sibling(out: &Path) -> PathBuf {
    out.with_extension("manifest.json")
}
