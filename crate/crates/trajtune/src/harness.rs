//! Closed-loop session simulation: a robot repeatedly executes its paths at
//! the pace the heart-rate rule selects, a human phase follows each cycle,
//! and throughput plus error statistics are accumulated over a fixed
//! horizon. Single-threaded discrete-event loop; all randomness flows from
//! the session seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;
use serde::Serialize;

use crate::adaptation::{advance, window_mean, DecisionState, HrvParams, RrSample};
use crate::error::{Error, Result};
use crate::interpolation::TrajectoryProblem;
use crate::optimizer::SolutionLadder;

/// Shortest RR interval the generator will emit, guarding against noise
/// driving a beat length to zero or below.
const MIN_SYNTH_RR: f64 = 0.05;

/// Constant-mean stretch of a synthetic RR profile, `[start, end)` seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct RrSegment {
    pub start: f64,
    pub end: f64,
    pub mean_rr: f64,
}

/// Piecewise-constant target RR with Gaussian beat noise.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct SyntheticRrProfile {
    pub segments: Vec<RrSegment>,
    pub noise_std: f64,
}

impl SyntheticRrProfile {
    fn validate(&self, duration: f64) -> Result<()> {
        if !self.noise_std.is_finite() || self.noise_std < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "noise standard deviation must be non-negative, got {}",
                self.noise_std
            )));
        }
        if self.segments.is_empty() {
            return Err(Error::InvalidArgument(
                "synthetic RR profile needs at least one segment".into(),
            ));
        }
        if self.segments[0].start > 0.0 {
            return Err(Error::InvalidArgument(
                "first RR segment must start at or before 0".into(),
            ));
        }
        for s in &self.segments {
            if !(s.mean_rr.is_finite() && s.mean_rr > 0.0) || s.end <= s.start {
                return Err(Error::InvalidArgument(format!(
                    "bad RR segment [{}, {}) mean {}",
                    s.start, s.end, s.mean_rr
                )));
            }
        }
        for pair in self.segments.windows(2) {
            if pair[1].start != pair[0].end {
                return Err(Error::InvalidArgument(format!(
                    "RR segments must be contiguous: [{}, {}) then [{}, {})",
                    pair[0].start, pair[0].end, pair[1].start, pair[1].end
                )));
            }
        }
        if self.segments.last().expect("non-empty").end < duration {
            return Err(Error::InvalidArgument(format!(
                "RR segments end at {} but the session lasts {duration}",
                self.segments.last().expect("non-empty").end
            )));
        }
        Ok(())
    }

    fn target_at(&self, t: f64) -> f64 {
        for s in &self.segments {
            if t < s.end {
                return s.mean_rr;
            }
        }
        self.segments.last().expect("non-empty").mean_rr
    }
}

/// Beat-by-beat RR stream over `(0, duration]`: each interval is the
/// segment target at the beat's start plus Gaussian noise, timestamps are
/// the running sum. Identical seeds give identical streams.
pub fn synth_rr(
    profile: &SyntheticRrProfile,
    duration: f64,
    seed: u64,
) -> Result<Vec<RrSample>> {
    if !(duration.is_finite() && duration > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "duration must be positive, got {duration}"
        )));
    }
    profile.validate(duration)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = if profile.noise_std > 0.0 {
        Some(
            rand_distr::Normal::new(0.0, profile.noise_std)
                .expect("std validated as finite and non-negative"),
        )
    } else {
        None
    };
    let mut out = Vec::new();
    let mut t = 0.0;
    loop {
        let mut rr = profile.target_at(t);
        if let Some(n) = &noise {
            rr += n.sample(&mut rng);
        }
        let rr = rr.max(MIN_SYNTH_RR);
        t += rr;
        if t > duration {
            return Ok(out);
        }
        out.push(RrSample { timestamp: t, rr });
    }
}

/// Duration model of the human phase that follows each robot cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub enum HumanPhase {
    Fixed { seconds: f64 },
    Uniform { min: f64, max: f64 },
}

impl HumanPhase {
    fn validate(&self) -> Result<()> {
        match self {
            HumanPhase::Fixed { seconds } => {
                if !(seconds.is_finite() && *seconds >= 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "human phase must be non-negative, got {seconds}"
                    )));
                }
            }
            HumanPhase::Uniform { min, max } => {
                if !(min.is_finite() && max.is_finite() && *min >= 0.0 && max >= min) {
                    return Err(Error::InvalidArgument(format!(
                        "bad human phase range [{min}, {max}]"
                    )));
                }
            }
        }
        Ok(())
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            HumanPhase::Fixed { seconds } => *seconds,
            HumanPhase::Uniform { min, max } => {
                if max > min {
                    rng.random_range(*min..=*max)
                } else {
                    *min
                }
            }
        }
    }
}

/// Where the RR stream comes from: a recorded log or the generator.
#[derive(Debug, Clone, PartialEq)]
pub enum RrSource {
    Replay(Vec<RrSample>),
    Synthetic(SyntheticRrProfile),
}

/// One robot path under adaptation: its interpolation problem and the pace
/// ladder to step along.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionPath {
    pub problem: TrajectoryProblem,
    pub ladder: SolutionLadder,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionConfig {
    pub duration: f64,
    pub seed: u64,
    pub hrv: HrvParams,
    pub human: HumanPhase,
    pub rr_source: RrSource,
    pub paths: Vec<SessionPath>,
    /// Fixed 1-based ladder index; disables adaptation of the executed pace
    /// (decisions are still logged for comparison).
    pub pinned_index: Option<usize>,
    /// Instants of logged human errors, seconds from session start.
    pub error_events: Vec<f64>,
}

/// One decision window in the session log.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimelineRow {
    pub window_end: f64,
    /// Windowed mean RR; carried forward over gaps, absent before any data.
    pub mean_rr: Option<f64>,
    pub delta: i64,
    /// Executed 1-based index of the first path after this decision.
    pub index: usize,
    pub gap: bool,
}

/// One completed robot+human cycle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CycleRow {
    pub cycle: u64,
    pub start: f64,
    pub duration: f64,
    /// Index executed by the first path of this cycle.
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionReport {
    pub duration: f64,
    pub cycles_completed: u64,
    pub errors: u64,
    /// Completed cycles per minute.
    pub production_rate: f64,
    /// Errors per completed cycle.
    pub error_rate: f64,
    pub timeline: Vec<TimelineRow>,
    pub cycles: Vec<CycleRow>,
    pub final_indices: Vec<usize>,
}

/// Throughput and error statistics: cycles per minute and errors per cycle.
/// Zero cycles with logged errors has no defined error rate and is reported
/// as such rather than silently returning zero.
pub fn compute_stats(cycles: u64, errors: u64, duration: f64) -> Result<(f64, f64)> {
    if !(duration.is_finite() && duration > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "duration must be positive, got {duration}"
        )));
    }
    if cycles == 0 {
        if errors > 0 {
            return Err(Error::UndefinedRate { errors });
        }
        return Ok((0.0, 0.0));
    }
    Ok((
        60.0 * cycles as f64 / duration,
        errors as f64 / cycles as f64,
    ))
}

fn validate_config(config: &SessionConfig) -> Result<()> {
    if !(config.duration.is_finite() && config.duration > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "session duration must be positive, got {}",
            config.duration
        )));
    }
    config.hrv.validate()?;
    config.human.validate()?;
    if config.paths.is_empty() {
        return Err(Error::InvalidArgument("session needs at least one path".into()));
    }
    for (i, path) in config.paths.iter().enumerate() {
        for entry in path.ladder.entries() {
            if entry.intervals.waypoint_count() != path.problem.waypoint_count() {
                return Err(Error::InvalidArgument(format!(
                    "path {i}: ladder entry spans {} waypoints but the problem has {}",
                    entry.intervals.waypoint_count(),
                    path.problem.waypoint_count()
                )));
            }
        }
        if let Some(k) = config.pinned_index {
            if k == 0 || k > path.ladder.len() {
                return Err(Error::IndexOutOfRange {
                    index: k,
                    size: path.ladder.len(),
                });
            }
        }
    }
    if let RrSource::Replay(samples) = &config.rr_source {
        for s in samples {
            if !(s.timestamp.is_finite() && s.timestamp > 0.0 && s.rr.is_finite() && s.rr > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "bad RR sample at t = {}, rr = {}",
                    s.timestamp, s.rr
                )));
            }
        }
        for pair in samples.windows(2) {
            if pair[1].timestamp <= pair[0].timestamp {
                return Err(Error::InvalidArgument(format!(
                    "RR timestamps must strictly increase, got {} then {}",
                    pair[0].timestamp, pair[1].timestamp
                )));
            }
        }
    }
    for t in &config.error_events {
        if !t.is_finite() {
            return Err(Error::InvalidArgument("error event times must be finite".into()));
        }
    }
    Ok(())
}

/// Feeds every decision window ending at or before `up_to` through the
/// rule. Returns the truncation instant if a replayed stream ran out (an
/// empty window with no samples after it).
#[allow(clippy::too_many_arguments)]
fn process_windows(
    up_to: f64,
    window: f64,
    next_window: &mut u64,
    samples: &[RrSample],
    replay: bool,
    state: &mut DecisionState,
    params: &HrvParams,
    pinned: Option<usize>,
    timeline: &mut Vec<TimelineRow>,
) -> Option<f64> {
    loop {
        let end = *next_window as f64 * window;
        if end > up_to {
            return None;
        }
        let mean = window_mean(samples, end, window);
        if replay
            && mean.is_none()
            && !samples.last().is_some_and(|s| s.timestamp > end)
        {
            return Some(end);
        }
        let record = advance(state, mean, params);
        timeline.push(TimelineRow {
            window_end: end,
            mean_rr: record.mean_rr,
            delta: record.delta,
            index: pinned.unwrap_or(record.indices[0]),
            gap: record.gap,
        });
        *next_window += 1;
    }
}

/// Statistics that tolerate a zero-cycle prefix, for truncation reports.
fn stats_lenient(cycles: u64, errors: u64, elapsed: f64) -> (f64, f64) {
    if cycles == 0 {
        let rate = if errors > 0 { f64::NAN } else { 0.0 };
        return (0.0, rate);
    }
    (
        60.0 * cycles as f64 / elapsed,
        errors as f64 / cycles as f64,
    )
}

/// Runs one closed-loop session. Decision windows are processed before each
/// path start, so an index change never retimes a path mid-flight; windows
/// remaining at the horizon are drained into the timeline afterwards. A
/// cycle counts as completed when its human phase ends at or before the
/// horizon.
pub fn run_session(config: &SessionConfig) -> Result<SessionReport> {
    validate_config(config)?;
    let (samples, replay) = match &config.rr_source {
        RrSource::Replay(s) => (s.clone(), true),
        RrSource::Synthetic(p) => (synth_rr(p, config.duration, config.seed)?, false),
    };
    let window = config.hrv.window_seconds;
    let sizes: Vec<usize> = config.paths.iter().map(|p| p.ladder.len()).collect();
    let mut state = DecisionState::new(&config.hrv, &sizes)?;
    let mut human_rng =
        ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(0x9E37_79B9_7F4A_7C15));

    let mut timeline: Vec<TimelineRow> = Vec::new();
    let mut cycles: Vec<CycleRow> = Vec::new();
    let mut next_window = 1u64;
    let mut clock = 0.0_f64;
    let mut completed = 0u64;

    let truncated_at = 'session: loop {
        let cycle_start = clock;
        let mut first_index = None;
        for (pi, path) in config.paths.iter().enumerate() {
            if let Some(at) = process_windows(
                clock,
                window,
                &mut next_window,
                &samples,
                replay,
                &mut state,
                &config.hrv,
                config.pinned_index,
                &mut timeline,
            ) {
                break 'session Some(at);
            }
            let index = config.pinned_index.unwrap_or(state.index(pi));
            if first_index.is_none() {
                first_index = Some(index);
            }
            clock += path.ladder.entry(index)?.intervals.total_duration();
        }
        clock += config.human.draw(&mut human_rng);
        if clock > config.duration {
            break None; // partial cycle discarded
        }
        completed += 1;
        cycles.push(CycleRow {
            cycle: completed,
            start: cycle_start,
            duration: clock - cycle_start,
            index: first_index.expect("at least one path"),
        });
        if clock == config.duration {
            break None;
        }
    };

    if let Some(at) = truncated_at {
        let kept: Vec<CycleRow> = cycles
            .iter()
            .filter(|c| c.start + c.duration <= at)
            .cloned()
            .collect();
        let b = kept.len() as u64;
        let errors = config
            .error_events
            .iter()
            .filter(|&&t| t >= 0.0 && t <= at)
            .count() as u64;
        let (production_rate, error_rate) = stats_lenient(b, errors, at);
        return Err(Error::TruncatedSession {
            at_s: at,
            partial: Box::new(SessionReport {
                duration: at,
                cycles_completed: b,
                errors,
                production_rate,
                error_rate,
                timeline,
                cycles: kept,
                final_indices: state.indices().to_vec(),
            }),
        });
    }

    if let Some(at) = process_windows(
        config.duration,
        window,
        &mut next_window,
        &samples,
        replay,
        &mut state,
        &config.hrv,
        config.pinned_index,
        &mut timeline,
    ) {
        // drain hit the end of a replayed stream
        let kept: Vec<CycleRow> = cycles
            .iter()
            .filter(|c| c.start + c.duration <= at)
            .cloned()
            .collect();
        let b = kept.len() as u64;
        let errors = config
            .error_events
            .iter()
            .filter(|&&t| t >= 0.0 && t <= at)
            .count() as u64;
        let (production_rate, error_rate) = stats_lenient(b, errors, at);
        return Err(Error::TruncatedSession {
            at_s: at,
            partial: Box::new(SessionReport {
                duration: at,
                cycles_completed: b,
                errors,
                production_rate,
                error_rate,
                timeline,
                cycles: kept,
                final_indices: state.indices().to_vec(),
            }),
        });
    }

    let errors = config
        .error_events
        .iter()
        .filter(|&&t| t >= 0.0 && t <= config.duration)
        .count() as u64;
    let (production_rate, error_rate) = compute_stats(completed, errors, config.duration)?;
    Ok(SessionReport {
        duration: config.duration,
        cycles_completed: completed,
        errors,
        production_rate,
        error_rate,
        timeline,
        cycles,
        final_indices: state.indices().to_vec(),
    })
}
