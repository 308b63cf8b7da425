//! Heart-rate driven pace selection. Windowed means of the RR-interval
//! stream are compared against a rest baseline and a stress threshold; the
//! resulting integer step moves the active index along the solution ladder,
//! one decision per window.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_WINDOW_SECONDS: f64 = 30.0;
/// Minimum drop of the windowed mean (seconds) read as rest-to-stress.
pub const DEFAULT_REST_TO_STRESS_THRESHOLD: f64 = 0.02;
/// Mean-RR rise (seconds) worth one recovery step.
pub const DEFAULT_STRESS_TO_REST_THRESHOLD: f64 = 0.01;
/// Typical spread of resting mean RR around its baseline.
pub const DEFAULT_REST_SPREAD: f64 = 0.14;
/// Typical spread of stressed mean RR around its baseline.
pub const DEFAULT_STRESS_SPREAD: f64 = 0.06;
/// Default offset of the stress baseline below the rest baseline.
pub const DEFAULT_REST_STRESS_GAP: f64 = 0.10;

/// Ratios within this distance of an integer are treated as that integer
/// before rounding away from it, so threshold arithmetic done in decimal
/// (0.03 / 0.01 and friends) lands on the intended step count.
const RATIO_SNAP: f64 = 1e-9;

/// One RR interval: the instant the beat completed and the interval length,
/// both in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RrSample {
    pub timestamp: f64,
    pub rr: f64,
}

/// Subject-specific thresholds of the decision rule, all in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HrvParams {
    pub window_seconds: f64,
    /// Baseline mean RR at rest.
    pub rest_mean_rr: f64,
    /// Baseline mean RR under stress; below the rest baseline.
    pub stress_mean_rr: f64,
    pub rest_spread: f64,
    pub stress_spread: f64,
    pub rest_to_stress_threshold: f64,
    pub stress_to_rest_threshold: f64,
}

impl HrvParams {
    /// Defaults anchored at a measured resting mean RR: the stress baseline
    /// sits [`DEFAULT_REST_STRESS_GAP`] below it.
    pub fn for_rest_rr(rest_mean_rr: f64) -> Result<Self> {
        let p = HrvParams {
            window_seconds: DEFAULT_WINDOW_SECONDS,
            rest_mean_rr,
            stress_mean_rr: rest_mean_rr - DEFAULT_REST_STRESS_GAP,
            rest_spread: DEFAULT_REST_SPREAD,
            stress_spread: DEFAULT_STRESS_SPREAD,
            rest_to_stress_threshold: DEFAULT_REST_TO_STRESS_THRESHOLD,
            stress_to_rest_threshold: DEFAULT_STRESS_TO_REST_THRESHOLD,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("window_seconds", self.window_seconds),
            ("rest_mean_rr", self.rest_mean_rr),
            ("stress_mean_rr", self.stress_mean_rr),
            ("rest_spread", self.rest_spread),
            ("stress_spread", self.stress_spread),
            ("rest_to_stress_threshold", self.rest_to_stress_threshold),
            ("stress_to_rest_threshold", self.stress_to_rest_threshold),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be finite and strictly positive, got {v}"
                )));
            }
        }
        if self.stress_mean_rr >= self.rest_mean_rr {
            return Err(Error::InvalidArgument(format!(
                "stress baseline {} must lie below rest baseline {}",
                self.stress_mean_rr, self.rest_mean_rr
            )));
        }
        if self.stress_spread >= self.stress_mean_rr {
            return Err(Error::InvalidArgument(
                "stress spread must leave the deep-stress floor positive".into(),
            ));
        }
        Ok(())
    }

    /// Mean RR below which the subject is treated as deeply stressed even
    /// without a fresh drop.
    pub fn stress_floor(&self) -> f64 {
        self.stress_mean_rr - self.stress_spread
    }

    /// Starting ladder index: near the top, backed off by how many
    /// rest-to-stress steps fit into the resting spread.
    pub fn initial_index(&self, ladder_size: usize) -> Result<usize> {
        if ladder_size == 0 {
            return Err(Error::InvalidArgument("ladder size must be positive".into()));
        }
        let raw = ladder_size as f64 - self.rest_spread / self.rest_to_stress_threshold;
        Ok(raw.round().clamp(1.0, ladder_size as f64) as usize)
    }
}

/// Decision-rule memory: the previous windowed mean and the active 1-based
/// index of every controlled path's ladder.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecisionState {
    prev_mean_rr: Option<f64>,
    stress_floor: f64,
    indices: Vec<usize>,
    sizes: Vec<usize>,
}

impl DecisionState {
    pub fn new(params: &HrvParams, ladder_sizes: &[usize]) -> Result<Self> {
        params.validate()?;
        if ladder_sizes.is_empty() {
            return Err(Error::InvalidArgument(
                "need at least one ladder to control".into(),
            ));
        }
        let mut indices = Vec::with_capacity(ladder_sizes.len());
        for &n in ladder_sizes {
            indices.push(params.initial_index(n)?);
        }
        Ok(DecisionState {
            prev_mean_rr: None,
            stress_floor: params.stress_floor(),
            indices,
            sizes: ladder_sizes.to_vec(),
        })
    }

    pub fn single(params: &HrvParams, ladder_size: usize) -> Result<Self> {
        DecisionState::new(params, &[ladder_size])
    }

    pub fn previous_mean(&self) -> Option<f64> {
        self.prev_mean_rr
    }

    pub fn stress_floor(&self) -> f64 {
        self.stress_floor
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn index(&self, path: usize) -> usize {
        self.indices[path]
    }
}

fn snap(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= RATIO_SNAP {
        r
    } else {
        x
    }
}

fn floor_snapped(x: f64) -> i64 {
    snap(x).floor().clamp(-1e12, 1e12) as i64
}

fn ceil_snapped(x: f64) -> i64 {
    snap(x).ceil().clamp(-1e12, 1e12) as i64
}

/// Mean RR over the half-open window `(window_end - window_seconds,
/// window_end]`, or `None` when no sample completed inside it.
pub fn window_mean(samples: &[RrSample], window_end: f64, window_seconds: f64) -> Option<f64> {
    let start = window_end - window_seconds;
    let mut sum = 0.0;
    let mut count = 0u32;
    for s in samples {
        if s.timestamp > start && s.timestamp <= window_end {
            sum += s.rr;
            count += 1;
        }
    }
    if count == 0 {
        None
    } else {
        Some(sum / f64::from(count))
    }
}

/// Signed ladder step for the new windowed mean. Negative steps slow the
/// pace down, positive steps speed it up:
///
/// * a drop of more than the rest-to-stress threshold while below the rest
///   baseline steps down in proportion to the depth of the drop;
/// * any rise that ends at or above the stress baseline steps up in
///   proportion to the recovered amount;
/// * a mean below the deep-stress floor always steps down by one;
/// * otherwise hold.
///
/// The first window has no predecessor and always holds.
pub fn decide_step(mean_rr: f64, state: &DecisionState, params: &HrvParams) -> i64 {
    let Some(prev) = state.prev_mean_rr else {
        return 0;
    };
    let diff = mean_rr - prev;
    if diff < -params.rest_to_stress_threshold && mean_rr < params.rest_mean_rr {
        let depth = mean_rr - params.rest_mean_rr.min(prev);
        floor_snapped((depth + params.rest_to_stress_threshold) / params.rest_to_stress_threshold)
    } else if diff > 0.0 && mean_rr >= params.stress_mean_rr {
        let recovery = mean_rr - params.stress_mean_rr.max(prev);
        ceil_snapped(recovery / params.stress_to_rest_threshold)
    } else if mean_rr < state.stress_floor {
        -1
    } else {
        0
    }
}

/// Moves every controlled index by `delta`, clamped to its ladder.
pub fn apply_step(state: &mut DecisionState, delta: i64) {
    for (idx, &n) in state.indices.iter_mut().zip(&state.sizes) {
        *idx = (*idx as i64 + delta).clamp(1, n as i64) as usize;
    }
}

/// Outcome of one decision window, after the step was applied.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRecord {
    /// Windowed mean the decision used; on a data gap this is the carried
    /// forward previous mean (or `None` when there is none yet).
    pub mean_rr: Option<f64>,
    pub delta: i64,
    pub indices: Vec<usize>,
    pub gap: bool,
}

/// Feeds one window's mean (or a gap) through the rule, applies the step
/// and updates the memory. Gaps hold all indices and keep the previous mean
/// for the next comparison.
pub fn advance(
    state: &mut DecisionState,
    observed: Option<f64>,
    params: &HrvParams,
) -> StepRecord {
    match observed {
        Some(mean) => {
            let delta = decide_step(mean, state, params);
            apply_step(state, delta);
            state.prev_mean_rr = Some(mean);
            StepRecord {
                mean_rr: Some(mean),
                delta,
                indices: state.indices.clone(),
                gap: false,
            }
        }
        None => StepRecord {
            mean_rr: state.prev_mean_rr,
            delta: 0,
            indices: state.indices.clone(),
            gap: true,
        },
    }
}
