//! Downsampling a Pareto front to a small ordered ladder of pace settings.
//! Index 1 is the slowest/smoothest member, the last index the fastest;
//! online adaptation steps along this ladder.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimizer::ObjectivePoint;
use crate::spline::IntervalVector;

/// Weight floor and augmentation coefficient of the scalarizing function.
const WEIGHT_FLOOR: f64 = 1e-6;
const AUGMENTATION: f64 = 1e-4;

/// One pace setting: the interval vector to execute and its objectives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderEntry {
    pub intervals: IntervalVector,
    pub f_time: f64,
    pub f_jerk: f64,
}

/// Strictly ordered pace ladder: descending execution time, ascending
/// jerk. Indices are 1-based to match how operators count settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LadderRepr", into = "LadderRepr")]
pub struct SolutionLadder {
    entries: Vec<LadderEntry>,
    truncated: bool,
}

/// Serialized shape; conversion re-runs the ordering validation on load.
#[derive(Serialize, Deserialize)]
struct LadderRepr {
    entries: Vec<LadderEntry>,
    truncated: bool,
}

impl TryFrom<LadderRepr> for SolutionLadder {
    type Error = Error;

    fn try_from(r: LadderRepr) -> Result<Self> {
        SolutionLadder::with_truncation(r.entries, r.truncated)
    }
}

impl From<SolutionLadder> for LadderRepr {
    fn from(l: SolutionLadder) -> LadderRepr {
        LadderRepr {
            entries: l.entries,
            truncated: l.truncated,
        }
    }
}

impl SolutionLadder {
    pub fn new(entries: Vec<LadderEntry>) -> Result<Self> {
        SolutionLadder::with_truncation(entries, false)
    }

    fn with_truncation(entries: Vec<LadderEntry>, truncated: bool) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidArgument("ladder cannot be empty".into()));
        }
        for pair in entries.windows(2) {
            if !(pair[1].f_time < pair[0].f_time && pair[1].f_jerk > pair[0].f_jerk) {
                return Err(Error::InvalidArgument(format!(
                    "ladder entries must strictly trade time for jerk: ({}, {}) then ({}, {})",
                    pair[0].f_time, pair[0].f_jerk, pair[1].f_time, pair[1].f_jerk
                )));
            }
        }
        Ok(SolutionLadder { entries, truncated })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// True when the source front had fewer distinct points than requested.
    pub fn is_truncated(&self) -> bool {
        self.truncated
    }

    pub fn entries(&self) -> &[LadderEntry] {
        &self.entries
    }

    /// 1-based lookup: index 1 is the smoothest setting, `len()` the fastest.
    pub fn entry(&self, index: usize) -> Result<&LadderEntry> {
        if index == 0 || index > self.entries.len() {
            return Err(Error::IndexOutOfRange {
                index,
                size: self.entries.len(),
            });
        }
        Ok(&self.entries[index - 1])
    }
}

/// Augmented weighted-max scalarization of a normalized objective pair.
/// Small weight on an objective makes deviations in it expensive, steering
/// the pick toward that objective's minimizer.
fn scalarize(norm: [f64; 2], w_time: f64, w_jerk: f64) -> f64 {
    let a_time = norm[0] / w_time;
    let a_jerk = norm[1] / w_jerk;
    a_time.max(a_jerk) + AUGMENTATION * (a_time + a_jerk)
}

/// Picks `size` well-spread members of a feasible non-dominated front and
/// orders them from slowest/smoothest to fastest. The weight ladder runs
/// from all-weight-on-time (which tolerates time and so favors the minimum
/// jerk point) to all-weight-on-jerk (favoring minimum time). If the front
/// has fewer distinct points than requested, all of them are returned and
/// the ladder is flagged truncated.
pub fn downsample(front: &[ObjectivePoint], size: usize) -> Result<SolutionLadder> {
    if size < 2 {
        return Err(Error::InvalidArgument(format!(
            "ladder needs at least 2 settings, got {size}"
        )));
    }
    let mut unique: Vec<&ObjectivePoint> = front.iter().filter(|p| p.feasible()).collect();
    if unique.is_empty() {
        return Err(Error::InvalidArgument(
            "cannot build a ladder from an empty or infeasible front".into(),
        ));
    }
    unique.sort_by(|a, b| {
        a.f_time
            .total_cmp(&b.f_time)
            .then(a.f_jerk.total_cmp(&b.f_jerk))
    });
    unique.dedup_by(|a, b| a.f_time == b.f_time && a.f_jerk == b.f_jerk);

    let chosen: Vec<&ObjectivePoint> = if unique.len() <= size {
        unique.clone()
    } else {
        let ideal = [
            unique.iter().map(|p| p.f_time).fold(f64::INFINITY, f64::min),
            unique.iter().map(|p| p.f_jerk).fold(f64::INFINITY, f64::min),
        ];
        let nadir = [
            unique
                .iter()
                .map(|p| p.f_time)
                .fold(f64::NEG_INFINITY, f64::max),
            unique
                .iter()
                .map(|p| p.f_jerk)
                .fold(f64::NEG_INFINITY, f64::max),
        ];
        let normalize = |p: &ObjectivePoint| -> [f64; 2] {
            let scale = |v: f64, d: usize| {
                let range = nadir[d] - ideal[d];
                if range > 0.0 {
                    (v - ideal[d]) / range
                } else {
                    0.0
                }
            };
            [scale(p.f_time, 0), scale(p.f_jerk, 1)]
        };
        let norms: Vec<[f64; 2]> = unique.iter().map(|p| normalize(p)).collect();

        let mut picked: Vec<usize> = Vec::with_capacity(size);
        for m in 0..size {
            let a = m as f64 / (size - 1) as f64;
            let w_jerk = a.max(WEIGHT_FLOOR);
            let w_time = (1.0 - a).max(WEIGHT_FLOOR);
            let mut best = 0;
            let mut best_value = f64::INFINITY;
            for (i, n) in norms.iter().enumerate() {
                let v = scalarize(*n, w_time, w_jerk);
                if v < best_value {
                    best_value = v;
                    best = i;
                }
            }
            if picked.contains(&best) {
                // nearest not-yet-picked point in normalized space
                let target = norms[best];
                let mut alt = None;
                let mut alt_dist = f64::INFINITY;
                for (i, n) in norms.iter().enumerate() {
                    if picked.contains(&i) {
                        continue;
                    }
                    let d = (n[0] - target[0]).powi(2) + (n[1] - target[1]).powi(2);
                    if d < alt_dist {
                        alt_dist = d;
                        alt = Some(i);
                    }
                }
                best = alt.expect("front is larger than the ladder");
            }
            picked.push(best);
        }
        picked.sort_unstable();
        picked.into_iter().map(|i| unique[i]).collect()
    };

    let truncated = chosen.len() < size;
    let mut entries: Vec<LadderEntry> = chosen
        .into_iter()
        .map(|p| LadderEntry {
            intervals: p.intervals.clone(),
            f_time: p.f_time,
            f_jerk: p.f_jerk,
        })
        .collect();
    entries.sort_by(|a, b| b.f_time.total_cmp(&a.f_time));
    SolutionLadder::with_truncation(entries, truncated)
}
