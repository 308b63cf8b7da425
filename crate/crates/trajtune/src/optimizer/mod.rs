//! Bi-objective interval-duration search: execution time versus integrated
//! squared jerk, subject to per-joint velocity, acceleration and jerk bounds
//! enforced on the spline coefficients.

mod ladder;
mod nsga2;

pub use ladder::{downsample, LadderEntry, SolutionLadder};
pub use nsga2::{nsga2, GenerationStats, Nsga2Config, OptimizationRun};

use serde::Serialize;

use crate::error::Result;
use crate::interpolation::{solve_trajectory, JointLimits, JointTrajectory, TrajectoryProblem};
use crate::spline::{derivative_control_points, IntervalVector};

/// Positivity floor applied to the search-space lower bounds so intervals
/// never collapse to zero.
pub const MIN_INTERVAL_FLOOR: f64 = 1e-3;

/// Upper box bound per interval is `UPPER_BOUND_SCALE * max(lb, UPPER_BOUND_REFERENCE)`.
pub const UPPER_BOUND_SCALE: f64 = 20.0;
pub const UPPER_BOUND_REFERENCE: f64 = 0.1;

/// One candidate solution in objective space with its decision vector.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObjectivePoint {
    pub intervals: IntervalVector,
    pub f_time: f64,
    pub f_jerk: f64,
    pub violation: f64,
}

impl ObjectivePoint {
    pub fn feasible(&self) -> bool {
        self.violation == 0.0
    }

    pub fn objectives(&self) -> [f64; 2] {
        [self.f_time, self.f_jerk]
    }
}

/// Execution-time objective: joint count times total duration, so each
/// joint's busy time is charged once.
pub fn eval_time(h: &IntervalVector, joint_count: usize) -> f64 {
    joint_count as f64 * h.total_duration()
}

const GL3_OFFSET: f64 = 0.774_596_669_241_483_4; // sqrt(3/5)
const GL3_SIDE_WEIGHT: f64 = 5.0 / 9.0;
const GL3_MID_WEIGHT: f64 = 8.0 / 9.0;

fn gauss3<F: Fn(f64) -> f64>(a: f64, b: f64, f: F) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    half * (GL3_SIDE_WEIGHT * (f(mid - half * GL3_OFFSET) + f(mid + half * GL3_OFFSET))
        + GL3_MID_WEIGHT * f(mid))
}

/// Integral of the squared jerk summed over all joints. Jerk of a quintic is
/// quadratic on each knot span, so its square is quartic and the three-point
/// Gauss rule per span is exact up to rounding.
pub fn squared_jerk_integral(traj: &JointTrajectory) -> f64 {
    let epochs = traj.intervals().cumulative();
    let mut total = 0.0;
    for curve in traj.curves() {
        let jerk = curve
            .derivative()
            .and_then(|c| c.derivative())
            .and_then(|c| c.derivative())
            .expect("quintic curves support three derivative levels");
        for span in epochs.windows(2) {
            total += gauss3(span[0], span[1], |t| {
                let j = jerk.value(t).expect("t inside domain");
                j * j
            });
        }
    }
    total
}

/// Smoothness objective for an interval vector: solves the interpolation
/// system and integrates the squared jerk.
pub fn eval_jerk(h: &IntervalVector, problem: &TrajectoryProblem) -> Result<f64> {
    Ok(squared_jerk_integral(&solve_trajectory(h, problem)?))
}

/// Worst coefficient magnitude and accumulated excess for one derivative
/// order of one joint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MarginDetail {
    pub max_abs: f64,
    pub bound: f64,
    pub excess: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JointMargins {
    pub velocity: MarginDetail,
    pub acceleration: MarginDetail,
    pub jerk: MarginDetail,
}

/// Constraint audit for a trajectory: spline coefficients of the velocity,
/// acceleration and jerk curves checked against the per-joint bounds. By the
/// convex-hull property a clean audit is sufficient for the continuous
/// trajectory, not just for sampled instants.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstraintMargins {
    pub violation: f64,
    pub joints: Vec<JointMargins>,
}

impl ConstraintMargins {
    pub fn feasible(&self) -> bool {
        self.violation == 0.0
    }
}

fn margin_for(coeffs: &[f64], bound: f64) -> MarginDetail {
    let mut max_abs = 0.0_f64;
    let mut excess = 0.0_f64;
    for c in coeffs {
        let a = c.abs();
        max_abs = max_abs.max(a);
        if a > bound {
            excess += a - bound;
        }
    }
    MarginDetail {
        max_abs,
        bound,
        excess,
    }
}

pub fn constraint_margins(traj: &JointTrajectory, limits: &[JointLimits]) -> ConstraintMargins {
    assert_eq!(
        traj.joint_count(),
        limits.len(),
        "one limit set per joint required"
    );
    let mut joints = Vec::with_capacity(limits.len());
    let mut violation = 0.0;
    for (curve, lim) in traj.curves().iter().zip(limits) {
        let knots = curve.knots();
        let cps = curve.control_points();
        let vel = derivative_control_points(cps, knots, 1).expect("degree supports order 1");
        let acc = derivative_control_points(cps, knots, 2).expect("degree supports order 2");
        let jrk = derivative_control_points(cps, knots, 3).expect("degree supports order 3");
        let jm = JointMargins {
            velocity: margin_for(&vel, lim.max_velocity),
            acceleration: margin_for(&acc, lim.max_acceleration),
            jerk: margin_for(&jrk, lim.max_jerk),
        };
        violation += jm.velocity.excess + jm.acceleration.excess + jm.jerk.excess;
        joints.push(jm);
    }
    ConstraintMargins { violation, joints }
}

/// Per-interval lower bounds derived from the waypoint gaps and velocity
/// limits: the straight-line travel time of the most demanding joint is a
/// floor on the duration available for that leg. End gaps span two
/// intervals (a virtual point sits between), so their bound is halved; the
/// two-waypoint case spreads its single gap over all three intervals.
pub fn lower_bounds(problem: &TrajectoryProblem) -> Vec<f64> {
    let w = problem.waypoint_count();
    let gap_bound = |l: usize| -> f64 {
        (0..problem.joint_count())
            .map(|j| {
                let wp = problem.waypoints(j);
                let v = problem.limits()[j].max_velocity;
                (wp[l + 1] - wp[l]).abs() / v
            })
            .fold(0.0, f64::max)
    };

    if w == 2 {
        let shared = gap_bound(0) / 3.0;
        return vec![shared; 3];
    }
    let mut lb = vec![0.0; w + 1];
    let first = gap_bound(0) / 2.0;
    lb[0] = first;
    lb[1] = first;
    let last = gap_bound(w - 2) / 2.0;
    lb[w - 1] = last;
    lb[w] = last;
    for l in 1..w - 2 {
        lb[l + 1] = gap_bound(l);
    }
    lb
}

/// Dominated area between a 2-D minimization front and a reference point,
/// by the standard sweep: sort by the first objective, stack slabs of
/// decreasing second objective. Points not strictly below the reference in
/// both coordinates contribute nothing.
pub fn hypervolume_2d(points: &[[f64; 2]], reference: [f64; 2]) -> f64 {
    let mut pts: Vec<[f64; 2]> = points
        .iter()
        .copied()
        .filter(|p| p[0] < reference[0] && p[1] < reference[1])
        .collect();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    let mut hv = 0.0;
    let mut prev_f2 = reference[1];
    for p in pts {
        if p[1] < prev_f2 {
            hv += (reference[0] - p[0]) * (prev_f2 - p[1]);
            prev_f2 = p[1];
        }
    }
    hv
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interpolation::JointLimits;
    use crate::spline::IntervalVector;

    fn intervals(h: &[f64]) -> IntervalVector {
        IntervalVector::new(h.to_vec()).unwrap()
    }

    fn demo_problem() -> TrajectoryProblem {
        TrajectoryProblem::new(
            vec![vec![0.0, 0.8, -0.3, 0.5], vec![0.2, -0.6, 0.4, 0.0]],
            vec![
                JointLimits::new(2.0, 12.0, 80.0).unwrap(),
                JointLimits::new(2.0, 12.0, 80.0).unwrap(),
            ],
        )
        .unwrap()
    }

    #[test]
    fn time_objective_is_exact_scaled_sum() {
        let h = intervals(&[0.31, 0.47, 0.22, 0.91, 0.13]);
        let sum: f64 = h.values().iter().sum();
        assert_eq!(eval_time(&h, 6), 6.0 * sum);
        assert_eq!(eval_time(&h, 1), sum);
    }

    #[test]
    fn gauss_rule_integrates_quartics_exactly() {
        // f(t) = t^4 on [0, 2]: exact integral 32/5
        let got = gauss3(0.0, 2.0, |t| t.powi(4));
        assert!((got - 6.4).abs() < 1e-13, "{got}");
        // and is not exact for t^6, so the rule really is three-point
        let six = gauss3(0.0, 2.0, |t| t.powi(6));
        assert!((six - 128.0 / 7.0).abs() > 1e-3);
    }

    /// Composite Simpson over a dense fixed grid, independent of the
    /// per-span Gauss rule.
    fn simpson_jerk(traj: &JointTrajectory, panels: usize) -> f64 {
        let t_end = traj.duration();
        let step = t_end / panels as f64;
        let mut total = 0.0;
        for curve in traj.curves() {
            let jerk = curve.derivative().unwrap().derivative().unwrap().derivative().unwrap();
            let f = |t: f64| {
                let v = jerk.value(t.min(t_end)).unwrap();
                v * v
            };
            let mut acc = f(0.0) + f(t_end);
            for k in 1..panels {
                let t = k as f64 * step;
                acc += if k % 2 == 1 { 4.0 * f(t) } else { 2.0 * f(t) };
            }
            total += acc * step / 3.0;
        }
        total
    }

    #[test]
    fn jerk_integral_matches_dense_simpson() {
        let problem = demo_problem();
        let h = intervals(&[0.4, 0.7, 0.5, 0.8, 0.6]);
        let traj = solve_trajectory(&h, &problem).unwrap();
        let gauss = squared_jerk_integral(&traj);
        let simpson = simpson_jerk(&traj, 10_000);
        assert!(
            (gauss - simpson).abs() <= 1e-6 * simpson.abs(),
            "gauss {gauss} vs simpson {simpson}"
        );
        assert_eq!(gauss, eval_jerk(&h, &problem).unwrap());
    }

    #[test]
    fn jerk_integral_is_positive_for_moving_trajectories() {
        let problem = demo_problem();
        let h = intervals(&[0.4, 0.7, 0.5, 0.8, 0.6]);
        assert!(eval_jerk(&h, &problem).unwrap() > 0.0);
    }

    #[test]
    fn generous_limits_audit_clean() {
        let problem = demo_problem();
        let h = intervals(&[0.8, 1.0, 0.9, 1.1, 0.8]);
        let traj = solve_trajectory(&h, &problem).unwrap();
        let loose = vec![JointLimits::new(1e6, 1e6, 1e6).unwrap(); 2];
        let m = constraint_margins(&traj, &loose);
        assert!(m.feasible());
        assert_eq!(m.violation, 0.0);
        assert!(m.joints[0].velocity.max_abs > 0.0);
    }

    #[test]
    fn tight_limits_accumulate_positive_violation() {
        let problem = demo_problem();
        let h = intervals(&[0.4, 0.7, 0.5, 0.8, 0.6]);
        let traj = solve_trajectory(&h, &problem).unwrap();
        let tight = vec![JointLimits::new(1e-3, 1e-3, 1e-3).unwrap(); 2];
        let m = constraint_margins(&traj, &tight);
        assert!(!m.feasible());
        assert!(m.violation > 0.0);
        let recomputed: f64 = m
            .joints
            .iter()
            .map(|j| j.velocity.excess + j.acceleration.excess + j.jerk.excess)
            .sum();
        assert_eq!(m.violation, recomputed);
    }

    #[test]
    fn coefficient_bounds_cover_sampled_extremes() {
        // convex hull: the sampled |velocity| never exceeds the largest
        // |velocity coefficient| the audit is based on
        let problem = demo_problem();
        let h = intervals(&[0.4, 0.7, 0.5, 0.8, 0.6]);
        let traj = solve_trajectory(&h, &problem).unwrap();
        let m = constraint_margins(&traj, problem.limits());
        let s = traj.sample(500.0).unwrap();
        for j in 0..2 {
            let peak = s.velocities[j].iter().fold(0.0_f64, |a, v| a.max(v.abs()));
            assert!(peak <= m.joints[j].velocity.max_abs + 1e-9);
        }
    }

    #[test]
    fn lower_bounds_follow_gap_mapping() {
        // three waypoints: both end gaps are split across two intervals
        let p = TrajectoryProblem::new(
            vec![vec![0.0, 1.0, 3.0], vec![0.0, -2.0, -1.0]],
            vec![
                JointLimits::new(2.0, 10.0, 100.0).unwrap(),
                JointLimits::new(4.0, 10.0, 100.0).unwrap(),
            ],
        )
        .unwrap();
        assert_eq!(lower_bounds(&p), vec![0.25, 0.25, 0.5, 0.5]);

        // four waypoints: the middle gap maps to the single middle interval
        let p = TrajectoryProblem::new(
            vec![vec![0.0, 1.0, 2.0, 4.0]],
            vec![JointLimits::new(1.0, 10.0, 100.0).unwrap()],
        )
        .unwrap();
        assert_eq!(lower_bounds(&p), vec![0.5, 0.5, 1.0, 1.0, 1.0]);

        // two waypoints: single gap spread across all three intervals
        let p = TrajectoryProblem::new(
            vec![vec![0.0, 1.0]],
            vec![JointLimits::new(2.0, 10.0, 100.0).unwrap()],
        )
        .unwrap();
        assert_eq!(lower_bounds(&p), vec![0.5 / 3.0; 3]);

        // coincident waypoints leave the raw bound at zero
        let p = TrajectoryProblem::new(
            vec![vec![1.0, 1.0, 2.0]],
            vec![JointLimits::new(1.0, 10.0, 100.0).unwrap()],
        )
        .unwrap();
        assert_eq!(lower_bounds(&p)[0], 0.0);
    }

    /// Inclusion-exclusion over all point subsets; exponential but exact,
    /// usable for small fronts only.
    fn hv_oracle(points: &[[f64; 2]], r: [f64; 2]) -> f64 {
        let n = points.len();
        assert!(n <= 16);
        let mut total = 0.0;
        for mask in 1u32..(1 << n) {
            let mut lo = [f64::NEG_INFINITY; 2];
            for (i, p) in points.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    lo[0] = lo[0].max(p[0]);
                    lo[1] = lo[1].max(p[1]);
                }
            }
            let vol = (r[0] - lo[0]).max(0.0) * (r[1] - lo[1]).max(0.0);
            if mask.count_ones() % 2 == 1 {
                total += vol;
            } else {
                total -= vol;
            }
        }
        total
    }

    #[test]
    fn hypervolume_matches_hand_value_and_oracle() {
        let front = [[1.0, 3.0], [2.0, 2.0], [3.0, 1.0]];
        assert_eq!(hypervolume_2d(&front, [4.0, 4.0]), 6.0);
        assert_eq!(hv_oracle(&front, [4.0, 4.0]), 6.0);

        // dominated and out-of-reference points change nothing
        let noisy = [
            [1.0, 3.0],
            [2.0, 2.0],
            [3.0, 1.0],
            [2.5, 2.5],
            [5.0, 0.5],
            [4.0, 4.0],
        ];
        assert_eq!(hypervolume_2d(&noisy, [4.0, 4.0]), 6.0);
    }

    #[test]
    fn hypervolume_agrees_with_inclusion_exclusion_on_random_fronts() {
        let mut state = 42u64;
        let mut next = || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64) / ((1u64 << 53) as f64)
        };
        for _ in 0..50 {
            let pts: Vec<[f64; 2]> = (0..10).map(|_| [next() * 4.0, next() * 4.0]).collect();
            let fast = hypervolume_2d(&pts, [4.5, 4.5]);
            let slow = hv_oracle(&pts, [4.5, 4.5]);
            assert!((fast - slow).abs() <= 1e-9 * (1.0 + slow), "{fast} vs {slow}");
        }
    }

    #[test]
    fn hypervolume_of_empty_or_outside_front_is_zero() {
        assert_eq!(hypervolume_2d(&[], [1.0, 1.0]), 0.0);
        assert_eq!(hypervolume_2d(&[[2.0, 0.5]], [1.0, 1.0]), 0.0);
    }
}
