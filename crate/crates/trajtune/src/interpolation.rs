//! Waypoint interpolation: assemble and solve the linear system that pins a
//! quintic spline to the waypoints and to the boundary kinematics of every
//! joint.
//!
//! The coefficient matrix depends only on the interval vector, so one
//! factorization serves all joints.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::spline::{
    nonzero_basis, IntervalVector, KnotVector, SplineCurve, TRAJECTORY_DEGREE,
};

/// Condition-number ceiling above which the interpolation system is treated
/// as degenerate instead of silently returning garbage coefficients.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Per-joint kinematic bounds, all strictly positive (infinite means
/// unconstrained).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct JointLimits {
    pub max_velocity: f64,
    pub max_acceleration: f64,
    pub max_jerk: f64,
}

impl JointLimits {
    pub fn new(max_velocity: f64, max_acceleration: f64, max_jerk: f64) -> Result<Self> {
        let l = JointLimits {
            max_velocity,
            max_acceleration,
            max_jerk,
        };
        l.validate()?;
        Ok(l)
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("max_velocity", self.max_velocity),
            ("max_acceleration", self.max_acceleration),
            ("max_jerk", self.max_jerk),
        ] {
            if v.is_nan() || v <= 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be strictly positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Endpoint kinematics imposed on one joint: (initial, final) pairs.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, serde::Deserialize)]
pub struct BoundaryConditions {
    pub velocity: (f64, f64),
    pub acceleration: (f64, f64),
    pub jerk: (f64, f64),
}

/// A multi-joint interpolation task: the waypoint matrix, kinematic limits
/// and boundary conditions. Interval durations are deliberately *not* part
/// of the problem; they are the free variable the optimizer searches over.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryProblem {
    waypoints: Vec<Vec<f64>>,
    limits: Vec<JointLimits>,
    boundary: Vec<BoundaryConditions>,
}

impl TrajectoryProblem {
    /// `waypoints[j]` lists the positions of joint `j` at every waypoint.
    /// All joints must visit the same number (at least two) of waypoints.
    /// Boundary kinematics default to rest-to-rest (all zero).
    pub fn new(waypoints: Vec<Vec<f64>>, limits: Vec<JointLimits>) -> Result<Self> {
        if waypoints.is_empty() {
            return Err(Error::InvalidArgument("need at least one joint".into()));
        }
        let count = waypoints[0].len();
        if count < 2 {
            return Err(Error::InvalidArgument(format!(
                "need at least 2 waypoints, got {count}"
            )));
        }
        if waypoints.iter().any(|w| w.len() != count) {
            return Err(Error::InvalidArgument(
                "all joints must have the same waypoint count".into(),
            ));
        }
        if waypoints.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("waypoints must be finite".into()));
        }
        if limits.len() != waypoints.len() {
            return Err(Error::InvalidArgument(format!(
                "{} joints but {} limit sets",
                waypoints.len(),
                limits.len()
            )));
        }
        for l in &limits {
            l.validate()?;
        }
        let boundary = vec![BoundaryConditions::default(); waypoints.len()];
        Ok(TrajectoryProblem {
            waypoints,
            limits,
            boundary,
        })
    }

    /// Problem with no kinematic bounds, for pure interpolation work.
    pub fn unconstrained(waypoints: Vec<Vec<f64>>) -> Result<Self> {
        let joints = waypoints.len();
        let limits = vec![
            JointLimits {
                max_velocity: f64::INFINITY,
                max_acceleration: f64::INFINITY,
                max_jerk: f64::INFINITY,
            };
            joints
        ];
        TrajectoryProblem::new(waypoints, limits)
    }

    /// Replaces the default rest-to-rest boundary conditions.
    pub fn with_boundary(mut self, boundary: Vec<BoundaryConditions>) -> Result<Self> {
        if boundary.len() != self.waypoints.len() {
            return Err(Error::InvalidArgument(format!(
                "{} joints but {} boundary condition sets",
                self.waypoints.len(),
                boundary.len()
            )));
        }
        let flat = boundary.iter().flat_map(|b| {
            [
                b.velocity.0,
                b.velocity.1,
                b.acceleration.0,
                b.acceleration.1,
                b.jerk.0,
                b.jerk.1,
            ]
        });
        if flat.into_iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "boundary conditions must be finite".into(),
            ));
        }
        self.boundary = boundary;
        Ok(self)
    }

    pub fn joint_count(&self) -> usize {
        self.waypoints.len()
    }

    pub fn waypoint_count(&self) -> usize {
        self.waypoints[0].len()
    }

    pub fn waypoints(&self, joint: usize) -> &[f64] {
        &self.waypoints[joint]
    }

    pub fn limits(&self) -> &[JointLimits] {
        &self.limits
    }

    pub fn boundary(&self) -> &[BoundaryConditions] {
        &self.boundary
    }

    /// Hex SHA-256 of the canonical JSON encoding; ties output artifacts to
    /// the exact problem they were computed for.
    pub fn content_hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let json = serde_json::to_string(self).expect("problem serializes");
        let mut hasher = Sha256::new();
        hasher.update(json.as_bytes());
        hex::encode(hasher.finalize())
    }

    /// Digest of the waypoint matrix alone. Interval vectors computed for a
    /// path stay valid under different limits or boundary conditions, so
    /// pairing checks between stored schedules and a path use this rather
    /// than [`content_hash`](Self::content_hash).
    pub fn waypoints_hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let json = serde_json::to_string(&self.waypoints).expect("waypoints serialize");
        let mut hasher = Sha256::new();
        hasher.update(json.as_bytes());
        hex::encode(hasher.finalize())
    }
}

/// Knot indices (0-based) at which the waypoints sit, for a clamped quintic
/// over `waypoint_count + 1` intervals. The first waypoint is pinned at the
/// domain start, the last at the domain end, and interior waypoint `l`
/// (0-based) at knot `degree + l + 1` because one extra interpolation point
/// precedes it.
pub fn waypoint_knot_indices(waypoint_count: usize) -> Result<Vec<usize>> {
    if waypoint_count < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 waypoints, got {waypoint_count}"
        )));
    }
    let p = TRAJECTORY_DEGREE;
    let mut idx = Vec::with_capacity(waypoint_count);
    idx.push(p);
    for l in 1..waypoint_count - 1 {
        idx.push(p + l + 1);
    }
    idx.push(waypoint_count + p + 1);
    Ok(idx)
}

/// Coefficient rows expressing the first/last control point of the
/// velocity, acceleration and jerk curves as linear combinations of the
/// position control points. Propagates unit rows through the same
/// difference recursion used for derivative control points.
fn boundary_rows(knots: &KnotVector) -> [Vec<f64>; 6] {
    let n = knots.basis_count();
    let p = knots.degree();
    let kv = knots.values();
    let mut rows: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut r = vec![0.0; n];
            r[i] = 1.0;
            r
        })
        .collect();
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(6);
    for level in 0..3 {
        let deg = p - level;
        let k = &kv[level..kv.len() - level];
        rows = (0..rows.len() - 1)
            .map(|i| {
                let den = k[i + deg + 1] - k[i + 1];
                let scale = if den > 0.0 { deg as f64 / den } else { 0.0 };
                let mut r = vec![0.0; n];
                for c in 0..n {
                    r[c] = scale * (rows[i + 1][c] - rows[i][c]);
                }
                r
            })
            .collect();
        out.push(rows[0].clone());
        out.push(rows[rows.len() - 1].clone());
    }
    // clamped derivative curves start/end at their terminal control points,
    // so these rows impose the endpoint velocity/acceleration/jerk directly
    out.try_into().expect("exactly six rows collected")
}

fn interpolation_matrix(h: &IntervalVector, knots: &KnotVector) -> Result<DMatrix<f64>> {
    let w = h.waypoint_count();
    let n = knots.basis_count();
    debug_assert_eq!(n, w + TRAJECTORY_DEGREE + 1);
    let mut a = DMatrix::<f64>::zeros(n, n);

    let ends = boundary_rows(knots);
    for (r, row) in ends.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            a[(r, c)] = *v;
        }
    }

    let indices = waypoint_knot_indices(w)?;
    let kv = knots.values();
    let p = knots.degree();
    for (l, idx) in indices.iter().enumerate() {
        let r = 6 + l;
        if l == 0 {
            a[(r, 0)] = 1.0; // clamped curve starts at its first control point
        } else if l == w - 1 {
            a[(r, n - 1)] = 1.0; // and ends at its last
        } else {
            let t = kv[*idx];
            let span = knots.find_span(t);
            let vals = nonzero_basis(kv, p, span, t);
            for (j, v) in vals.iter().enumerate() {
                a[(r, span - p + j)] = *v;
            }
        }
    }
    Ok(a)
}

fn joint_rhs(problem: &TrajectoryProblem, joint: usize, n: usize) -> DVector<f64> {
    let bc = problem.boundary()[joint];
    let mut b = DVector::<f64>::zeros(n);
    b[0] = bc.velocity.0;
    b[1] = bc.velocity.1;
    b[2] = bc.acceleration.0;
    b[3] = bc.acceleration.1;
    b[4] = bc.jerk.0;
    b[5] = bc.jerk.1;
    for (l, w) in problem.waypoints(joint).iter().enumerate() {
        b[6 + l] = *w;
    }
    b
}

/// Full linear system `A x = b` for one joint: six boundary rows followed by
/// one passage row per waypoint. `A` depends only on the intervals.
pub fn assemble_system(
    h: &IntervalVector,
    problem: &TrajectoryProblem,
    joint: usize,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    check_problem_intervals(h, problem)?;
    if joint >= problem.joint_count() {
        return Err(Error::InvalidArgument(format!(
            "joint {joint} out of range for {} joints",
            problem.joint_count()
        )));
    }
    let knots = KnotVector::clamped_from_intervals(h, TRAJECTORY_DEGREE);
    let a = interpolation_matrix(h, &knots)?;
    let b = joint_rhs(problem, joint, knots.basis_count());
    Ok((a, b))
}

fn check_problem_intervals(h: &IntervalVector, problem: &TrajectoryProblem) -> Result<()> {
    if h.waypoint_count() != problem.waypoint_count() {
        return Err(Error::InvalidArgument(format!(
            "{} intervals serve {} waypoints, problem has {}",
            h.len(),
            h.waypoint_count(),
            problem.waypoint_count()
        )));
    }
    Ok(())
}

/// Interpolated multi-joint trajectory: one quintic curve per joint over a
/// shared clamped knot vector.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTrajectory {
    h: IntervalVector,
    curves: Vec<SplineCurve>,
}

impl JointTrajectory {
    pub fn intervals(&self) -> &IntervalVector {
        &self.h
    }

    pub fn joint_count(&self) -> usize {
        self.curves.len()
    }

    pub fn duration(&self) -> f64 {
        self.curves[0].domain().1
    }

    pub fn curve(&self, joint: usize) -> &SplineCurve {
        &self.curves[joint]
    }

    pub fn curves(&self) -> &[SplineCurve] {
        &self.curves
    }

    /// Samples position through jerk on a regular grid of period `1/rate`
    /// that always includes both endpoints (the final step may be shorter).
    pub fn sample(&self, rate: f64) -> Result<SampledTrajectory> {
        if !rate.is_finite() || rate <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "sample rate must be positive, got {rate}"
            )));
        }
        let t_end = self.duration();
        let steps = (t_end * rate).floor() as usize;
        let mut times: Vec<f64> = (0..=steps).map(|k| (k as f64 / rate).min(t_end)).collect();
        if *times.last().expect("grid is never empty") < t_end {
            times.push(t_end);
        }

        let joints = self.joint_count();
        let mut out = SampledTrajectory {
            times,
            positions: vec![Vec::new(); joints],
            velocities: vec![Vec::new(); joints],
            accelerations: vec![Vec::new(); joints],
            jerks: vec![Vec::new(); joints],
        };
        for (j, curve) in self.curves.iter().enumerate() {
            let d1 = curve.derivative()?;
            let d2 = d1.derivative()?;
            let d3 = d2.derivative()?;
            for &t in &out.times {
                out.positions[j].push(curve.value(t)?);
                out.velocities[j].push(d1.value(t)?);
                out.accelerations[j].push(d2.value(t)?);
                out.jerks[j].push(d3.value(t)?);
            }
        }
        Ok(out)
    }
}

/// Dense samples of a trajectory, one inner vector per joint.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledTrajectory {
    pub times: Vec<f64>,
    pub positions: Vec<Vec<f64>>,
    pub velocities: Vec<Vec<f64>>,
    pub accelerations: Vec<Vec<f64>>,
    pub jerks: Vec<Vec<f64>>,
}

/// Solves the interpolation system for every joint. The matrix is assembled
/// and factored once; a condition estimate above [`CONDITION_LIMIT`] yields
/// a degenerate-intervals error naming the offending vector.
pub fn solve_trajectory(
    h: &IntervalVector,
    problem: &TrajectoryProblem,
) -> Result<JointTrajectory> {
    check_problem_intervals(h, problem)?;
    let knots = KnotVector::clamped_from_intervals(h, TRAJECTORY_DEGREE);
    let a = interpolation_matrix(h, &knots)?;
    let n = knots.basis_count();

    let singular = a.clone().singular_values();
    let (s_max, s_min) = (singular.max(), singular.min());
    let condition = if s_min > 0.0 { s_max / s_min } else { f64::INFINITY };
    if !(condition <= CONDITION_LIMIT) {
        return Err(Error::DegenerateIntervals {
            intervals: h.values().to_vec(),
            condition,
            limit: CONDITION_LIMIT,
        });
    }

    let lu = a.lu();
    let mut curves = Vec::with_capacity(problem.joint_count());
    for joint in 0..problem.joint_count() {
        let b = joint_rhs(problem, joint, n);
        let x = lu.solve(&b).ok_or(Error::DegenerateIntervals {
            intervals: h.values().to_vec(),
            condition,
            limit: CONDITION_LIMIT,
        })?;
        curves.push(SplineCurve::new(knots.clone(), x.iter().copied().collect())?);
    }
    Ok(JointTrajectory { h: h.clone(), curves })
}
