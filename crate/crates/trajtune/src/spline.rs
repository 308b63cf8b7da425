//! Clamped B-spline primitives: knot vectors, basis functions, derivative
//! control points and scalar curve evaluation.
//!
//! Trajectories use quintic splines so that position, velocity, acceleration
//! and jerk are all continuous across the interior knots.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Spline degree used for joint trajectories throughout the crate.
pub const TRAJECTORY_DEGREE: usize = 5;

/// Strictly positive durations of the sub-intervals between consecutive
/// interpolation points. A trajectory through `W` waypoints has `W + 1`
/// intervals: the two extra interpolation points sit just inside the
/// endpoints and are determined by the boundary conditions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct IntervalVector {
    h: Vec<f64>,
}

impl IntervalVector {
    /// Validates that there are at least three intervals (two waypoints)
    /// and that every interval is finite and strictly positive.
    pub fn new(h: Vec<f64>) -> Result<Self> {
        if h.len() < 3 {
            return Err(Error::InvalidArgument(format!(
                "need at least 3 intervals (2 waypoints), got {}",
                h.len()
            )));
        }
        if let Some(bad) = h.iter().find(|v| !v.is_finite() || **v <= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "intervals must be finite and strictly positive, got {bad}"
            )));
        }
        Ok(IntervalVector { h })
    }

    pub fn values(&self) -> &[f64] {
        &self.h
    }

    pub fn len(&self) -> usize {
        self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of waypoints the vector spans: one fewer than the interval count.
    pub fn waypoint_count(&self) -> usize {
        self.h.len() - 1
    }

    /// Total duration, summed left to right.
    pub fn total_duration(&self) -> f64 {
        self.h.iter().sum()
    }

    /// Interpolation-point epochs `[0, s_1, .., s_{n}]` obtained by a running
    /// sum of the intervals; the last entry equals `total_duration()`.
    pub fn cumulative(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.h.len() + 1);
        let mut acc = 0.0;
        out.push(acc);
        for v in &self.h {
            acc += v;
            out.push(acc);
        }
        out
    }
}

impl TryFrom<Vec<f64>> for IntervalVector {
    type Error = Error;

    fn try_from(h: Vec<f64>) -> Result<Self> {
        IntervalVector::new(h)
    }
}

impl From<IntervalVector> for Vec<f64> {
    fn from(iv: IntervalVector) -> Vec<f64> {
        iv.h
    }
}

/// Non-decreasing knot sequence together with the spline degree it serves.
#[derive(Debug, Clone, PartialEq)]
pub struct KnotVector {
    knots: Vec<f64>,
    degree: usize,
}

impl KnotVector {
    /// Accepts any finite non-decreasing sequence long enough to carry at
    /// least one degree-`degree` basis function.
    pub fn new(knots: Vec<f64>, degree: usize) -> Result<Self> {
        if knots.len() < degree + 2 {
            return Err(Error::InvalidArgument(format!(
                "degree {degree} needs at least {} knots, got {}",
                degree + 2,
                knots.len()
            )));
        }
        if knots.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("knots must be finite".into()));
        }
        if knots.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidArgument(
                "knots must be non-decreasing".into(),
            ));
        }
        Ok(KnotVector { knots, degree })
    }

    /// Clamped knot vector over the interpolation-point epochs of `h`:
    /// `degree + 1` copies of 0, the interior epochs, then `degree + 1`
    /// copies of the total duration.
    pub fn clamped_from_intervals(h: &IntervalVector, degree: usize) -> Self {
        let epochs = h.cumulative();
        let t_end = *epochs.last().expect("cumulative() is never empty");
        let mut knots = Vec::with_capacity(epochs.len() + 2 * degree);
        knots.extend(std::iter::repeat(0.0).take(degree));
        knots.extend_from_slice(&epochs);
        knots.extend(std::iter::repeat(t_end).take(degree));
        KnotVector { knots, degree }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.knots.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn values(&self) -> &[f64] {
        &self.knots
    }

    /// Number of basis functions (= control points) the vector supports.
    pub fn basis_count(&self) -> usize {
        self.knots.len() - self.degree - 1
    }

    /// Parameter range on which a curve over this vector is defined.
    pub fn domain(&self) -> (f64, f64) {
        (
            self.knots[self.degree],
            self.knots[self.knots.len() - 1 - self.degree],
        )
    }

    /// Index `i` of the half-open span `[knot_i, knot_{i+1})` containing `t`,
    /// clamped so the final domain point maps to the last non-empty span.
    pub fn find_span(&self, t: f64) -> usize {
        let p = self.degree;
        let last = self.basis_count() - 1;
        if t >= self.knots[last + 1] {
            return last;
        }
        if t <= self.knots[p] {
            return p;
        }
        let (mut lo, mut hi) = (p, last + 1);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if t < self.knots[mid] {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        lo
    }

    /// Knot vector of the derivative curve: one knot dropped at each end,
    /// degree reduced by one.
    pub fn trimmed(&self) -> Result<Self> {
        if self.degree == 0 {
            return Err(Error::InvalidArgument(
                "degree-0 spline has no derivative knot vector".into(),
            ));
        }
        Ok(KnotVector {
            knots: self.knots[1..self.knots.len() - 1].to_vec(),
            degree: self.degree - 1,
        })
    }
}

/// Single basis function `N_{index,degree}` evaluated at `t` by the Cox-de
/// Boor recursion with the 0/0 := 0 convention. At the terminal knot the
/// value is the limit from the left, so the basis still sums to one there.
pub fn basis(knots: &KnotVector, index: usize, t: f64) -> Result<f64> {
    let p = knots.degree();
    let k = knots.values();
    let count = knots.basis_count();
    if index >= count {
        return Err(Error::InvalidArgument(format!(
            "basis index {index} out of range for {count} basis functions"
        )));
    }
    let (lo, hi) = (k[0], k[k.len() - 1]);
    if !t.is_finite() || t < lo || t > hi {
        return Err(Error::InvalidArgument(format!(
            "t = {t} outside knot range [{lo}, {hi}]"
        )));
    }

    let mut vals = vec![0.0_f64; p + 1];
    for (i, v) in vals.iter_mut().enumerate() {
        let a = k[index + i];
        let b = k[index + i + 1];
        let inside = (a <= t && t < b) || (t == hi && b == hi && a < b);
        *v = if inside { 1.0 } else { 0.0 };
    }
    for q in 1..=p {
        for i in 0..=(p - q) {
            let left_den = k[index + i + q] - k[index + i];
            let right_den = k[index + i + q + 1] - k[index + i + 1];
            let mut acc = 0.0;
            if left_den > 0.0 {
                acc += (t - k[index + i]) / left_den * vals[i];
            }
            if right_den > 0.0 {
                acc += (k[index + i + q + 1] - t) / right_den * vals[i + 1];
            }
            vals[i] = acc;
        }
    }
    Ok(vals[0])
}

/// All `degree + 1` basis values that are non-zero on `span`, returned in
/// order of basis index `span - degree ..= span`. Triangular scheme that
/// never forms a 0/0 quotient.
pub(crate) fn nonzero_basis(knots: &[f64], degree: usize, span: usize, t: f64) -> Vec<f64> {
    let mut n = vec![0.0_f64; degree + 1];
    let mut left = vec![0.0_f64; degree + 1];
    let mut right = vec![0.0_f64; degree + 1];
    n[0] = 1.0;
    for j in 1..=degree {
        left[j] = t - knots[span + 1 - j];
        right[j] = knots[span + j] - t;
        let mut saved = 0.0;
        for r in 0..j {
            let den = right[r + 1] + left[j - r];
            debug_assert!(den > 0.0, "empty span passed to nonzero_basis");
            let tmp = n[r] / den;
            n[r] = saved + right[r + 1] * tmp;
            saved = left[j - r] * tmp;
        }
        n[j] = saved;
    }
    n
}

/// Control points of the `order`-th derivative curve. Each step divides
/// scaled first differences by a knot span of the current degree; a zero
/// span contributes a zero control point rather than dividing by zero.
pub fn derivative_control_points(
    control_points: &[f64],
    knots: &KnotVector,
    order: usize,
) -> Result<Vec<f64>> {
    let p = knots.degree();
    if order == 0 || order > p {
        return Err(Error::InvalidArgument(format!(
            "derivative order must be in 1..={p}, got {order}"
        )));
    }
    if control_points.len() != knots.basis_count() {
        return Err(Error::InvalidArgument(format!(
            "expected {} control points, got {}",
            knots.basis_count(),
            control_points.len()
        )));
    }
    let all = knots.values();
    let mut cur = control_points.to_vec();
    for level in 0..order {
        let deg = p - level;
        let k = &all[level..all.len() - level];
        cur = (0..cur.len() - 1)
            .map(|i| {
                let den = k[i + deg + 1] - k[i + 1];
                if den > 0.0 {
                    deg as f64 * (cur[i + 1] - cur[i]) / den
                } else {
                    0.0
                }
            })
            .collect();
    }
    Ok(cur)
}

/// Scalar spline curve: a knot vector plus one control point per basis
/// function.
#[derive(Debug, Clone, PartialEq)]
pub struct SplineCurve {
    knots: KnotVector,
    control_points: Vec<f64>,
}

impl SplineCurve {
    pub fn new(knots: KnotVector, control_points: Vec<f64>) -> Result<Self> {
        if control_points.len() != knots.basis_count() {
            return Err(Error::InvalidArgument(format!(
                "knot vector supports {} control points, got {}",
                knots.basis_count(),
                control_points.len()
            )));
        }
        if control_points.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "control points must be finite".into(),
            ));
        }
        Ok(SplineCurve {
            knots,
            control_points,
        })
    }

    pub fn degree(&self) -> usize {
        self.knots.degree()
    }

    pub fn knots(&self) -> &KnotVector {
        &self.knots
    }

    pub fn control_points(&self) -> &[f64] {
        &self.control_points
    }

    pub fn domain(&self) -> (f64, f64) {
        self.knots.domain()
    }

    /// Curve value at `t`; the terminal instant evaluates as the limit from
    /// the left.
    pub fn value(&self, t: f64) -> Result<f64> {
        let (lo, hi) = self.domain();
        if !t.is_finite() || t < lo || t > hi {
            return Err(Error::InvalidArgument(format!(
                "t = {t} outside curve domain [{lo}, {hi}]"
            )));
        }
        let p = self.degree();
        let span = self.knots.find_span(t);
        let vals = nonzero_basis(self.knots.values(), p, span, t);
        Ok(vals
            .iter()
            .zip(&self.control_points[span - p..=span])
            .map(|(b, c)| b * c)
            .sum())
    }

    /// First-derivative curve: degree drops by one, knots lose one entry at
    /// each end.
    pub fn derivative(&self) -> Result<SplineCurve> {
        let cps = derivative_control_points(&self.control_points, &self.knots, 1)?;
        SplineCurve::new(self.knots.trimmed()?, cps)
    }

    /// Value of the `order`-th derivative at `t` (order 0 is the curve
    /// itself).
    pub fn derivative_value(&self, t: f64, order: usize) -> Result<f64> {
        if order == 0 {
            return self.value(t);
        }
        if order > self.degree() {
            return Err(Error::InvalidArgument(format!(
                "derivative order {order} exceeds degree {}",
                self.degree()
            )));
        }
        let mut cur = self.derivative()?;
        for _ in 1..order {
            cur = cur.derivative()?;
        }
        cur.value(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn intervals(h: &[f64]) -> IntervalVector {
        IntervalVector::new(h.to_vec()).unwrap()
    }

    // Small LCG so test fixtures are reproducible without pulling an RNG in.
    fn pseudo(seq: &mut u64) -> f64 {
        *seq = seq.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((*seq >> 11) as f64) / ((1u64 << 53) as f64)
    }

    fn random_quintic(seed: u64, h: &[f64]) -> SplineCurve {
        let iv = intervals(h);
        let knots = KnotVector::clamped_from_intervals(&iv, TRAJECTORY_DEGREE);
        let mut s = seed;
        let cps: Vec<f64> = (0..knots.basis_count())
            .map(|_| pseudo(&mut s) * 4.0 - 2.0)
            .collect();
        SplineCurve::new(knots, cps).unwrap()
    }

    #[test]
    fn degree_zero_basis_is_span_indicator() {
        let kv = KnotVector::new(vec![0.0, 1.0, 2.0, 3.0], 0).unwrap();
        assert_eq!(basis(&kv, 1, 1.5).unwrap(), 1.0);
        assert_eq!(basis(&kv, 0, 1.5).unwrap(), 0.0);
        assert_eq!(basis(&kv, 2, 1.5).unwrap(), 0.0);
        // terminal knot: only the last non-empty span switches on
        assert_eq!(basis(&kv, 2, 3.0).unwrap(), 1.0);
        assert_eq!(basis(&kv, 1, 3.0).unwrap(), 0.0);
    }

    #[test]
    fn quadratic_basis_on_uniform_knots() {
        let kv = KnotVector::new((0..=6).map(f64::from).collect(), 2).unwrap();
        assert_eq!(basis(&kv, 0, 1.0).unwrap(), 0.5);
        // hand expansion: 0.75 * N_{0,1}(1.5) + 0.75 * N_{1,1}(1.5) = 0.75
        assert_eq!(basis(&kv, 0, 1.5).unwrap(), 0.75);
    }

    #[test]
    fn basis_rejects_out_of_range_queries() {
        let kv = KnotVector::new(vec![0.0, 1.0, 2.0, 3.0], 0).unwrap();
        assert!(basis(&kv, 3, 1.0).is_err());
        assert!(basis(&kv, 0, -0.1).is_err());
        assert!(basis(&kv, 0, 3.1).is_err());
    }

    #[test]
    fn clamped_knots_match_hand_layout() {
        let kv = KnotVector::clamped_from_intervals(&intervals(&[1.0; 4]), TRAJECTORY_DEGREE);
        let expected = [
            0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 2.0, 3.0, 4.0, 4.0, 4.0, 4.0, 4.0, 4.0,
        ];
        assert_eq!(kv.values(), expected);
        assert_eq!(kv.basis_count(), 3 + 6);

        let kv = KnotVector::clamped_from_intervals(&intervals(&[0.5, 1.0, 0.5]), TRAJECTORY_DEGREE);
        let expected = [
            0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.5, 1.5, 2.0, 2.0, 2.0, 2.0, 2.0, 2.0,
        ];
        assert_eq!(kv.values(), expected);
    }

    #[test]
    fn terminal_knot_equals_interval_sum() {
        let h = [0.37, 1.21, 0.054, 2.5, 0.61];
        let iv = intervals(&h);
        let kv = KnotVector::clamped_from_intervals(&iv, TRAJECTORY_DEGREE);
        assert_eq!(*kv.values().last().unwrap(), iv.total_duration());
        assert_eq!(kv.domain().1, iv.total_duration());
    }

    #[test]
    fn partition_of_unity_and_nonnegativity() {
        let iv = intervals(&[0.3, 1.7, 0.9, 0.2, 1.1]);
        let kv = KnotVector::clamped_from_intervals(&iv, TRAJECTORY_DEGREE);
        let t_end = kv.domain().1;
        for step in 0..=1000 {
            let t = t_end * step as f64 / 1000.0;
            let mut sum = 0.0;
            for i in 0..kv.basis_count() {
                let v = basis(&kv, i, t).unwrap();
                assert!(v >= 0.0, "negative basis value {v} at t = {t}");
                sum += v;
            }
            assert!((sum - 1.0).abs() <= 1e-12, "sum {sum} at t = {t}");
        }
    }

    #[test]
    fn basis_vanishes_outside_local_support() {
        let kv = KnotVector::clamped_from_intervals(&intervals(&[1.0; 6]), TRAJECTORY_DEGREE);
        let k = kv.values();
        for i in 0..kv.basis_count() {
            for step in 0..=600 {
                let t = 6.0 * step as f64 / 600.0;
                if t < k[i] || t > k[i + TRAJECTORY_DEGREE + 1] {
                    assert_eq!(basis(&kv, i, t).unwrap(), 0.0);
                }
            }
        }
    }

    #[test]
    fn span_eval_matches_basis_sum() {
        let curve = random_quintic(7, &[0.4, 1.3, 0.8, 0.6]);
        let (_, hi) = curve.domain();
        for step in 0..=500 {
            let t = hi * step as f64 / 500.0;
            let direct: f64 = (0..curve.control_points().len())
                .map(|i| basis(curve.knots(), i, t).unwrap() * curve.control_points()[i])
                .sum();
            let via_span = curve.value(t).unwrap();
            assert!(
                (direct - via_span).abs() <= 1e-12,
                "t = {t}: {direct} vs {via_span}"
            );
        }
    }

    #[test]
    fn endpoints_reproduce_first_and_last_control_point() {
        let curve = random_quintic(21, &[0.9, 0.2, 1.4, 0.5, 0.7]);
        let (lo, hi) = curve.domain();
        let cps = curve.control_points();
        assert!((curve.value(lo).unwrap() - cps[0]).abs() <= 1e-12);
        assert!((curve.value(hi).unwrap() - cps[cps.len() - 1]).abs() <= 1e-12);
    }

    #[test]
    fn derivative_of_constant_curve_is_zero() {
        let iv = intervals(&[1.0, 2.0, 1.5]);
        let knots = KnotVector::clamped_from_intervals(&iv, TRAJECTORY_DEGREE);
        let cps = vec![3.25; knots.basis_count()];
        let d = derivative_control_points(&cps, &knots, 1).unwrap();
        assert!(d.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn repeated_first_order_equals_single_higher_order() {
        let iv = intervals(&[0.6, 1.1, 0.35, 0.9]);
        let knots = KnotVector::clamped_from_intervals(&iv, TRAJECTORY_DEGREE);
        let mut s = 99u64;
        let cps: Vec<f64> = (0..knots.basis_count())
            .map(|_| pseudo(&mut s) * 10.0 - 5.0)
            .collect();

        let once = derivative_control_points(&cps, &knots, 1).unwrap();
        let twice = derivative_control_points(&once, &knots.trimmed().unwrap(), 1).unwrap();
        let direct = derivative_control_points(&cps, &knots, 2).unwrap();
        assert_eq!(twice, direct);

        let thrice = derivative_control_points(&twice, &knots.trimmed().unwrap().trimmed().unwrap(), 1).unwrap();
        assert_eq!(thrice, derivative_control_points(&cps, &knots, 3).unwrap());
    }

    #[test]
    fn first_derivative_matches_central_differences() {
        let curve = random_quintic(3, &[0.8, 1.2, 0.5, 1.0]);
        let (lo, hi) = curve.domain();
        let d1 = curve.derivative().unwrap();
        let eps = 1e-6;
        for step in 1..100 {
            let t = lo + (hi - lo) * step as f64 / 100.0;
            let (a, b) = ((t - eps).max(lo), (t + eps).min(hi));
            let fd = (curve.value(b).unwrap() - curve.value(a).unwrap()) / (b - a);
            let an = d1.value(t).unwrap();
            assert!(
                (fd - an).abs() <= 1e-5 * (1.0 + an.abs()),
                "t = {t}: fd {fd} vs analytic {an}"
            );
        }
    }

    #[test]
    fn third_derivative_matches_finite_differences() {
        let curve = random_quintic(11, &[1.0, 0.7, 1.3, 0.9]);
        let (lo, hi) = curve.domain();
        let eps = 1e-3;
        for step in 5..95 {
            let t = lo + (hi - lo) * step as f64 / 100.0;
            // five-point stencil for the third derivative
            let f = |x: f64| curve.value(x).unwrap();
            let fd = (-f(t - 2.0 * eps) + 2.0 * f(t - eps) - 2.0 * f(t + eps)
                + f(t + 2.0 * eps))
                / (2.0 * eps * eps * eps);
            let an = curve.derivative_value(t, 3).unwrap();
            assert!(
                (fd - an).abs() <= 1e-4 * (1.0 + an.abs()),
                "t = {t}: fd {fd} vs analytic {an}"
            );
        }
    }

    #[test]
    fn derivatives_are_continuous_at_interior_knots() {
        let curve = random_quintic(17, &[0.45, 1.6, 0.3, 0.8, 1.2]);
        let epochs = intervals(&[0.45, 1.6, 0.3, 0.8, 1.2]).cumulative();
        let eps = 1e-9;
        for knot in &epochs[1..epochs.len() - 1] {
            for order in 0..=4 {
                let left = curve.derivative_value(knot - eps, order).unwrap();
                let right = curve.derivative_value(knot + eps, order).unwrap();
                let scale = 1.0 + left.abs().max(right.abs());
                assert!(
                    (left - right).abs() <= 1e-5 * scale,
                    "order {order} jump at knot {knot}: {left} vs {right}"
                );
            }
        }
    }

    #[test]
    fn interval_vector_validation() {
        assert!(IntervalVector::new(vec![1.0, 1.0]).is_err());
        assert!(IntervalVector::new(vec![1.0, 0.0, 1.0]).is_err());
        assert!(IntervalVector::new(vec![1.0, -0.5, 1.0]).is_err());
        assert!(IntervalVector::new(vec![1.0, f64::NAN, 1.0]).is_err());
        assert!(IntervalVector::new(vec![0.2, 0.3, 0.4]).is_ok());
    }

    #[test]
    fn knot_vector_validation() {
        assert!(KnotVector::new(vec![0.0, 1.0, 0.5, 2.0], 1).is_err());
        assert!(KnotVector::new(vec![0.0, 1.0], 1).is_err());
        assert!(KnotVector::new(vec![0.0, 0.0, 1.0, 1.0], 1).is_ok());
    }

    proptest! {
        #[test]
        fn prop_partition_of_unity(
            h in proptest::collection::vec(0.05f64..2.0, 3..8),
            frac in 0.0f64..=1.0,
        ) {
            let iv = IntervalVector::new(h).unwrap();
            let kv = KnotVector::clamped_from_intervals(&iv, TRAJECTORY_DEGREE);
            let t = iv.total_duration() * frac;
            let sum: f64 = (0..kv.basis_count())
                .map(|i| basis(&kv, i, t).unwrap())
                .sum();
            prop_assert!((sum - 1.0).abs() <= 1e-10);
        }

        #[test]
        fn prop_curve_stays_in_control_point_hull(
            h in proptest::collection::vec(0.05f64..2.0, 3..8),
            seed in 0u64..1000,
            frac in 0.0f64..=1.0,
        ) {
            let iv = IntervalVector::new(h.clone()).unwrap();
            let kv = KnotVector::clamped_from_intervals(&iv, TRAJECTORY_DEGREE);
            let mut s = seed.wrapping_mul(2654435761).wrapping_add(1);
            let cps: Vec<f64> = (0..kv.basis_count())
                .map(|_| pseudo(&mut s) * 6.0 - 3.0)
                .collect();
            let lo = cps.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = cps.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let curve = SplineCurve::new(kv, cps).unwrap();
            let v = curve.value(iv.total_duration() * frac).unwrap();
            prop_assert!(v >= lo - 1e-9 && v <= hi + 1e-9, "{v} outside [{lo}, {hi}]");
        }
    }
}
