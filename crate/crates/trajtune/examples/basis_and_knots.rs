//! B-spline foundations: clamped knot vectors, basis functions and exact
//! derivative control points.
//!
//! ```bash
//! cargo run --example basis_and_knots
//! ```

use trajtune::spline::{
    basis, derivative_control_points, IntervalVector, KnotVector, SplineCurve,
    TRAJECTORY_DEGREE,
};

fn main() -> trajtune::Result<()> {
    // Three waypoints need four intervals; the knot vector clamps the ends
    // with degree+1 repeats so the curve starts and stops exactly on the
    // first and last control point.
    let h = IntervalVector::new(vec![0.5, 1.0, 1.0, 0.5])?;
    let knots = KnotVector::clamped_from_intervals(&h, TRAJECTORY_DEGREE);
    println!("intervals        {:?}", h.values());
    println!("knots            {:?}", knots.values());
    println!("basis functions  {}", knots.basis_count());
    println!("domain           {:?}", knots.domain());

    // The basis functions form a partition of unity everywhere inside the
    // domain, which is why the curve stays inside the convex hull of its
    // control points.
    for t in [0.0, 0.7, 1.5, 2.99, 3.0] {
        let total: f64 = (0..knots.basis_count())
            .map(|i| basis(&knots, i, t).unwrap())
            .sum();
        let active: Vec<usize> = (0..knots.basis_count())
            .filter(|&i| basis(&knots, i, t).unwrap() > 0.0)
            .collect();
        println!("t = {t:<5} sum = {total:.15}  nonzero basis {active:?}");
    }

    // Derivatives of a B-spline are B-splines of lower degree whose control
    // points are scaled differences of the originals. No numerical
    // differentiation is involved; the comparison below is only a check.
    let control: Vec<f64> = (0..knots.basis_count())
        .map(|i| (i as f64 * 0.9).sin())
        .collect();
    let curve = SplineCurve::new(knots.clone(), control.clone())?;
    let d1 = derivative_control_points(&control, &knots, 1)?;
    println!("\ncontrol points   {:>7.4?}", control);
    println!("velocity points  {:>7.4?}", d1);

    let t = 1.3;
    let exact = curve.derivative_value(t, 1)?;
    let step = 1e-6;
    let fd = (curve.value(t + step)? - curve.value(t - step)?) / (2.0 * step);
    println!("\nvelocity at t = {t}");
    println!("  exact (difference control points)  {exact:.12}");
    println!("  central finite difference          {fd:.12}");
    println!("  |error|                            {:.3e}", (exact - fd).abs());
    Ok(())
}
