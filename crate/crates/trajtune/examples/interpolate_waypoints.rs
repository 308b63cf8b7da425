//! Quintic waypoint interpolation for a two-joint arm: exact waypoint
//! passage with imposed endpoint kinematics.
//!
//! ```bash
//! cargo run --example interpolate_waypoints
//! ```

use trajtune::interpolation::{solve_trajectory, BoundaryConditions, TrajectoryProblem};
use trajtune::spline::IntervalVector;

fn main() -> trajtune::Result<()> {
    // One row per joint, one column per waypoint.
    let waypoints = vec![
        vec![0.0, 0.8, 1.5, 1.2], // shoulder
        vec![0.5, -0.3, 0.4, 0.0], // elbow
    ];
    // The shoulder hands over to a conveyor moving at 0.2 rad/s; everything
    // else is rest-to-rest.
    let boundary = vec![
        BoundaryConditions {
            velocity: (0.0, 0.2),
            ..BoundaryConditions::default()
        },
        BoundaryConditions::default(),
    ];
    let problem =
        TrajectoryProblem::unconstrained(waypoints.clone())?.with_boundary(boundary)?;

    // Interval durations are chosen here by hand; the optimizer example
    // shows how to search for them instead.
    let h = IntervalVector::new(vec![0.6, 1.0, 1.0, 0.9, 0.6])?;
    let trajectory = solve_trajectory(&h, &problem)?;
    println!("duration {} s over {} intervals", trajectory.duration(), h.len());

    // The spline passes through every waypoint exactly (up to solver
    // round-off), not merely near it. With five intervals for four
    // waypoints, the interior waypoints sit at the second and third epochs;
    // the extra first and last intervals give the solver room to satisfy
    // six boundary conditions.
    let epochs = h.cumulative();
    let waypoint_times = [epochs[0], epochs[2], epochs[3], epochs[5]];
    println!("\nwaypoint passage:");
    for (w, &t) in waypoint_times.iter().enumerate() {
        print!("  t = {t:<5.2}");
        for (j, points) in waypoints.iter().enumerate() {
            let q = trajectory.curve(j).value(t)?;
            print!("  joint {j}: {q:>8.5} (target {:>5.2})", points[w]);
        }
        println!();
    }

    println!("\nshoulder endpoint kinematics (end velocity was imposed as 0.2):");
    let t_end = trajectory.duration();
    for (label, t) in [("start", 0.0), ("end", t_end)] {
        let v = trajectory.curve(0).derivative_value(t, 1)?;
        let a = trajectory.curve(0).derivative_value(t, 2)?;
        println!("  {label:<5}  velocity {v:>9.2e}  acceleration {a:>9.2e}");
    }

    // Dense sampling for execution on a controller.
    let sampled = trajectory.sample(250.0)?;
    let peak = |series: &[Vec<f64>]| -> Vec<f64> {
        series
            .iter()
            .map(|s| s.iter().fold(0.0f64, |m, v| m.max(v.abs())))
            .collect()
    };
    println!("\n{} samples at 250 Hz", sampled.times.len());
    println!("  peak |velocity|      {:?}", peak(&sampled.velocities));
    println!("  peak |acceleration|  {:?}", peak(&sampled.accelerations));
    println!("  peak |jerk|          {:?}", peak(&sampled.jerks));
    Ok(())
}
