//! Evolutionary search over interval durations: minimize execution time and
//! integrated squared jerk under kinematic limits, then condense the front
//! into a pace ladder.
//!
//! ```bash
//! cargo run --example optimize_time_jerk
//! ```

use trajtune::interpolation::{solve_trajectory, JointLimits, TrajectoryProblem};
use trajtune::optimizer::{constraint_margins, downsample, nsga2, Nsga2Config};

fn main() -> trajtune::Result<()> {
    let problem = TrajectoryProblem::new(
        vec![
            vec![0.0, 0.8, 1.5, 1.2],
            vec![0.5, -0.3, 0.4, 0.0],
        ],
        vec![
            JointLimits::new(1.8, 3.5, 25.0)?,
            JointLimits::new(1.5, 3.0, 20.0)?,
        ],
    )?;

    // A deliberately small search so the example finishes in seconds; the
    // command-line tool defaults to 90 x 200.
    let config = Nsga2Config {
        population_size: 48,
        generations: 60,
        seed: 17,
        ..Nsga2Config::default()
    };
    let run = nsga2(&problem, &config)?;

    println!("generation telemetry (every 10th):");
    for stats in run.history.iter().filter(|s| s.generation % 10 == 0) {
        println!(
            "  gen {:>3}  front {:>3}  best violation {:>9.3e}  hypervolume {}",
            stats.generation,
            stats.front_size,
            stats.best_violation,
            stats
                .hypervolume
                .map_or_else(|| "n/a".into(), |h| format!("{h:.4}")),
        );
    }

    let mut front = run.front.clone();
    front.sort_by(|a, b| a.f_time.total_cmp(&b.f_time));
    println!("\nfront: {} non-dominated interval vectors", front.len());
    let fastest = front.first().expect("front is never empty");
    let smoothest = front.last().expect("front is never empty");
    println!(
        "  fastest    time {:>8.4}  jerk {:>12.4}",
        fastest.f_time, fastest.f_jerk
    );
    println!(
        "  smoothest  time {:>8.4}  jerk {:>12.4}",
        smoothest.f_time, smoothest.f_jerk
    );

    // Every front member satisfies the limits with certainty, not just at
    // sample points: the check bounds each derivative by its spline control
    // points. Show the margins of the fastest solution.
    let trajectory = solve_trajectory(&fastest.intervals, &problem)?;
    let margins = constraint_margins(&trajectory, problem.limits());
    println!("\nfastest solution margins (peak bound vs limit):");
    for (j, joint) in margins.joints.iter().enumerate() {
        println!(
            "  joint {j}  velocity {:>6.4}/{:<4}  acceleration {:>6.4}/{:<4}  jerk {:>8.4}/{:<4}",
            joint.velocity.max_abs,
            joint.velocity.bound,
            joint.acceleration.max_abs,
            joint.acceleration.bound,
            joint.jerk.max_abs,
            joint.jerk.bound,
        );
    }

    // A 7-rung ladder spanning the trade-off, slowest first.
    let ladder = downsample(&run.front, 7)?;
    println!("\npace ladder:");
    for (i, e) in ladder.entries().iter().enumerate() {
        println!(
            "  rung {:>2}  duration {:>8.4} s  jerk {:>12.4}",
            i + 1,
            e.intervals.total_duration(),
            e.f_jerk
        );
    }
    Ok(())
}
