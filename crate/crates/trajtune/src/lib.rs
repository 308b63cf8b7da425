//! Human-aware trajectory tuning for collaborative robot arms.
//!
//! The crate covers one loop end to end: interpolate joint waypoints with
//! quintic B-splines, search the time/jerk trade-off under kinematic limits,
//! condense the Pareto front into an ordered solution ladder, and move along
//! that ladder at run time from windowed heart-rate variability, so the robot
//! slows down when its operator shows strain and speeds back up on recovery.
//!
//! Layer by layer:
//!
//! - [`spline`]: clamped B-spline bases, knot vectors from interval
//!   durations, derivative control points and curve evaluation.
//! - [`interpolation`]: waypoint passage plus boundary conditions as a
//!   linear system per joint, producing a [`interpolation::JointTrajectory`].
//! - [`optimizer`]: NSGA-II over interval durations with constraint
//!   domination, exact jerk quadrature, hypervolume tracking and the
//!   scalarized downsampling that builds a [`optimizer::SolutionLadder`].
//! - [`adaptation`]: the hysteresis rule mapping windowed mean RR intervals
//!   to ladder index steps.
//! - [`harness`]: deterministic closed-loop session simulation, replayed or
//!   synthesized RR streams, production and error statistics.
//! - [`formats`], [`manifest`]: the file schemas (waypoints, limits, RR,
//!   ladder, timeline, report) and per-run manifests that make every command
//!   reproducible.
//! - [`cli`]: the `optimize`, `plan`, `adapt` and `simulate` subcommands on
//!   top of the above.
//!
//! Everything seeded is deterministic: same inputs, same seed, same bytes.
//! The `examples/` directory walks each layer with runnable programs.

pub mod adaptation;
pub mod cli;
pub mod error;
pub mod formats;
pub mod harness;
pub mod interpolation;
pub mod manifest;
pub mod optimizer;
pub mod spline;

pub use error::{Error, Result};
