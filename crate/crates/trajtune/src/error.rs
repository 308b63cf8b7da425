use crate::harness::SessionReport;

/// Errors produced by trajectory construction, optimization, adaptation and
/// the session harness.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A caller-supplied value violates a precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The interpolation system for the given intervals is numerically
    /// unusable (near-zero intervals collapse matrix rows).
    #[error(
        "degenerate interval vector {intervals:?}: interpolation matrix condition \
         {condition:.3e} exceeds {limit:.1e}"
    )]
    DegenerateIntervals {
        intervals: Vec<f64>,
        condition: f64,
        limit: f64,
    },

    /// The evolutionary search finished without a single feasible solution.
    #[error("optimization ended with no feasible solution (best constraint violation {best_violation:.6e})")]
    OptimizationFailed { best_violation: f64 },

    /// A ladder index outside `1..=len` was requested.
    #[error("ladder index {index} out of range 1..={size}")]
    IndexOutOfRange { index: usize, size: usize },

    /// The replayed RR stream ended before the simulated session did.
    /// Carries the statistics accumulated up to the point of truncation.
    #[error("RR stream exhausted at t = {at_s} s before session end")]
    TruncatedSession {
        at_s: f64,
        partial: Box<SessionReport>,
    },

    /// Errors were logged but no cycle completed, so errors-per-cycle has no
    /// defined value.
    #[error("undefined error rate: {errors} errors with zero completed cycles")]
    UndefinedRate { errors: u64 },

    /// An input file exists but its contents do not match the expected shape.
    #[error("malformed input {path}: {message}")]
    Parse { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the command-line tool: 2 for bad input,
    /// 3 for well-formed problems that turn out infeasible or degenerate.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_)
            | Error::IndexOutOfRange { .. }
            | Error::Parse { .. }
            | Error::Io(_) => 2,
            Error::DegenerateIntervals { .. }
            | Error::OptimizationFailed { .. }
            | Error::TruncatedSession { .. }
            | Error::UndefinedRate { .. } => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
