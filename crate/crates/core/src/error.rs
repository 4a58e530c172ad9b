use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("invalid threshold schedule: {0}")]
    InvalidSchedule(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("probability {0} lies outside [0, 1] beyond tolerance")]
    ProbabilityOutOfRange(f64),
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("simplex stopped after {0} pivots without reaching optimality")]
    IterationLimit(usize),
    #[error("stopping rule violates feasibility by {0:e}")]
    InfeasiblePolicy(f64),
    #[error("partial sums failed the Cauchy test: {0}")]
    Diverged(String),
    #[error("coordinate ascent did not converge within {0} sweeps")]
    MaxSweeps(usize),
    #[error("threshold sequence exceeds one (log excess {0:e})")]
    LimitExceedsOne(f64),
    #[error("expected optimum is zero, ratio undefined")]
    DegenerateOpt,
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;
