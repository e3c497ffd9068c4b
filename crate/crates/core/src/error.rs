use thiserror::Error;

/// Errors produced by the simulator.
#[derive(Debug, Error)]
pub enum SimError {
    #[error("qubit count {requested} outside supported range 1..={max}")]
    Capacity { requested: usize, max: usize },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("matrix is not unitary (max |U^dag U - 1| = {max_deviation:e})")]
    NotUnitary { max_deviation: f64 },

    #[error("dense propagator did not converge at {slices} slices (residual {residual:e})")]
    NoConvergence { slices: usize, residual: f64 },

    #[error("step sweep did not converge: final Q still moved by {shift:e} at multiplier {multiplier}")]
    StepsNotConverged { multiplier: usize, shift: f64 },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unknown {kind} name(s): {}", names.join(", "))]
    UnknownName { kind: &'static str, names: Vec<String> },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = SimError> = std::result::Result<T, E>;

pub(crate) fn argument(msg: impl Into<String>) -> SimError {
    SimError::Argument(msg.into())
}
