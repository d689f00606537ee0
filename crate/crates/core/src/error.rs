use thiserror::Error;

use crate::ode::Trajectory;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed arguments: dimension mismatch, t outside [0, 1], empty inputs.
    #[error("invalid input: {0}")]
    Input(String),

    /// An object whose invariants no longer hold (bad schedule, non-finite weights).
    #[error("invalid state: {0}")]
    State(String),

    #[error("evaluation failed: {0}")]
    Evaluation(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("problem size {size} exceeds cap {cap}: {advice}")]
    Size {
        size: usize,
        cap: usize,
        advice: &'static str,
    },

    #[error("ODE solver did not reach t=1 within {max_steps} steps (stopped at t={t_reached})")]
    Nonconvergence {
        max_steps: usize,
        t_reached: f64,
        partial: Box<Trajectory>,
    },

    #[error("{} of the batch integrations failed (first at index {}: {})", .failures.len(), .failures[0].0, .failures[0].1)]
    Batch { failures: Vec<(usize, Error)> },

    #[error("training diverged at step {step}: loss = {loss}")]
    Training { step: usize, loss: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    /// True for failures caused by numerics rather than by malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::State(_)
                | Error::Evaluation(_)
                | Error::Nonconvergence { .. }
                | Error::Batch { .. }
                | Error::Training { .. }
        )
    }
}

pub(crate) fn check_dim(expected: usize, got: usize, what: &str) -> Result<()> {
    if expected != got {
        return Err(Error::Input(format!(
            "{what}: expected dimension {expected}, got {got}"
        )));
    }
    Ok(())
}

pub(crate) fn check_time(t: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Input(format!("time {t} outside [0, 1]")));
    }
    Ok(())
}
