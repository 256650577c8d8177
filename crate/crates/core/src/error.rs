//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Incompatible dimensions, malformed parameters or invalid
    /// configuration values.
    #[error("configuration error: {0}")]
    Config(String),

    /// A derivative or state became non-finite during integration.
    #[error("integration failed at t = {t} (step size {step_size}): {reason}")]
    Integration {
        t: f64,
        step_size: f64,
        reason: String,
    },

    /// The adaptive solver exhausted its step budget.
    #[error("step limit exceeded: {max_steps} steps, stalled at t = {t}")]
    StepLimit { max_steps: usize, t: f64 },

    /// A loss or objective evaluated to NaN/Inf.
    #[error("non-finite value in {context}{}", at.map(|i| format!(" (index {i})")).unwrap_or_default())]
    NonFinite { context: String, at: Option<usize> },

    /// The pre-training gradient self-test exceeded its tolerance.
    #[error("gradient self-test failed: relative error {rel_err:e} exceeds {tolerance:e}")]
    GradientCheck { rel_err: f64, tolerance: f64 },

    /// No frames survived voice activity detection.
    #[error("no active frames: {0}")]
    NoActiveFrames(String),

    /// The requested attribute cannot be realized by the segmentation.
    #[error("infeasible attribute: {0}")]
    InfeasibleAttribute(String),

    /// Undefined statistic (constant input, too few samples).
    #[error("undefined statistic: {0}")]
    UndefinedStatistic(String),

    /// Malformed file contents.
    #[error("parse error{}: {reason}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Parse { line: Option<usize>, reason: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn parse(line: Option<usize>, reason: impl Into<String>) -> Self {
        Error::Parse {
            line,
            reason: reason.into(),
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
