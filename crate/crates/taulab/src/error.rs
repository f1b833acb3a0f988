use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("non-finite activity in neuron {neuron}")]
    NonFinite { neuron: usize },

    #[error("non-finite activity in neuron {neuron} at step {step}")]
    NonFiniteAtStep { neuron: usize, step: usize },

    #[error("readout head index {index} out of range (network has {count} heads)")]
    InvalidHead { index: usize, count: usize },

    #[error("empty input sequence")]
    EmptyInput,

    #[error("empty sequence-length range")]
    EmptyLenRange,

    #[error("training diverged (non-finite loss) at epoch {epoch}, batch {batch}")]
    Diverged { epoch: u64, batch: u64 },

    #[error("zero-variance activity trace (dead neuron)")]
    ZeroVariance,

    #[error("autocorrelation curve too short: {lags} usable lags, need at least {min}")]
    CurveTooShort { lags: usize, min: usize },

    #[error("population statistics require at least {min} live neurons, found {live}")]
    TooFewLiveNeurons { live: usize, min: usize },

    #[error("baseline accuracy {acc:.4} too close to chance for relative accuracy")]
    BaseAccuracyTooLow { acc: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
