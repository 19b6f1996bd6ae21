use std::io;

/// Errors shared across the toolkit. Variants carry enough context to
/// diagnose a failure without re-running the pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Signal content is unusable: non-finite samples, too few of them,
    /// or a non-positive sample rate.
    #[error("invalid signal: {0}")]
    InvalidSignal(String),

    /// Array dimensions disagree with what the operation requires.
    #[error("shape mismatch: {0}")]
    ShapeError(String),

    /// Window parameters are unusable for the requested transform.
    #[error("invalid window: {0}")]
    InvalidWindow(String),

    /// Coarse-grid shape is incompatible with the mask target.
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    /// A scalar or configuration field is out of its documented range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A frequency subset or class label does not match the component set.
    #[error("invalid subset: {0}")]
    InvalidSubset(String),

    /// WAV file is well-formed but uses an encoding outside the supported
    /// profile (16-bit PCM, mono).
    #[error("unsupported wav: {0}")]
    UnsupportedWav(String),

    /// WAV file violates the RIFF structure.
    #[error("corrupt wav: {0}")]
    CorruptWav(String),

    /// Audio clip exceeds the fixed analysis length.
    #[error("signal too long: {len} samples exceeds limit {max}")]
    TooLong { len: usize, max: usize },

    /// Training produced a non-finite loss.
    #[error("training diverged at epoch {epoch}")]
    TrainingDiverged { epoch: usize },

    /// External model endpoint misbehaved: process, protocol, or timeout.
    #[error("endpoint error: {0}")]
    EndpointError(String),

    /// Model query failed while estimating relevance.
    #[error("explain failed at mask {mask_index}: {source}")]
    ExplainFailed {
        mask_index: usize,
        source: Box<Error>,
    },

    /// Exact enumeration requested over more positions than is tractable.
    #[error("cannot enumerate {len} positions exactly (limit {max})")]
    TooLargeToEnumerate { len: usize, max: usize },

    /// Metric has no defined value for this input (empty ground truth,
    /// all-zero relevance, ...).
    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    /// On-disk artifact does not parse as the expected format.
    #[error("invalid format: {0}")]
    InvalidFormat(String),

    #[error("io error: {0}")]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid_signal(msg: impl Into<String>) -> Self {
        Error::InvalidSignal(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::ShapeError(msg.into())
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
