//! Crate-wide error type.
//!
//! One enum covers all modules: the pipeline stages interlock (the experiment
//! harness can surface any of them), and a single type keeps error handling
//! at call sites uniform. [`Error::is_config`] / [`Error::is_data`] classify
//! variants for process exit codes.

use crate::lfp::TaskLabel;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    // ---- recordings and windows ----
    /// A hemisphere lacks the consecutive contacts needed for bipolar pairs.
    #[error("hemisphere {hemisphere} has no consecutive contact pair (contacts present: {present:?})")]
    MissingContact {
        hemisphere: &'static str,
        present: Vec<u8>,
    },
    /// An event's ±1 s window does not fit inside the recording.
    #[error("event at sample {onset} ({label}) needs [{start}, {end}) but signal has {len} samples")]
    WindowOutOfBounds {
        onset: usize,
        label: TaskLabel,
        start: i64,
        end: i64,
        len: usize,
    },
    /// Not enough event-free signal to place the requested segment count.
    #[error("cannot place {requested} random segments: {admissible} admissible center(s) outside guard zones")]
    InsufficientQuietSignal {
        requested: usize,
        admissible: usize,
    },
    /// A synthetic-recording spec fails validation.
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),

    // ---- container IO ----
    /// Malformed recording container or sidecar.
    #[error("parse error at byte {offset}: {reason}")]
    ParseError { offset: u64, reason: String },
    /// Container version not understood by this build.
    #[error("unsupported container version {found} (expected {expected})")]
    SchemaMismatch { found: u16, expected: u16 },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    // ---- spectrogram / kernels (shared) ----
    /// Invalid wavelet or kernel parameters.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    // ---- filtering / decimation / PCA ----
    /// Filter cutoff outside (0, rate/2).
    #[error("cutoff {cutoff} Hz invalid for design rate {rate} Hz")]
    InvalidCutoff { cutoff: f64, rate: f64 },
    /// Decimation target above the source rate.
    #[error("target rate {target} Hz exceeds source rate {rate} Hz")]
    UpsampleRequested { target: f64, rate: f64 },
    /// PCA input carries no variance.
    #[error("degenerate data: total variance is zero")]
    DegenerateData,
    /// Vector length incompatible with a basis or model.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    // ---- SVM / MKL ----
    /// Binary training set with only one label sign.
    #[error("training labels contain a single class")]
    SingleClassInput,
    /// Optimizer hit its iteration cap before meeting tolerances.
    #[error("{solver} did not converge in {iterations} iterations (objective {objective:.6e}, gap {gap:.3e})")]
    NonConvergence {
        solver: &'static str,
        iterations: u64,
        objective: f64,
        gap: f64,
    },
    /// Kernel matrices (or rows) of inconsistent sizes.
    #[error("size mismatch: {0}")]
    SizeMismatch(String),
    /// A bank kernel is numerically zero.
    #[error("kernel {index} in the bank is numerically zero")]
    DegenerateKernel { index: usize },
    /// Bank description and supplied matrices/rows disagree.
    #[error("kernel bank mismatch: {0}")]
    BankMismatch(String),

    // ---- experiment ----
    /// A class has fewer samples than the fold count.
    #[error("class {label} has {count} samples, fewer than {folds} folds")]
    TooFewSamples {
        label: TaskLabel,
        count: usize,
        folds: usize,
    },
    /// Prediction/truth lists of different lengths.
    #[error("length mismatch: {left} predictions vs {right} truths")]
    LengthMismatch { left: usize, right: usize },
    /// Invalid experiment configuration.
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    /// Fold/rate context wrapped around an inner pipeline error.
    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Attach experiment context (fold, rate, classifier) to an inner error.
    pub fn with_context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// True for errors caused by an invalid configuration or parameters.
    pub fn is_config(&self) -> bool {
        match self {
            Error::InvalidSpec(_)
            | Error::InvalidParams(_)
            | Error::InvalidCutoff { .. }
            | Error::InvalidConfig(_)
            | Error::BankMismatch(_) => true,
            Error::Context { source, .. } => source.is_config(),
            _ => false,
        }
    }

    /// True for errors caused by unusable input data.
    pub fn is_data(&self) -> bool {
        match self {
            Error::MissingContact { .. }
            | Error::WindowOutOfBounds { .. }
            | Error::InsufficientQuietSignal { .. }
            | Error::ParseError { .. }
            | Error::SchemaMismatch { .. }
            | Error::Io(_)
            | Error::DegenerateData
            | Error::SingleClassInput
            | Error::TooFewSamples { .. } => true,
            Error::Context { source, .. } => source.is_data(),
            _ => false,
        }
    }
}
