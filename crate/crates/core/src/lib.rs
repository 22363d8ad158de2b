//! Classification of behavioral events from multi-channel local field
//! potential (LFP) recordings.
//!
//! The pipeline turns raw contact voltages into per-hemisphere feature views
//! and classifies event windows with single-kernel SVMs or an l_p-norm
//! multiple-kernel-learning (MKL) SVM:
//!
//! ```text
//! contacts ──bipolar──▶ windows ──C-Morlet CWT──▶ β-band spectrograms
//!     ──low-pass + resample──▶ flattened views ──PCA──▶ kernels ──▶ SVM / MKL
//! ```
//!
//! Modules follow the pipeline order:
//!
//! | module         | contents                                                  |
//! |----------------|-----------------------------------------------------------|
//! | [`lfp`]        | recordings, bipolar re-referencing, windows, synthesis, IO |
//! | [`spectrogram`]| complex Morlet wavelet transform, hemisphere stacking      |
//! | [`features`]   | Butterworth decimation, flattening, PCA                    |
//! | [`kernel`]     | kernel functions and Gram matrices                         |
//! | [`svm`]        | dual SVM solver and one-vs-rest multiclass                 |
//! | [`mkl`]        | l_p-norm multiple kernel learning                          |
//! | [`experiment`] | cross-validated experiment harness and reports             |
//!
//! All randomized steps take explicit seeds and are bit-reproducible; no
//! global RNG state is consulted anywhere in the crate.

pub mod error;
pub mod experiment;
pub mod features;
pub mod kernel;
pub mod lfp;
pub mod linalg;
pub mod mkl;
pub mod spectrogram;
pub mod svm;

pub use error::{Error, Result};
pub use experiment::{
    ClassifierKind, ExperimentConfig, ExperimentReport, TaskSet,
};
pub use features::{ButterworthLowPass, FeatureView, PcaBasis};
pub use kernel::{KernelMatrix, KernelSpec};
pub use lfp::{
    BipolarSignal, EventMarker, EventWindow, Hemisphere, LfpRecording, SyntheticSpec, TaskLabel,
};
pub use mkl::{MklConfig, MklModel};
pub use spectrogram::{MorletParams, Spectrogram};
pub use svm::SvmModel;
