//! Cross-validated classification experiments over sampling rates.
//!
//! [`run_experiment`] drives the whole pipeline: load or generate a
//! recording, cut labeled ±1 s windows per hemisphere, compute β-band
//! spectrograms once, then for every requested rate decimate, flatten,
//! build raw feature Gram matrices, and run a stratified k-fold sweep of
//! the selected classifiers. PCA bases, kernel hyperparameters, and
//! classifier training only ever see training folds.
//!
//! The stages are public ([`prepare_dataset`], [`extract_rate_features`],
//! [`raw_dot_gram`], [`stratified_folds`], [`train_and_eval_fold`]) so tests
//! and the CLI can compose or instrument them individually.
//!
//! High-dimensional feature vectors never reach the per-fold stage: each
//! (rate, hemisphere) pair is condensed into one raw dot-product Gram matrix,
//! and per-fold PCA and kernels work from that matrix alone (see
//! [`crate::features::PcaGramProjector`]). A 690 000-dimensional feature set
//! therefore costs one N×N Gram, once, rather than per fold.

mod report;

pub use report::{
    chance_rate, confusion_matrix, CellTiming, ChanceRate, ExperimentReport, RatePrep, ReportCell,
    ReportTiming,
};

use crate::error::{Error, Result};
use crate::features::{
    decimate_spectrogram, fit_pca_from_gram, flatten, FeatureView, PcaGramProjector,
};
use crate::kernel::{gram, gram_cross, KernelMatrix, KernelSpec};
use crate::lfp::{
    bipolar_rereference, extract_windows, generate_synthetic_recording, sample_random_segments,
    EventMarker, EventWindow, Hemisphere, LfpRecording, SyntheticSpec, TaskLabel,
};
use crate::mkl::{train_mkl_multiclass, BankEntry, MklConfig, MklMulticlass};
use crate::spectrogram::{hemisphere_spectrogram_with_plan, CwtPlan, MorletParams};
use crate::svm::{train_multiclass, MulticlassSvm, SvmParams};
use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

/// Default sampling-rate sweep (Hz), highest first.
pub const DEFAULT_RATES: [f64; 6] = [5000.0, 500.0, 50.0, 25.0, 10.0, 2.0];

// ---------------------------------------------------------------------------
// Task sets and classifiers
// ---------------------------------------------------------------------------

/// Which behavioral classes an experiment discriminates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskSet {
    /// Button press vs speech vs random segment.
    Three,
    /// All four behaviors plus random segments.
    Five,
}

impl TaskSet {
    /// Classes in canonical order (random segments last).
    pub fn labels(self) -> &'static [TaskLabel] {
        match self {
            TaskSet::Three => &[
                TaskLabel::ButtonPress,
                TaskLabel::Speech,
                TaskLabel::RandomSegment,
            ],
            TaskSet::Five => &TaskLabel::ALL,
        }
    }

    /// Classes backed by recorded events (everything except random segments).
    pub fn event_labels(self) -> &'static [TaskLabel] {
        match self {
            TaskSet::Three => &[TaskLabel::ButtonPress, TaskLabel::Speech],
            TaskSet::Five => &[
                TaskLabel::ButtonPress,
                TaskLabel::MouthMovement,
                TaskLabel::Speech,
                TaskLabel::ArmMovement,
            ],
        }
    }

    pub fn class_count(self) -> usize {
        self.labels().len()
    }
}

impl std::str::FromStr for TaskSet {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "3" | "three" => Ok(TaskSet::Three),
            "5" | "five" => Ok(TaskSet::Five),
            other => Err(Error::InvalidConfig(format!(
                "unknown task set {other:?} (expected 3 or 5)"
            ))),
        }
    }
}

impl std::fmt::Display for TaskSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TaskSet::Three => "three",
            TaskSet::Five => "five",
        })
    }
}

/// Classifier families the harness can sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClassifierKind {
    SvmLinear,
    SvmRbf,
    SvmPoly,
    Mkl,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 4] = [
        ClassifierKind::SvmLinear,
        ClassifierKind::SvmRbf,
        ClassifierKind::SvmPoly,
        ClassifierKind::Mkl,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ClassifierKind::SvmLinear => "svm-linear",
            ClassifierKind::SvmRbf => "svm-rbf",
            ClassifierKind::SvmPoly => "svm-poly",
            ClassifierKind::Mkl => "mkl",
        }
    }
}

impl std::str::FromStr for ClassifierKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "svm-linear" | "linear" => Ok(ClassifierKind::SvmLinear),
            "svm-rbf" | "rbf" => Ok(ClassifierKind::SvmRbf),
            "svm-poly" | "poly" => Ok(ClassifierKind::SvmPoly),
            "mkl" => Ok(ClassifierKind::Mkl),
            other => Err(Error::InvalidConfig(format!(
                "unknown classifier {other:?} (expected svm-linear, svm-rbf, svm-poly, or mkl)"
            ))),
        }
    }
}

impl std::fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// Where the recording comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataSource {
    /// Load a recording container (events come from its sidecar).
    File { path: PathBuf },
    /// Generate a recording in memory.
    Synthetic { spec: SyntheticSpec },
}

/// Everything one experiment run needs; serializable as TOML or JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub data: DataSource,
    pub task_set: TaskSet,
    /// Sampling rates to sweep, positive and non-increasing.
    pub rates: Vec<f64>,
    pub classifiers: Vec<ClassifierKind>,
    pub folds: usize,
    /// Fraction of training variance PCA must retain, in (0, 1].
    pub pca_retain: f64,
    /// Seed for fold assignment and random-segment placement.
    pub seed: u64,
    /// Morlet bandwidth parameter f_b (s²).
    pub wavelet_bandwidth: f64,
    /// Box penalty for the single-kernel baselines.
    pub svm_c: f64,
    /// RBF width; `None` = 1 / (feature dimension · pooled feature variance).
    pub gamma: Option<f64>,
    /// Additive offset of the polynomial kernel.
    pub poly_offset: f64,
    pub poly_degree: u32,
    /// Minimum distance (s) between a random-segment center and any event.
    pub guard_s: f64,
    /// Control-window count; `None` = mean event count per task class.
    pub random_segments: Option<usize>,
    /// Nested hyperparameter search inside training folds (slow; off by
    /// default). Never sees test folds.
    pub grid_search: bool,
    pub mkl: MklConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            data: DataSource::Synthetic {
                spec: SyntheticSpec::standard(TaskSet::Three.event_labels(), 40, 7)
                    .expect("built-in classes have signatures"),
            },
            task_set: TaskSet::Three,
            rates: DEFAULT_RATES.to_vec(),
            classifiers: ClassifierKind::ALL.to_vec(),
            folds: 10,
            pca_retain: 0.95,
            seed: 7,
            wavelet_bandwidth: 1.0,
            svm_c: 1.0,
            gamma: None,
            poly_offset: 1.0,
            poly_degree: 2,
            guard_s: 1.5,
            random_segments: None,
            grid_search: false,
            mkl: MklConfig::default(),
        }
    }
}

impl ExperimentConfig {
    /// Config over a freshly generated recording with built-in class
    /// signatures; `seed` drives both the generator and the folds.
    pub fn synthetic(task_set: TaskSet, events_per_class: usize, seed: u64) -> Result<Self> {
        Ok(Self {
            data: DataSource::Synthetic {
                spec: SyntheticSpec::standard(task_set.event_labels(), events_per_class, seed)?,
            },
            task_set,
            seed,
            ..Self::default()
        })
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if self.folds < 2 {
            return fail(format!("fold count must be ≥ 2, got {}", self.folds));
        }
        if self.rates.is_empty() {
            return fail("at least one sampling rate is required".into());
        }
        for pair in self.rates.windows(2) {
            if pair[1] > pair[0] {
                return fail(format!(
                    "rates must be non-increasing, got {} Hz after {} Hz",
                    pair[1], pair[0]
                ));
            }
        }
        for &r in &self.rates {
            if !(r > 0.0 && r.is_finite()) {
                return fail(format!("rates must be positive, got {r}"));
            }
        }
        if self.classifiers.is_empty() {
            return fail("at least one classifier is required".into());
        }
        for (i, c) in self.classifiers.iter().enumerate() {
            if self.classifiers[..i].contains(c) {
                return fail(format!("classifier {c} listed twice"));
            }
        }
        if !(self.pca_retain > 0.0 && self.pca_retain <= 1.0) {
            return fail(format!(
                "pca_retain must lie in (0, 1], got {}",
                self.pca_retain
            ));
        }
        if !(self.wavelet_bandwidth > 0.0 && self.wavelet_bandwidth.is_finite()) {
            return fail(format!(
                "wavelet_bandwidth must be positive, got {}",
                self.wavelet_bandwidth
            ));
        }
        if !(self.svm_c > 0.0 && self.svm_c.is_finite()) {
            return fail(format!("svm_c must be positive, got {}", self.svm_c));
        }
        if let Some(g) = self.gamma {
            if !(g > 0.0 && g.is_finite()) {
                return fail(format!("gamma must be positive, got {g}"));
            }
        }
        if !(self.poly_offset >= 0.0 && self.poly_offset.is_finite()) {
            return fail(format!(
                "poly_offset must be non-negative, got {}",
                self.poly_offset
            ));
        }
        if self.poly_degree == 0 {
            return fail("poly_degree must be ≥ 1".into());
        }
        if !(self.guard_s >= 0.0 && self.guard_s.is_finite()) {
            return fail(format!("guard_s must be non-negative, got {}", self.guard_s));
        }
        if self.random_segments == Some(0)
            && self.task_set.labels().contains(&TaskLabel::RandomSegment)
        {
            return fail("random_segments must be ≥ 1 when the task set includes them".into());
        }
        self.mkl.validate()?;
        for entry in &self.mkl.bank {
            resolve_view(&entry.view)?;
            entry.spec.validate()?;
        }
        if let DataSource::Synthetic { spec } = &self.data {
            spec.validate()?;
            for &label in self.task_set.event_labels() {
                if !spec.classes.iter().any(|c| c.label == label) {
                    return fail(format!(
                        "synthetic spec lacks a profile for task class {label}"
                    ));
                }
            }
            let max_rate = self.rates.iter().cloned().fold(0.0, f64::max);
            if max_rate > spec.sample_rate * (1.0 + 1e-12) {
                return fail(format!(
                    "rate {} Hz exceeds the synthetic sampling rate {} Hz",
                    max_rate, spec.sample_rate
                ));
            }
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text)
            .map_err(|e| Error::InvalidConfig(format!("TOML config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text)
            .map_err(|e| Error::InvalidConfig(format!("JSON config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    /// Load a config file; `.json` parses as JSON, anything else as TOML.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::InvalidConfig(format!("cannot read config {}: {e}", path.display()))
        })?;
        let is_json = path
            .extension()
            .map(|e| e.eq_ignore_ascii_case("json"))
            .unwrap_or(false);
        if is_json {
            Self::from_json_str(&text)
        } else {
            Self::from_toml_str(&text)
        }
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::InvalidConfig(format!("TOML: {e}")))
    }
}

// ---------------------------------------------------------------------------
// Folds
// ---------------------------------------------------------------------------

/// Stratified fold assignment: `result[i]` is the fold of sample `i`.
///
/// Each class is shuffled deterministically and dealt round-robin, so
/// per-class counts across folds differ by at most one. Classes are visited
/// in canonical label order; identical inputs and seed give identical folds.
pub fn stratified_folds(labels: &[TaskLabel], folds: usize, seed: u64) -> Result<Vec<usize>> {
    if folds < 2 {
        return Err(Error::InvalidConfig(format!(
            "fold count must be ≥ 2, got {folds}"
        )));
    }
    if labels.is_empty() {
        return Err(Error::InvalidConfig("no samples to fold".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![usize::MAX; labels.len()];
    let classes: Vec<TaskLabel> = TaskLabel::ALL
        .into_iter()
        .filter(|c| labels.contains(c))
        .collect();
    for (ord, &class) in classes.iter().enumerate() {
        let mut members: Vec<usize> = labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == class)
            .map(|(i, _)| i)
            .collect();
        if members.len() < folds {
            return Err(Error::TooFewSamples {
                label: class,
                count: members.len(),
                folds,
            });
        }
        members.shuffle(&mut rng);
        // Offset the deal per class so remainder samples spread over folds.
        for (pos, &i) in members.iter().enumerate() {
            assignment[i] = (pos + ord) % folds;
        }
    }
    Ok(assignment)
}

/// Expand a fold assignment into per-fold (train, test) index lists.
pub fn fold_partitions(assignment: &[usize], folds: usize) -> Vec<(Vec<usize>, Vec<usize>)> {
    (0..folds)
        .map(|f| {
            let mut train = Vec::new();
            let mut test = Vec::new();
            for (i, &a) in assignment.iter().enumerate() {
                if a == f {
                    test.push(i);
                } else {
                    train.push(i);
                }
            }
            (train, test)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Dataset assembly
// ---------------------------------------------------------------------------

/// Labeled event and control windows for both hemispheres.
///
/// `left[i]`, `right[i]`, and `labels[i]` describe the same trial; control
/// windows use identical centers on both sides.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub left: Vec<EventWindow>,
    pub right: Vec<EventWindow>,
    pub labels: Vec<TaskLabel>,
    pub base_rate: f64,
}

/// Load or generate the recording and cut its windows.
pub fn prepare_dataset(config: &ExperimentConfig) -> Result<Dataset> {
    let recording = match &config.data {
        DataSource::File { path } => crate::lfp::io::load_recording(path)?,
        DataSource::Synthetic { spec } => generate_synthetic_recording(spec)?,
    };
    dataset_from_recording(&recording, config)
}

/// Cut task-set windows (events + shared-center random segments) from a
/// recording. Random-segment placement avoids *all* events of the recording,
/// including classes outside the task set.
pub fn dataset_from_recording(rec: &LfpRecording, config: &ExperimentConfig) -> Result<Dataset> {
    let max_rate = config.rates.iter().cloned().fold(0.0, f64::max);
    if max_rate > rec.sample_rate * (1.0 + 1e-12) {
        return Err(Error::InvalidConfig(format!(
            "rate {} Hz exceeds the recording rate {} Hz",
            max_rate, rec.sample_rate
        )));
    }
    let event_labels = config.task_set.event_labels();
    let events: Vec<EventMarker> = rec
        .events
        .iter()
        .filter(|e| event_labels.contains(&e.label))
        .cloned()
        .collect();
    for &label in event_labels {
        let count = events.iter().filter(|e| e.label == label).count();
        if count < config.folds {
            return Err(Error::TooFewSamples {
                label,
                count,
                folds: config.folds,
            });
        }
    }
    let n_random = if config.task_set.labels().contains(&TaskLabel::RandomSegment) {
        config.random_segments.unwrap_or_else(|| {
            ((events.len() as f64 / event_labels.len() as f64).round() as usize).max(1)
        })
    } else {
        0
    };

    let mut per_hemi: Vec<Vec<EventWindow>> = Vec::with_capacity(2);
    for h in Hemisphere::BOTH {
        let sig = bipolar_rereference(rec, h)?;
        let mut windows = extract_windows(&sig, &events)?;
        if n_random > 0 {
            windows.extend(sample_random_segments(
                &sig,
                &rec.events,
                n_random,
                config.guard_s,
                config.seed,
            )?);
        }
        per_hemi.push(windows);
    }
    let right = per_hemi.pop().expect("two hemispheres");
    let left = per_hemi.pop().expect("two hemispheres");
    let labels: Vec<TaskLabel> = left.iter().map(|w| w.label).collect();
    debug_assert!(labels
        .iter()
        .zip(right.iter())
        .all(|(&l, w)| l == w.label));
    Ok(Dataset {
        left,
        right,
        labels,
        base_rate: rec.sample_rate,
    })
}

// ---------------------------------------------------------------------------
// Feature extraction
// ---------------------------------------------------------------------------

/// Per-rate feature views, aligned with the dataset's trial order.
#[derive(Debug, Clone)]
pub struct RateFeatures {
    pub rate_hz: f64,
    pub left: Vec<FeatureView>,
    pub right: Vec<FeatureView>,
}

/// [`extract_rate_features`] output plus its accumulated stage costs.
#[derive(Debug)]
pub struct FeatureExtraction {
    pub rates: Vec<RateFeatures>,
    /// Total wavelet-transform seconds (all windows, both hemispheres).
    pub cwt_s: f64,
    /// Decimation + flattening seconds per requested rate.
    pub features_s: Vec<f64>,
}

/// Compute each window's β-band spectrogram once and decimate it to every
/// requested rate. Windows are processed in parallel; the wavelet FFT plan
/// is shared.
pub fn extract_rate_features(
    dataset: &Dataset,
    rates: &[f64],
    wavelet_bandwidth: f64,
) -> Result<FeatureExtraction> {
    if rates.is_empty() {
        return Err(Error::InvalidConfig("no rates requested".into()));
    }
    let params = MorletParams::beta_band(wavelet_bandwidth)?;
    let window_len = (2.0 * dataset.base_rate).round() as usize;
    let plan = CwtPlan::new(window_len, dataset.base_rate, &params)?;
    let cwt_s = Mutex::new(0.0f64);
    let features_s = Mutex::new(vec![0.0f64; rates.len()]);

    // [window][rate] feature views for one hemisphere.
    let per_hemi = |windows: &[EventWindow]| -> Result<Vec<Vec<FeatureView>>> {
        windows
            .par_iter()
            .map(|w| {
                let t0 = Instant::now();
                let spec = hemisphere_spectrogram_with_plan(w, &params, &plan)?;
                *cwt_s.lock().unwrap() += t0.elapsed().as_secs_f64();
                rates
                    .iter()
                    .enumerate()
                    .map(|(ri, &rate)| {
                        let t1 = Instant::now();
                        let view = flatten(&decimate_spectrogram(&spec, rate)?, w.label, w.hemisphere);
                        features_s.lock().unwrap()[ri] += t1.elapsed().as_secs_f64();
                        Ok(view)
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect()
    };
    let left = per_hemi(&dataset.left)?;
    let right = per_hemi(&dataset.right)?;

    let mut out: Vec<RateFeatures> = rates
        .iter()
        .map(|&rate_hz| RateFeatures {
            rate_hz,
            left: Vec::with_capacity(left.len()),
            right: Vec::with_capacity(right.len()),
        })
        .collect();
    for per_rate in left {
        for (ri, view) in per_rate.into_iter().enumerate() {
            out[ri].left.push(view);
        }
    }
    for per_rate in right {
        for (ri, view) in per_rate.into_iter().enumerate() {
            out[ri].right.push(view);
        }
    }
    Ok(FeatureExtraction {
        rates: out,
        cwt_s: cwt_s.into_inner().unwrap(),
        features_s: features_s.into_inner().unwrap(),
    })
}

/// Raw (uncentered) dot-product Gram matrix of the feature vectors.
///
/// This is the only place the full-dimensional vectors are touched; folds
/// derive PCA projections and kernels from this matrix.
pub fn raw_dot_gram(views: &[FeatureView]) -> Result<Array2<f64>> {
    let n = views.len();
    if n == 0 {
        return Err(Error::InvalidParams("no feature vectors".into()));
    }
    let dim = views[0].values.len();
    for v in views {
        if v.values.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: v.values.len(),
            });
        }
    }
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = &views[i].values;
            (i..n)
                .map(|j| {
                    let xj = &views[j].values;
                    xi.iter().zip(xj).map(|(a, b)| a * b).sum()
                })
                .collect()
        })
        .collect();
    let mut g = Array2::<f64>::zeros((n, n));
    for (i, row) in rows.into_iter().enumerate() {
        for (off, v) in row.into_iter().enumerate() {
            let j = i + off;
            g[[i, j]] = v;
            g[[j, i]] = v;
        }
    }
    Ok(g)
}

// ---------------------------------------------------------------------------
// Per-fold training
// ---------------------------------------------------------------------------

/// Feature view a kernel reads: one hemisphere or their concatenation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViewSel {
    Left,
    Right,
    Both,
}

fn resolve_view(name: &str) -> Result<ViewSel> {
    match name.trim().to_ascii_lowercase().as_str() {
        "left" => Ok(ViewSel::Left),
        "right" => Ok(ViewSel::Right),
        "both" | "concat" => Ok(ViewSel::Both),
        other => Err(Error::BankMismatch(format!(
            "unknown kernel view {other:?} (expected left, right, or both)"
        ))),
    }
}

/// Default RBF width: 1 / (dimension · pooled per-dimension variance).
pub fn auto_gamma(train: &[Vec<f64>]) -> f64 {
    let n = train.len();
    let dim = train.first().map_or(0, |v| v.len());
    if dim == 0 {
        return 1.0;
    }
    let fallback = 1.0 / dim as f64;
    if n < 2 {
        return fallback;
    }
    let mut pooled = 0.0;
    for j in 0..dim {
        let mean = train.iter().map(|v| v[j]).sum::<f64>() / n as f64;
        pooled += train.iter().map(|v| (v[j] - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    }
    // pooled/dim is the mean per-dimension variance.
    let gamma = 1.0 / (dim as f64 * (pooled / dim as f64));
    if gamma.is_finite() && gamma > 0.0 {
        gamma
    } else {
        fallback
    }
}

fn concat_views(left: &[Vec<f64>], right: &[Vec<f64>]) -> Vec<Vec<f64>> {
    left.iter()
        .zip(right)
        .map(|(l, r)| {
            let mut v = Vec::with_capacity(l.len() + r.len());
            v.extend_from_slice(l);
            v.extend_from_slice(r);
            v
        })
        .collect()
}

/// 64-bit FNV-1a over f64 bit patterns; order-sensitive.
fn fnv64_f64s<'a>(streams: impl IntoIterator<Item = &'a [f64]>) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for stream in streams {
        for &v in stream {
            for b in v.to_bits().to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
    }
    h
}

fn fingerprint_single(model: &MulticlassSvm) -> u64 {
    let mut parts: Vec<&[f64]> = Vec::new();
    let biases: Vec<f64> = model.models.iter().map(|m| m.bias).collect();
    for m in &model.models {
        parts.push(&m.alpha);
    }
    parts.push(&biases);
    fnv64_f64s(parts)
}

fn fingerprint_mkl(model: &MklMulticlass) -> u64 {
    let mut parts: Vec<&[f64]> = Vec::new();
    let biases: Vec<f64> = model.models.iter().map(|m| m.svm.bias).collect();
    for m in &model.models {
        parts.push(&m.d);
        parts.push(&m.svm.alpha);
    }
    parts.push(&biases);
    fnv64_f64s(parts)
}

/// Hyperparameters of one single-kernel candidate.
#[derive(Debug, Clone, Copy)]
struct SingleChoice {
    c: f64,
    spec: KernelSpec,
}

fn base_single_choice(
    kind: ClassifierKind,
    config: &ExperimentConfig,
    train_x: &[Vec<f64>],
) -> SingleChoice {
    let spec = match kind {
        ClassifierKind::SvmLinear => KernelSpec::Linear { c: 0.0 },
        ClassifierKind::SvmRbf => KernelSpec::Rbf {
            gamma: config.gamma.unwrap_or_else(|| auto_gamma(train_x)),
        },
        ClassifierKind::SvmPoly => KernelSpec::Polynomial {
            c: config.poly_offset,
            degree: config.poly_degree,
        },
        ClassifierKind::Mkl => unreachable!("MKL is not a single-kernel classifier"),
    };
    SingleChoice {
        c: config.svm_c,
        spec,
    }
}

const GRID_C_MULTIPLIERS: [f64; 3] = [0.1, 1.0, 10.0];
const GRID_GAMMA_MULTIPLIERS: [f64; 3] = [0.25, 1.0, 4.0];

fn single_candidates(base: SingleChoice) -> Vec<SingleChoice> {
    let mut out = Vec::new();
    for &cm in &GRID_C_MULTIPLIERS {
        match base.spec {
            KernelSpec::Rbf { gamma } => {
                for &gm in &GRID_GAMMA_MULTIPLIERS {
                    out.push(SingleChoice {
                        c: base.c * cm,
                        spec: KernelSpec::Rbf { gamma: gamma * gm },
                    });
                }
            }
            KernelSpec::Linear { .. } => out.push(SingleChoice {
                c: base.c * cm,
                spec: base.spec,
            }),
            KernelSpec::Polynomial { c, .. } => {
                for degree in [2u32, 3] {
                    out.push(SingleChoice {
                        c: base.c * cm,
                        spec: KernelSpec::Polynomial { c, degree },
                    });
                }
            }
        }
    }
    out
}

/// Derived seed for nested folds: depends only on the outer seed and the
/// training indices, so it is reproducible and fold-specific.
fn nested_seed(seed: u64, train_idx: &[usize]) -> u64 {
    let mut h: u64 = seed ^ 0x9e37_79b9_7f4a_7c15;
    for &i in train_idx {
        h ^= i as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Pick the candidate with the best nested-CV accuracy (ties → first).
/// Falls back to `base` when the training classes are too small to nest.
fn pick_single_by_nested_cv(
    base: SingleChoice,
    candidates: &[SingleChoice],
    train_x: &[Vec<f64>],
    train_y: &[TaskLabel],
    seed: u64,
) -> Result<SingleChoice> {
    let assignment = match stratified_folds(train_y, 3, seed) {
        Ok(a) => a,
        Err(Error::TooFewSamples { .. }) => return Ok(base),
        Err(e) => return Err(e),
    };
    let partitions = fold_partitions(&assignment, 3);
    let mut best = base;
    let mut best_acc = f64::NEG_INFINITY;
    for &cand in candidates {
        let mut correct = 0usize;
        let mut total = 0usize;
        for (tr, va) in &partitions {
            let sub_x: Vec<Vec<f64>> = tr.iter().map(|&i| train_x[i].clone()).collect();
            let sub_y: Vec<TaskLabel> = tr.iter().map(|&i| train_y[i]).collect();
            let model = train_multiclass(&sub_x, &sub_y, &cand.spec, &SvmParams::with_c(cand.c))?;
            for &v in va {
                if model.predict(&train_x[v])? == train_y[v] {
                    correct += 1;
                }
                total += 1;
            }
        }
        let acc = correct as f64 / total.max(1) as f64;
        if acc > best_acc {
            best_acc = acc;
            best = cand;
        }
    }
    Ok(best)
}

/// Resolved kernel bank: Gram matrices on the training fold plus the
/// (view, spec) description needed to evaluate test rows.
struct ResolvedBank {
    kernels: Vec<KernelMatrix>,
    specs: Vec<(ViewSel, KernelSpec)>,
}

fn build_bank(
    config_bank: &[BankEntry],
    gamma_override: Option<f64>,
    gamma_mult: f64,
    train_l: &[Vec<f64>],
    train_r: &[Vec<f64>],
) -> Result<ResolvedBank> {
    let entries: Vec<(ViewSel, KernelSpec)> = if config_bank.is_empty() {
        // Default bank: one RBF kernel per hemisphere view.
        let gl = gamma_override.unwrap_or_else(|| auto_gamma(train_l));
        let gr = gamma_override.unwrap_or_else(|| auto_gamma(train_r));
        vec![
            (ViewSel::Left, KernelSpec::Rbf { gamma: gl }),
            (ViewSel::Right, KernelSpec::Rbf { gamma: gr }),
        ]
    } else {
        config_bank
            .iter()
            .map(|e| Ok((resolve_view(&e.view)?, e.spec)))
            .collect::<Result<Vec<_>>>()?
    };
    let mut both: Option<Vec<Vec<f64>>> = None;
    let mut kernels = Vec::with_capacity(entries.len());
    let mut specs = Vec::with_capacity(entries.len());
    for (sel, spec) in entries {
        let spec = match spec {
            KernelSpec::Rbf { gamma } => KernelSpec::Rbf {
                gamma: gamma * gamma_mult,
            },
            other => other,
        };
        let (vectors, name): (&[Vec<f64>], &str) = match sel {
            ViewSel::Left => (train_l, "left"),
            ViewSel::Right => (train_r, "right"),
            ViewSel::Both => {
                if both.is_none() {
                    both = Some(concat_views(train_l, train_r));
                }
                (both.as_ref().unwrap(), "both")
            }
        };
        kernels.push(gram(vectors, &spec, name)?);
        specs.push((sel, spec));
    }
    Ok(ResolvedBank { kernels, specs })
}

/// Nested-CV choice of the MKL penalty (and RBF width scale) on the
/// training fold only. Kernel matrices are sliced, not recomputed.
fn pick_mkl_by_nested_cv(
    config: &ExperimentConfig,
    train_l: &[Vec<f64>],
    train_r: &[Vec<f64>],
    train_y: &[TaskLabel],
    seed: u64,
) -> Result<(MklConfig, ResolvedBank)> {
    let base_bank = build_bank(&config.mkl.bank, config.gamma, 1.0, train_l, train_r)?;
    if !config.grid_search {
        return Ok((config.mkl.clone(), base_bank));
    }
    let assignment = match stratified_folds(train_y, 3, seed) {
        Ok(a) => a,
        Err(Error::TooFewSamples { .. }) => return Ok((config.mkl.clone(), base_bank)),
        Err(e) => return Err(e),
    };
    let partitions = fold_partitions(&assignment, 3);
    let mut best: Option<(f64, f64, f64)> = None; // (acc, c_mult, gamma_mult)
    for &cm in &GRID_C_MULTIPLIERS {
        for &gm in &GRID_GAMMA_MULTIPLIERS {
            let bank = build_bank(&config.mkl.bank, config.gamma, gm, train_l, train_r)?;
            let mut cfg = config.mkl.clone();
            cfg.c *= cm;
            let mut correct = 0usize;
            let mut total = 0usize;
            for (tr, va) in &partitions {
                let sub: Vec<KernelMatrix> = bank
                    .kernels
                    .iter()
                    .map(|k| KernelMatrix {
                        values: slice_square(&k.values, tr),
                        spec: k.spec,
                        view: k.view.clone(),
                    })
                    .collect();
                let sub_y: Vec<TaskLabel> = tr.iter().map(|&i| train_y[i]).collect();
                let mut sub_cfg = cfg.clone();
                sub_cfg.bank = Vec::new(); // sliced bank no longer matches a description
                let model = train_mkl_multiclass(&sub, &sub_y, &sub_cfg)?;
                for &v in va {
                    let rows: Vec<Vec<f64>> = bank
                        .kernels
                        .iter()
                        .map(|k| tr.iter().map(|&j| k.values[[v, j]]).collect())
                        .collect();
                    if model.predict(&rows)? == train_y[v] {
                        correct += 1;
                    }
                    total += 1;
                }
            }
            let acc = correct as f64 / total.max(1) as f64;
            if best.map_or(true, |(b, _, _)| acc > b) {
                best = Some((acc, cm, gm));
            }
        }
    }
    let (_, cm, gm) = best.expect("grid is non-empty");
    let mut cfg = config.mkl.clone();
    cfg.c *= cm;
    let bank = build_bank(&config.mkl.bank, config.gamma, gm, train_l, train_r)?;
    Ok((cfg, bank))
}

fn slice_square(values: &Array2<f64>, idx: &[usize]) -> Array2<f64> {
    let mut out = Array2::<f64>::zeros((idx.len(), idx.len()));
    for (a, &i) in idx.iter().enumerate() {
        for (b, &j) in idx.iter().enumerate() {
            out[[a, b]] = values[[i, j]];
        }
    }
    out
}

/// Result of training and evaluating one classifier on one fold.
#[derive(Debug, Clone)]
pub struct FoldOutcome {
    pub accuracy_pct: f64,
    /// Predicted labels aligned with the test indices.
    pub predictions: Vec<TaskLabel>,
    /// Hash of the trained model's parameters (α, b, and kernel weights);
    /// leakage canaries assert it ignores test-fold perturbations.
    pub model_fingerprint: u64,
    /// Smaller of the two views' retained-variance fractions.
    pub min_retained: f64,
    pub train_s: f64,
    pub test_s: f64,
}

/// Train one classifier on `train_idx` and evaluate it on `test_idx`.
///
/// Both views are reduced by PCA fitted on the training rows of the raw
/// Gram matrices; kernels, hyperparameter selection, and the classifier
/// itself only see training data. Test rows enter only through projection
/// and kernel evaluation at prediction time.
pub fn train_and_eval_fold(
    left_gram: &Array2<f64>,
    right_gram: &Array2<f64>,
    labels: &[TaskLabel],
    train_idx: &[usize],
    test_idx: &[usize],
    classifier: ClassifierKind,
    config: &ExperimentConfig,
) -> Result<FoldOutcome> {
    let n = labels.len();
    for g in [left_gram, right_gram] {
        if g.nrows() != n || g.ncols() != n {
            return Err(Error::SizeMismatch(format!(
                "Gram matrix is {}×{} but there are {n} samples",
                g.nrows(),
                g.ncols()
            )));
        }
    }
    if test_idx.is_empty() || train_idx.is_empty() {
        return Err(Error::InvalidParams("empty train or test fold".into()));
    }
    let mut seen = vec![false; n];
    for &i in train_idx.iter().chain(test_idx) {
        if i >= n {
            return Err(Error::InvalidParams(format!(
                "fold index {i} out of range for {n} samples"
            )));
        }
        if seen[i] {
            return Err(Error::InvalidParams(format!(
                "sample {i} appears twice across train/test folds"
            )));
        }
        seen[i] = true;
    }

    let t_train = Instant::now();
    let left_proj = fit_pca_from_gram(left_gram, train_idx, config.pca_retain)?;
    let right_proj = fit_pca_from_gram(right_gram, train_idx, config.pca_retain)?;
    let min_retained = left_proj.retained_fraction.min(right_proj.retained_fraction);
    let project = |p: &PcaGramProjector, g: &Array2<f64>, idx: &[usize]| -> Vec<Vec<f64>> {
        idx.iter().map(|&i| p.project_row(g, i)).collect()
    };
    let train_l = project(&left_proj, left_gram, train_idx);
    let train_r = project(&right_proj, right_gram, train_idx);
    let train_y: Vec<TaskLabel> = train_idx.iter().map(|&i| labels[i]).collect();

    let (predictions, model_fingerprint, train_s, test_s) = match classifier {
        ClassifierKind::Mkl => {
            let seed = nested_seed(config.seed, train_idx);
            let (mkl_cfg, bank) = pick_mkl_by_nested_cv(config, &train_l, &train_r, &train_y, seed)?;
            let model = train_mkl_multiclass(&bank.kernels, &train_y, &mkl_cfg)?;
            let train_s = t_train.elapsed().as_secs_f64();

            let t_test = Instant::now();
            let test_l = project(&left_proj, left_gram, test_idx);
            let test_r = project(&right_proj, right_gram, test_idx);
            let (test_b, train_b) = if bank.specs.iter().any(|(s, _)| *s == ViewSel::Both) {
                (
                    Some(concat_views(&test_l, &test_r)),
                    Some(concat_views(&train_l, &train_r)),
                )
            } else {
                (None, None)
            };
            let crosses: Vec<Array2<f64>> = bank
                .specs
                .iter()
                .map(|(sel, spec)| {
                    let (test_v, train_v): (&[Vec<f64>], &[Vec<f64>]) = match sel {
                        ViewSel::Left => (&test_l, &train_l),
                        ViewSel::Right => (&test_r, &train_r),
                        ViewSel::Both => (test_b.as_ref().unwrap(), train_b.as_ref().unwrap()),
                    };
                    gram_cross(test_v, train_v, spec)
                })
                .collect::<Result<_>>()?;
            let mut predictions = Vec::with_capacity(test_idx.len());
            for t in 0..test_idx.len() {
                let rows: Vec<Vec<f64>> = crosses.iter().map(|c| c.row(t).to_vec()).collect();
                predictions.push(model.predict(&rows)?);
            }
            (
                predictions,
                fingerprint_mkl(&model),
                train_s,
                t_test.elapsed().as_secs_f64(),
            )
        }
        single => {
            let train_x = concat_views(&train_l, &train_r);
            let base = base_single_choice(single, config, &train_x);
            let choice = if config.grid_search {
                let seed = nested_seed(config.seed, train_idx);
                pick_single_by_nested_cv(
                    base,
                    &single_candidates(base),
                    &train_x,
                    &train_y,
                    seed,
                )?
            } else {
                base
            };
            let model =
                train_multiclass(&train_x, &train_y, &choice.spec, &SvmParams::with_c(choice.c))?;
            let train_s = t_train.elapsed().as_secs_f64();

            let t_test = Instant::now();
            let test_l = project(&left_proj, left_gram, test_idx);
            let test_r = project(&right_proj, right_gram, test_idx);
            let test_x = concat_views(&test_l, &test_r);
            let predictions: Vec<TaskLabel> = test_x
                .iter()
                .map(|x| model.predict(x))
                .collect::<Result<_>>()?;
            (
                predictions,
                fingerprint_single(&model),
                train_s,
                t_test.elapsed().as_secs_f64(),
            )
        }
    };

    let correct = predictions
        .iter()
        .zip(test_idx)
        .filter(|(p, &i)| **p == labels[i])
        .count();
    Ok(FoldOutcome {
        accuracy_pct: 100.0 * correct as f64 / test_idx.len() as f64,
        predictions,
        model_fingerprint,
        min_retained,
        train_s,
        test_s,
    })
}

// ---------------------------------------------------------------------------
// Orchestration
// ---------------------------------------------------------------------------

/// Run the full sweep described by `config` and assemble its report.
///
/// Deterministic under a fixed config and seed: two runs differ only in
/// wall-clock `timing` fields.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let t0 = Instant::now();
    let dataset = prepare_dataset(config)?;
    let class_order: Vec<TaskLabel> = config.task_set.labels().to_vec();
    let chance = chance_rate(&dataset.labels);
    let assignment = stratified_folds(&dataset.labels, config.folds, config.seed)?;
    let partitions = fold_partitions(&assignment, config.folds);

    let extraction = extract_rate_features(&dataset, &config.rates, config.wavelet_bandwidth)?;
    let mut rate_preps = Vec::with_capacity(config.rates.len());
    let mut tagged: Vec<(usize, usize, ReportCell)> = Vec::new();

    for (ri, rf) in extraction.rates.into_iter().enumerate() {
        let rate_hz = rf.rate_hz;
        let t_gram = Instant::now();
        let left_gram = raw_dot_gram(&rf.left)?;
        let right_gram = raw_dot_gram(&rf.right)?;
        let gram_s = t_gram.elapsed().as_secs_f64();
        rate_preps.push(RatePrep {
            rate_hz,
            features_s: extraction.features_s[ri],
            gram_s,
        });
        drop(rf); // full-dimensional vectors are no longer needed

        for (ci, &classifier) in config.classifiers.iter().enumerate() {
            let mut fold_accuracies = Vec::with_capacity(config.folds);
            let mut predictions = Vec::new();
            let mut truths = Vec::new();
            let mut timing = CellTiming::default();
            let mut min_retained = f64::INFINITY;
            for (fi, (train_idx, test_idx)) in partitions.iter().enumerate() {
                let outcome = train_and_eval_fold(
                    &left_gram,
                    &right_gram,
                    &dataset.labels,
                    train_idx,
                    test_idx,
                    classifier,
                    config,
                )
                .map_err(|e| {
                    e.with_context(format!("rate {rate_hz} Hz, {classifier}, fold {fi}"))
                })?;
                fold_accuracies.push(outcome.accuracy_pct);
                predictions.extend(outcome.predictions);
                truths.extend(test_idx.iter().map(|&i| dataset.labels[i]));
                timing.train_s += outcome.train_s;
                timing.test_s += outcome.test_s;
                min_retained = min_retained.min(outcome.min_retained);
            }
            let (confusion, zero_truth_rows) =
                confusion_matrix(&predictions, &truths, &class_order)?;
            let mean_accuracy_pct =
                fold_accuracies.iter().sum::<f64>() / fold_accuracies.len() as f64;
            tagged.push((
                ci,
                ri,
                ReportCell {
                    classifier,
                    rate_hz,
                    mean_accuracy_pct,
                    fold_accuracies_pct: fold_accuracies,
                    confusion,
                    zero_truth_rows,
                    min_retained_variance: min_retained,
                    timing,
                },
            ));
        }
    }
    tagged.sort_by_key(|&(ci, ri, _)| (ci, ri));
    Ok(ExperimentReport {
        config: config.clone(),
        class_order,
        chance,
        cells: tagged.into_iter().map(|(_, _, c)| c).collect(),
        timing: ReportTiming {
            total_wall_s: t0.elapsed().as_secs_f64(),
            cwt_s: extraction.cwt_s,
            rates: rate_preps,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;

    // ---------------- task sets and parsing ----------------

    #[test]
    fn task_set_definitions() {
        assert_eq!(
            TaskSet::Three.labels(),
            &[
                TaskLabel::ButtonPress,
                TaskLabel::Speech,
                TaskLabel::RandomSegment
            ]
        );
        assert_eq!(TaskSet::Five.labels(), &TaskLabel::ALL);
        assert_eq!(TaskSet::Three.class_count(), 3);
        assert_eq!(TaskSet::Five.class_count(), 5);
        assert!(!TaskSet::Five
            .event_labels()
            .contains(&TaskLabel::RandomSegment));
        assert_eq!("3".parse::<TaskSet>().unwrap(), TaskSet::Three);
        assert_eq!("FIVE".parse::<TaskSet>().unwrap(), TaskSet::Five);
        assert!("4".parse::<TaskSet>().is_err());
    }

    #[test]
    fn classifier_parsing_and_names() {
        for kind in ClassifierKind::ALL {
            assert_eq!(kind.name().parse::<ClassifierKind>().unwrap(), kind);
        }
        assert_eq!(
            "rbf".parse::<ClassifierKind>().unwrap(),
            ClassifierKind::SvmRbf
        );
        assert!("forest".parse::<ClassifierKind>().is_err());
    }

    // ---------------- stratified folds ----------------

    #[test]
    fn two_balanced_classes_ten_folds_one_each() {
        let mut labels = vec![TaskLabel::ButtonPress; 10];
        labels.extend(vec![TaskLabel::Speech; 10]);
        let a = stratified_folds(&labels, 10, 3).unwrap();
        for f in 0..10 {
            let members: Vec<usize> = (0..20).filter(|&i| a[i] == f).collect();
            assert_eq!(members.len(), 2);
            assert_eq!(labels[members[0]], TaskLabel::ButtonPress);
            assert_eq!(labels[members[1]], TaskLabel::Speech);
        }
    }

    #[test]
    fn folds_partition_all_samples_with_balanced_classes() {
        let mut labels = Vec::new();
        for (i, &l) in [TaskLabel::ButtonPress, TaskLabel::Speech, TaskLabel::RandomSegment]
            .iter()
            .enumerate()
        {
            labels.extend(vec![l; 11 + i]); // 11, 12, 13 samples
        }
        let k = 4;
        let a = stratified_folds(&labels, k, 9).unwrap();
        assert_eq!(a.len(), labels.len());
        assert!(a.iter().all(|&f| f < k));
        // per-class fold counts differ by ≤ 1
        for &class in &[TaskLabel::ButtonPress, TaskLabel::Speech, TaskLabel::RandomSegment] {
            let mut counts = vec![0usize; k];
            for (i, &l) in labels.iter().enumerate() {
                if l == class {
                    counts[a[i]] += 1;
                }
            }
            let (min, max) = (
                counts.iter().min().unwrap(),
                counts.iter().max().unwrap(),
            );
            assert!(max - min <= 1, "class {class}: {counts:?}");
        }
    }

    #[test]
    fn folds_are_deterministic_and_seed_sensitive() {
        let labels: Vec<TaskLabel> = (0..30)
            .map(|i| {
                if i % 2 == 0 {
                    TaskLabel::ButtonPress
                } else {
                    TaskLabel::Speech
                }
            })
            .collect();
        let a = stratified_folds(&labels, 5, 42).unwrap();
        let b = stratified_folds(&labels, 5, 42).unwrap();
        assert_eq!(a, b);
        let c = stratified_folds(&labels, 5, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn too_few_samples_names_the_class() {
        let mut labels = vec![TaskLabel::ButtonPress; 10];
        labels.extend(vec![TaskLabel::Speech; 3]);
        match stratified_folds(&labels, 5, 0) {
            Err(Error::TooFewSamples {
                label,
                count,
                folds,
            }) => {
                assert_eq!(label, TaskLabel::Speech);
                assert_eq!(count, 3);
                assert_eq!(folds, 5);
            }
            other => panic!("expected TooFewSamples, got {other:?}"),
        }
        assert!(matches!(
            stratified_folds(&labels, 1, 0),
            Err(Error::InvalidConfig(_))
        ));
    }

    // ---------------- configuration ----------------

    #[test]
    fn default_config_is_valid_and_round_trips() {
        let config = ExperimentConfig::default();
        config.validate().unwrap();
        let toml_text = config.to_toml_string().unwrap();
        let back = ExperimentConfig::from_toml_str(&toml_text).unwrap();
        assert_eq!(back, config);
        let json_text = serde_json::to_string(&config).unwrap();
        let back = ExperimentConfig::from_json_str(&json_text).unwrap();
        assert_eq!(back, config);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let ok = ExperimentConfig::default();
        let mut c = ok.clone();
        c.folds = 1;
        assert!(c.validate().unwrap_err().is_config());
        let mut c = ok.clone();
        c.rates = vec![10.0, 50.0];
        assert!(c.validate().is_err(), "increasing rates must fail");
        let mut c = ok.clone();
        c.rates = vec![50.0, -1.0];
        assert!(c.validate().is_err());
        let mut c = ok.clone();
        c.classifiers.clear();
        assert!(c.validate().is_err());
        let mut c = ok.clone();
        c.classifiers = vec![ClassifierKind::Mkl, ClassifierKind::Mkl];
        assert!(c.validate().is_err());
        let mut c = ok.clone();
        c.pca_retain = 1.5;
        assert!(c.validate().is_err());
        let mut c = ok.clone();
        c.gamma = Some(-2.0);
        assert!(c.validate().is_err());
        let mut c = ok.clone();
        c.rates = vec![9999.0];
        assert!(c.validate().is_err(), "rate above synthetic rate must fail");
        let mut c = ok.clone();
        c.task_set = TaskSet::Five; // synthetic spec only covers the 3-task classes
        assert!(c.validate().is_err());
        let mut c = ok.clone();
        c.mkl.bank = vec![BankEntry {
            view: "temporal".into(),
            spec: KernelSpec::Rbf { gamma: 1.0 },
        }];
        assert!(matches!(c.validate(), Err(Error::BankMismatch(_))));
    }

    #[test]
    fn config_loads_from_toml_and_json_files() {
        let dir = tempfile::tempdir().unwrap();
        let config = ExperimentConfig::synthetic(TaskSet::Three, 12, 5).unwrap();

        let toml_path = dir.path().join("run.toml");
        std::fs::write(&toml_path, config.to_toml_string().unwrap()).unwrap();
        assert_eq!(ExperimentConfig::load(&toml_path).unwrap(), config);

        let json_path = dir.path().join("run.json");
        std::fs::write(&json_path, serde_json::to_string_pretty(&config).unwrap()).unwrap();
        assert_eq!(ExperimentConfig::load(&json_path).unwrap(), config);

        let bad = dir.path().join("bad.toml");
        std::fs::write(&bad, "rates = \"fast\"").unwrap();
        assert!(ExperimentConfig::load(&bad).unwrap_err().is_config());
        assert!(ExperimentConfig::load(&dir.path().join("missing.toml"))
            .unwrap_err()
            .is_config());
    }

    #[test]
    fn partial_toml_uses_defaults() {
        let text = r#"
            task_set = "three"
            rates = [50.0, 10.0]
            [data]
            kind = "synthetic"
            [data.spec]
            sample_rate = 200.0
            events_per_class = 12
            [[data.spec.classes]]
            label = "ButtonPress"
            depth = 0.8
            lag_s = 0.1
            width_s = 0.2
            [[data.spec.classes]]
            label = "Speech"
            depth = 0.7
            lag_s = -0.1
            width_s = 0.25
        "#;
        let config = ExperimentConfig::from_toml_str(text).unwrap();
        assert_eq!(config.rates, vec![50.0, 10.0]);
        assert_eq!(config.folds, 10);
        assert_eq!(config.pca_retain, 0.95);
        match &config.data {
            DataSource::Synthetic { spec } => {
                assert_eq!(spec.sample_rate, 200.0);
                assert_eq!(spec.classes.len(), 2);
            }
            other => panic!("expected synthetic source, got {other:?}"),
        }
    }

    // ---------------- gamma heuristic ----------------

    #[test]
    fn auto_gamma_matches_hand_computation() {
        // dims: var([0,2]) = 2, var([0,0]) = 0 → pooled = 1; γ = 1/(2·1).
        let train = vec![vec![0.0, 0.0], vec![2.0, 0.0]];
        assert!((auto_gamma(&train) - 0.5).abs() < 1e-12);
        // Degenerate variance falls back to 1/dim.
        let flat = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
        assert!((auto_gamma(&flat) - 0.5).abs() < 1e-12);
    }

    // ---------------- dataset assembly ----------------

    fn small_config(events: usize, rate: f64, folds: usize) -> ExperimentConfig {
        let mut config = ExperimentConfig::synthetic(TaskSet::Three, events, 11).unwrap();
        if let DataSource::Synthetic { spec } = &mut config.data {
            spec.sample_rate = rate;
        }
        config.rates = vec![rate.min(250.0), 25.0];
        config.folds = folds;
        config.classifiers = vec![ClassifierKind::SvmRbf, ClassifierKind::Mkl];
        config
    }

    #[test]
    fn dataset_has_aligned_views_and_balanced_labels() {
        let config = small_config(6, 250.0, 3);
        let ds = prepare_dataset(&config).unwrap();
        assert_eq!(ds.base_rate, 250.0);
        assert_eq!(ds.left.len(), ds.right.len());
        assert_eq!(ds.labels.len(), ds.left.len());
        // 6 presses + 6 speech + 6 random segments (mean event count).
        assert_eq!(ds.labels.len(), 18);
        for &class in TaskSet::Three.labels() {
            assert_eq!(ds.labels.iter().filter(|&&l| l == class).count(), 6);
        }
        for (l, r) in ds.left.iter().zip(&ds.right) {
            assert_eq!(l.label, r.label);
            assert_eq!(l.hemisphere, Hemisphere::Left);
            assert_eq!(r.hemisphere, Hemisphere::Right);
            assert_eq!(l.segment.ncols(), 500);
        }
    }

    #[test]
    fn random_segment_count_override() {
        let mut config = small_config(6, 250.0, 3);
        config.random_segments = Some(9);
        let ds = prepare_dataset(&config).unwrap();
        assert_eq!(
            ds.labels
                .iter()
                .filter(|&&l| l == TaskLabel::RandomSegment)
                .count(),
            9
        );
    }

    #[test]
    fn too_few_events_for_folds_is_a_data_error() {
        let config = small_config(4, 250.0, 5);
        let err = prepare_dataset(&config).unwrap_err();
        assert!(matches!(err, Error::TooFewSamples { .. }));
        assert!(err.is_data());
    }

    // ---------------- fold training and the leakage canary ----------------

    /// Random feature views with three separable-ish classes.
    fn toy_views(n_per_class: usize, dim: usize, seed: u64) -> (Vec<FeatureView>, Vec<FeatureView>, Vec<TaskLabel>) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let classes = [TaskLabel::ButtonPress, TaskLabel::Speech, TaskLabel::RandomSegment];
        let mut left = Vec::new();
        let mut right = Vec::new();
        let mut labels = Vec::new();
        for (ci, &class) in classes.iter().enumerate() {
            for _ in 0..n_per_class {
                let center = ci as f64 * 2.0;
                let make = |rng: &mut rand_chacha::ChaCha8Rng, hemisphere| FeatureView {
                    values: (0..dim)
                        .map(|_| center + rng.gen_range(-0.5..0.5))
                        .collect(),
                    label: class,
                    hemisphere,
                    rate: 10.0,
                    basis_id: None,
                };
                left.push(make(&mut rng, Hemisphere::Left));
                right.push(make(&mut rng, Hemisphere::Right));
                labels.push(class);
            }
        }
        (left, right, labels)
    }

    #[test]
    fn canary_test_fold_perturbations_leave_models_untouched() {
        let (left, right, labels) = toy_views(8, 6, 21);
        let lg = raw_dot_gram(&left).unwrap();
        let rg = raw_dot_gram(&right).unwrap();
        let assignment = stratified_folds(&labels, 4, 3).unwrap();
        let (train_idx, test_idx) = fold_partitions(&assignment, 4).swap_remove(0);
        let config = ExperimentConfig::synthetic(TaskSet::Three, 8, 3).unwrap();

        // Perturb every Gram entry touching a test sample (the model must
        // not depend on them), keeping symmetry.
        let mut lg_bad = lg.clone();
        let mut rg_bad = rg.clone();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        for &t in &test_idx {
            for j in 0..labels.len() {
                let noise = rng.gen_range(0.5..1.5);
                lg_bad[[t, j]] += noise;
                lg_bad[[j, t]] = lg_bad[[t, j]];
                rg_bad[[t, j] ] += noise;
                rg_bad[[j, t]] = rg_bad[[t, j]];
            }
        }

        for classifier in ClassifierKind::ALL {
            let clean = train_and_eval_fold(
                &lg, &rg, &labels, &train_idx, &test_idx, classifier, &config,
            )
            .unwrap();
            let poisoned = train_and_eval_fold(
                &lg_bad, &rg_bad, &labels, &train_idx, &test_idx, classifier, &config,
            )
            .unwrap();
            assert_eq!(
                clean.model_fingerprint, poisoned.model_fingerprint,
                "{classifier}: test-fold data leaked into training"
            );
        }

        // Sanity: perturbing a *training* entry must change the model.
        let mut lg_train = lg.clone();
        let i = train_idx[0];
        let j = train_idx[1];
        lg_train[[i, j]] += 0.37;
        lg_train[[j, i]] = lg_train[[i, j]];
        let clean = train_and_eval_fold(
            &lg, &rg, &labels, &train_idx, &test_idx, ClassifierKind::SvmRbf, &config,
        )
        .unwrap();
        let touched = train_and_eval_fold(
            &lg_train, &rg, &labels, &train_idx, &test_idx, ClassifierKind::SvmRbf, &config,
        )
        .unwrap();
        assert_ne!(clean.model_fingerprint, touched.model_fingerprint);
    }

    #[test]
    fn fold_input_validation() {
        let (left, right, labels) = toy_views(4, 3, 2);
        let lg = raw_dot_gram(&left).unwrap();
        let rg = raw_dot_gram(&right).unwrap();
        let config = ExperimentConfig::default();
        let err = train_and_eval_fold(
            &lg, &rg, &labels, &[0, 1], &[1, 2], ClassifierKind::SvmLinear, &config,
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidParams(_)), "overlap: {err}");
        let err = train_and_eval_fold(
            &lg, &rg, &labels, &[0, 1], &[], ClassifierKind::SvmLinear, &config,
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidParams(_)));
        let small = Array2::<f64>::zeros((2, 2));
        let err = train_and_eval_fold(
            &small, &rg, &labels, &[0, 1], &[2], ClassifierKind::SvmLinear, &config,
        )
        .unwrap_err();
        assert!(matches!(err, Error::SizeMismatch(_)));
    }

    // ---------------- end-to-end runs ----------------

    #[test]
    fn small_experiment_reports_are_complete_and_reproducible() {
        let mut config = small_config(8, 250.0, 4);
        config.rates = vec![250.0, 25.0];
        let report = run_experiment(&config).unwrap();

        assert_eq!(report.cells.len(), 4); // 2 classifiers × 2 rates
        assert_eq!(report.class_order, TaskSet::Three.labels());
        assert!((report.chance.uniform_pct - 100.0 / 3.0).abs() < 1e-9);
        for cell in &report.cells {
            assert_eq!(cell.fold_accuracies_pct.len(), 4);
            let mean: f64 = cell.fold_accuracies_pct.iter().sum::<f64>() / 4.0;
            assert!((cell.mean_accuracy_pct - mean).abs() < 1e-9);
            assert!(cell.min_retained_variance >= config.pca_retain);
            assert!(cell.zero_truth_rows.is_empty());
            for row in &cell.confusion {
                let sum: f64 = row.iter().sum();
                assert!((sum - 100.0).abs() < 0.01, "row sums to {sum}");
            }
            // Clean synthetic data at healthy rates should classify well
            // above chance; the acceptance gate pins the strong thresholds.
            assert!(
                cell.mean_accuracy_pct > 50.0,
                "{} @ {} Hz: {}",
                cell.classifier,
                cell.rate_hz,
                cell.mean_accuracy_pct
            );
        }
        // Cells are ordered classifier-major in config order.
        assert_eq!(report.cells[0].classifier, ClassifierKind::SvmRbf);
        assert_eq!(report.cells[0].rate_hz, 250.0);
        assert_eq!(report.cells[1].rate_hz, 25.0);
        assert_eq!(report.cells[2].classifier, ClassifierKind::Mkl);

        let again = run_experiment(&config).unwrap();
        assert_eq!(
            report.to_json_without_timing().unwrap(),
            again.to_json_without_timing().unwrap(),
            "reports must be byte-identical modulo timing"
        );
        assert_ne!(report.to_json().unwrap(), String::new());
        assert!(!report.render_table().is_empty());
        assert!(report.to_csv().lines().count() > 1);
    }

    #[test]
    fn single_entry_mkl_bank_matches_plain_svm_end_to_end() {
        // An MKL bank with one kernel over the concatenated views is the
        // same learning problem as the plain SVM on those views.
        let mut config = small_config(6, 250.0, 3);
        config.rates = vec![25.0];
        config.gamma = Some(0.05);
        config.svm_c = 1.0;
        config.mkl.c = 1.0;
        config.mkl.bank = vec![BankEntry {
            view: "both".into(),
            spec: KernelSpec::Rbf { gamma: 0.05 },
        }];
        config.classifiers = vec![ClassifierKind::SvmRbf, ClassifierKind::Mkl];
        let report = run_experiment(&config).unwrap();
        let svm = report.cell(ClassifierKind::SvmRbf, 25.0).unwrap();
        let mkl = report.cell(ClassifierKind::Mkl, 25.0).unwrap();
        assert_eq!(
            svm.fold_accuracies_pct, mkl.fold_accuracies_pct,
            "M=1 bank must reduce to the plain SVM fold by fold"
        );
    }

    #[test]
    fn grid_search_runs_and_stays_deterministic() {
        let mut config = small_config(6, 250.0, 3);
        config.rates = vec![25.0];
        config.classifiers = vec![ClassifierKind::SvmLinear];
        config.grid_search = true;
        let a = run_experiment(&config).unwrap();
        let b = run_experiment(&config).unwrap();
        assert_eq!(
            a.to_json_without_timing().unwrap(),
            b.to_json_without_timing().unwrap()
        );
    }
}
