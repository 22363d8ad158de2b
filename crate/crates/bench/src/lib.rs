//! Deterministic input builders shared by the pipeline benchmarks.
//!
//! Everything here is seeded so benchmark runs measure the same work every
//! time; nothing in this crate is part of the library API.

use lfpmkl::kernel::{gram, KernelMatrix, KernelSpec};
use lfpmkl::lfp::{EventWindow, Hemisphere, TaskLabel};
use ndarray::Array2;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

/// Three linearly separated point clouds with per-coordinate jitter, labeled
/// with the first three task classes.
pub fn class_vectors(
    n_per_class: usize,
    dim: usize,
    seed: u64,
) -> (Vec<Vec<f64>>, Vec<TaskLabel>) {
    let classes = [
        TaskLabel::ButtonPress,
        TaskLabel::Speech,
        TaskLabel::RandomSegment,
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vectors = Vec::with_capacity(classes.len() * n_per_class);
    let mut labels = Vec::with_capacity(classes.len() * n_per_class);
    for (ci, &label) in classes.iter().enumerate() {
        for _ in 0..n_per_class {
            let v: Vec<f64> = (0..dim)
                .map(|d| {
                    let center = if d % classes.len() == ci { 2.0 } else { 0.0 };
                    center + rng.gen_range(-0.5..0.5)
                })
                .collect();
            vectors.push(v);
            labels.push(label);
        }
    }
    (vectors, labels)
}

/// A multi-pair event window carrying a β-band burst over a slow drift,
/// matching the shape the wavelet stage sees in real runs.
pub fn sine_window(pairs: usize, len: usize, rate: f64) -> EventWindow {
    let mut segment = Array2::<f64>::zeros((pairs, len));
    for p in 0..pairs {
        for t in 0..len {
            let secs = t as f64 / rate;
            let burst = (-((secs - 1.0) / 0.25).powi(2)).exp();
            segment[[p, t]] = burst * (2.0 * std::f64::consts::PI * 20.0 * secs).sin()
                + 0.3 * (2.0 * std::f64::consts::PI * 1.5 * secs + p as f64).sin();
        }
    }
    EventWindow {
        segment,
        label: TaskLabel::ButtonPress,
        hemisphere: Hemisphere::Left,
        sample_rate: rate,
    }
}

/// RBF Gram matrices over the same vectors at several widths — a ready-made
/// kernel bank for MKL benchmarks.
pub fn rbf_bank(vectors: &[Vec<f64>], gammas: &[f64]) -> Vec<KernelMatrix> {
    gammas
        .iter()
        .map(|&gamma| {
            gram(vectors, &KernelSpec::Rbf { gamma }, "bench").expect("bench gram")
        })
        .collect()
}
