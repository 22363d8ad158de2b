//! Feature extraction: spectrogram decimation, flattening, and PCA.
//!
//! Spectrogram rows are low-passed (zero-phase, order-10 Butterworth at
//! 0.45× the target rate) and resampled onto the target-rate grid, then
//! flattened row-major into one feature vector per window and hemisphere.
//! Per-fold PCA reduces those vectors to the leading principal components
//! that keep ≥ 95% of the training variance.

pub mod butterworth;
mod pca;

pub use butterworth::{
    design_butterworth, design_butterworth_highpass, ButterworthHighPass, ButterworthLowPass,
};
pub use pca::{fit_pca, fit_pca_from_gram, project, reconstruct, PcaBasis, PcaGramProjector};

use crate::error::{Error, Result};
use crate::lfp::{Hemisphere, TaskLabel};
use crate::spectrogram::Spectrogram;

/// One flattened feature vector with its provenance.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct FeatureView {
    pub values: Vec<f64>,
    pub label: TaskLabel,
    pub hemisphere: Hemisphere,
    /// Effective sampling rate (Hz) of the spectrogram columns that were
    /// flattened into `values`.
    pub rate: f64,
    /// Identifier of the PCA basis these values live in, if projected.
    pub basis_id: Option<String>,
}

/// Default anti-aliasing cutoff as a fraction of the target rate.
pub const ANTI_ALIAS_FRACTION: f64 = 0.45;

/// Order of the anti-aliasing low-pass.
pub const ANTI_ALIAS_ORDER: usize = 10;

/// Low-pass and resample every spectrogram row onto the target-rate grid.
///
/// Output columns sit at times `j / target_rate` for
/// `j = 0 .. floor(cols · target/time_rate)`; non-integral rate ratios are
/// handled by linear interpolation of the filtered rows (integral ratios
/// land exactly on filtered samples). `target_rate == time_rate` is the
/// identity; the filter is bypassed.
pub fn decimate_spectrogram(spec: &Spectrogram, target_rate: f64) -> Result<Spectrogram> {
    let rate = spec.time_rate;
    if !(target_rate > 0.0) || !target_rate.is_finite() {
        return Err(Error::InvalidParams(format!(
            "target rate must be positive, got {target_rate}"
        )));
    }
    if target_rate > rate * (1.0 + 1e-12) {
        return Err(Error::UpsampleRequested {
            target: target_rate,
            rate,
        });
    }
    if (target_rate - rate).abs() <= 1e-12 * rate {
        let mut out = spec.clone();
        out.time_rate = target_rate;
        return Ok(out);
    }

    let filter = design_butterworth(ANTI_ALIAS_ORDER, ANTI_ALIAS_FRACTION * target_rate, rate)?;
    let in_cols = spec.values.ncols();
    let out_cols = (in_cols as f64 * target_rate / rate + 1e-9).floor() as usize;
    let ratio = rate / target_rate;
    let mut values = ndarray::Array2::<f64>::zeros((spec.values.nrows(), out_cols));
    for (r, row) in spec.values.outer_iter().enumerate() {
        let filtered = filter.zero_phase(&row.to_vec());
        for j in 0..out_cols {
            let pos = j as f64 * ratio;
            let i0 = (pos.floor() as usize).min(in_cols - 1);
            let i1 = (i0 + 1).min(in_cols - 1);
            let frac = (pos - i0 as f64).clamp(0.0, 1.0);
            values[[r, j]] = filtered[i0] + frac * (filtered[i1] - filtered[i0]);
        }
    }
    Ok(Spectrogram {
        values,
        time_rate: target_rate,
        freq_grid: spec.freq_grid.clone(),
        channel: spec.channel.clone(),
    })
}

/// Flatten a spectrogram row-major (row 0 first, each row left to right).
pub fn flatten(spec: &Spectrogram, label: TaskLabel, hemisphere: Hemisphere) -> FeatureView {
    let values = spec.values.iter().copied().collect();
    FeatureView {
        values,
        label,
        hemisphere,
        rate: spec.time_rate,
        basis_id: None,
    }
}
