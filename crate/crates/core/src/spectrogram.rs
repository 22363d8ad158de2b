//! Complex-Morlet wavelet spectrograms of β-band activity.
//!
//! The transform correlates the signal with a complex Morlet wavelet
//!
//! ```text
//! ψ(t) = (π·f_b)^(−1/2) · e^(−t²/f_b) · e^(j·2π·f_c·t)
//! ```
//!
//! at unit scale, sweeping the center frequency f_c over a grid instead of
//! dilating the wavelet; rows of the output are |X(f_c, b)| over window
//! positions b. The correlation
//!
//! ```text
//! X(f_c, b) = Σ_n x[n] · ψ*( (n − b)/rate ) / rate
//! ```
//!
//! is evaluated as an FFT-based linear convolution. The wavelet is truncated
//! where its Gaussian envelope falls below 10⁻⁶ of the peak, and window
//! edges are zero-padded, so positions near the edges see a one-sidedly
//! truncated signal (identically for every window, which is what matters
//! downstream).

use crate::error::{Error, Result};
use crate::lfp::EventWindow;
use ndarray::Array2;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::PI;
use std::sync::Arc;

/// Band edges enforced on center-frequency grids (Hz).
pub const BETA_LOW: f64 = 13.0;
pub const BETA_HIGH: f64 = 35.0;

/// Wavelet bandwidth and center-frequency grid.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MorletParams {
    /// Bandwidth parameter f_b (s²); larger means narrower in frequency.
    pub f_b: f64,
    /// Strictly increasing center frequencies (Hz).
    pub freq_grid: Vec<f64>,
}

impl MorletParams {
    /// The default β-band grid: 13 Hz through 35 Hz in 1 Hz steps.
    pub fn beta_band(f_b: f64) -> Result<Self> {
        let grid = (13..=35).map(f64::from).collect();
        Self::new(f_b, grid)
    }

    /// Custom grid constrained to the β band [13, 35] Hz.
    pub fn new(f_b: f64, freq_grid: Vec<f64>) -> Result<Self> {
        let p = Self::unrestricted(f_b, freq_grid)?;
        if let Some(f) = p
            .freq_grid
            .iter()
            .find(|&&f| !(BETA_LOW..=BETA_HIGH).contains(&f))
        {
            return Err(Error::InvalidParams(format!(
                "center frequency {f} Hz outside β band [{BETA_LOW}, {BETA_HIGH}]; \
                 use MorletParams::unrestricted to allow this"
            )));
        }
        Ok(p)
    }

    /// Custom grid without the β-band restriction (still positive and
    /// strictly increasing).
    pub fn unrestricted(f_b: f64, freq_grid: Vec<f64>) -> Result<Self> {
        if !(f_b > 0.0) || !f_b.is_finite() {
            return Err(Error::InvalidParams(format!("f_b must be > 0, got {f_b}")));
        }
        if freq_grid.is_empty() {
            return Err(Error::InvalidParams("empty frequency grid".into()));
        }
        if freq_grid.iter().any(|f| !(*f > 0.0) || !f.is_finite()) {
            return Err(Error::InvalidParams("frequencies must be positive".into()));
        }
        if freq_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParams(
                "frequency grid must be strictly increasing".into(),
            ));
        }
        Ok(MorletParams { f_b, freq_grid })
    }
}

/// Magnitude spectrogram: rows follow `freq_grid` (possibly repeated in
/// channel-major blocks after stacking), columns are window samples.
#[derive(Debug, Clone)]
pub struct Spectrogram {
    pub values: Array2<f64>,
    /// Sampling rate of the columns (Hz); the raw window rate until decimated.
    pub time_rate: f64,
    pub freq_grid: Vec<f64>,
    /// Source channel description, e.g. `Left/1-2` or `Left/stack`.
    pub channel: String,
}

/// ψ(t) for bandwidth `f_b` and center frequency `f_c`.
pub fn morlet_value(t: f64, f_b: f64, f_c: f64) -> Complex64 {
    let envelope = (PI * f_b).sqrt().recip() * (-t * t / f_b).exp();
    Complex64::from_polar(envelope, 2.0 * PI * f_c * t)
}

/// Half-width of the truncated wavelet in samples: the Gaussian envelope is
/// kept down to 10⁻⁶ of its peak, i.e. |t| ≤ √(f_b·ln 10⁶).
fn half_taps(f_b: f64, rate: f64) -> usize {
    (rate * (f_b * 6.0 * std::f64::consts::LN_10).sqrt()).ceil() as usize
}

/// Precomputed FFT workspace for one (signal length, rate, params) combo.
///
/// Building the plan costs one FFT per grid frequency; transforming a signal
/// then costs one forward and |grid| inverse FFTs, so reuse the plan across
/// the channels and windows of an experiment.
pub struct CwtPlan {
    rate: f64,
    params: MorletParams,
    signal_len: usize,
    half: usize,
    fft_len: usize,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
    /// FFT of the reversed-conjugated wavelet, one per grid frequency.
    kernels: Vec<Vec<Complex64>>,
}

impl CwtPlan {
    pub fn new(signal_len: usize, rate: f64, params: &MorletParams) -> Result<Self> {
        if signal_len == 0 {
            return Err(Error::InvalidParams("empty signal".into()));
        }
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(Error::InvalidParams(format!("bad sample rate {rate}")));
        }
        let half = half_taps(params.f_b, rate);
        let fft_len = (signal_len + 2 * half).next_power_of_two();
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(fft_len);
        let ifft = planner.plan_fft_inverse(fft_len);
        let mut kernels = Vec::with_capacity(params.freq_grid.len());
        for &f_c in &params.freq_grid {
            // Kernel g[i] = ψ*((half − i)/rate): a linear convolution with g
            // evaluated at output index b + half equals the correlation
            // Σ_n x[n]·ψ*((n − b)/rate).
            let mut g = vec![Complex64::new(0.0, 0.0); fft_len];
            for i in 0..=(2 * half) {
                let t = (half as f64 - i as f64) / rate;
                g[i] = morlet_value(t, params.f_b, f_c).conj();
            }
            fft.process(&mut g);
            kernels.push(g);
        }
        Ok(CwtPlan {
            rate,
            params: params.clone(),
            signal_len,
            half,
            fft_len,
            fft,
            ifft,
            kernels,
        })
    }

    /// Complex CWT coefficients, rows following the frequency grid.
    pub fn transform(&self, signal: &[f64]) -> Result<Array2<Complex64>> {
        if signal.len() != self.signal_len {
            return Err(Error::DimensionMismatch {
                expected: self.signal_len,
                got: signal.len(),
            });
        }
        let n = signal.len();
        let mut spectrum = vec![Complex64::new(0.0, 0.0); self.fft_len];
        for (dst, &x) in spectrum.iter_mut().zip(signal) {
            *dst = Complex64::new(x, 0.0);
        }
        self.fft.process(&mut spectrum);

        let dt = 1.0 / self.rate;
        let scale = dt / self.fft_len as f64; // quadrature dt and FFT normalization
        let mut out = Array2::<Complex64>::zeros((self.params.freq_grid.len(), n));
        let mut buf = vec![Complex64::new(0.0, 0.0); self.fft_len];
        for (row, kernel) in self.kernels.iter().enumerate() {
            for i in 0..self.fft_len {
                buf[i] = spectrum[i] * kernel[i];
            }
            self.ifft.process(&mut buf);
            for b in 0..n {
                out[[row, b]] = buf[b + self.half] * scale;
            }
        }
        Ok(out)
    }
}

/// Complex-valued CWT of one signal (see module docs for the convention).
pub fn cwt_cmorlet_complex(
    signal: &[f64],
    sample_rate: f64,
    params: &MorletParams,
) -> Result<Array2<Complex64>> {
    CwtPlan::new(signal.len(), sample_rate, params)?.transform(signal)
}

/// Magnitude spectrogram of one signal.
pub fn cwt_cmorlet(signal: &[f64], sample_rate: f64, params: &MorletParams) -> Result<Spectrogram> {
    let complex = cwt_cmorlet_complex(signal, sample_rate, params)?;
    Ok(Spectrogram {
        values: complex.mapv(|z| z.norm()),
        time_rate: sample_rate,
        freq_grid: params.freq_grid.clone(),
        channel: String::new(),
    })
}

/// Stacked per-channel spectrogram of one hemisphere window.
///
/// Channel blocks keep the bipolar order of the window's rows (0-1, 1-2,
/// 2-3): output rows `[c·|grid| .. (c+1)·|grid|)` hold channel c.
pub fn hemisphere_spectrogram(win: &EventWindow, params: &MorletParams) -> Result<Spectrogram> {
    let plan = CwtPlan::new(win.segment.ncols(), win.sample_rate, params)?;
    hemisphere_spectrogram_with_plan(win, params, &plan)
}

/// [`hemisphere_spectrogram`] with a caller-managed [`CwtPlan`] so that many
/// windows of identical shape share the wavelet FFTs.
pub fn hemisphere_spectrogram_with_plan(
    win: &EventWindow,
    params: &MorletParams,
    plan: &CwtPlan,
) -> Result<Spectrogram> {
    let channels = win.segment.nrows();
    let cols = win.segment.ncols();
    let bins = params.freq_grid.len();
    let mut values = Array2::<f64>::zeros((channels * bins, cols));
    for c in 0..channels {
        let row: Vec<f64> = win.segment.row(c).to_vec();
        let complex = plan.transform(&row)?;
        for r in 0..bins {
            for t in 0..cols {
                values[[c * bins + r, t]] = complex[[r, t]].norm();
            }
        }
    }
    Ok(Spectrogram {
        values,
        time_rate: win.sample_rate,
        freq_grid: params.freq_grid.clone(),
        channel: format!("{}/stack{}", win.hemisphere, channels),
    })
}

/// Write a spectrogram as raw little-endian f32 values (row-major) plus a
/// JSON header describing the layout.
pub fn dump_spectrogram(spec: &Spectrogram, path: &std::path::Path) -> Result<()> {
    use std::io::Write;
    let mut bin = std::io::BufWriter::new(std::fs::File::create(path)?);
    for v in spec.values.iter() {
        bin.write_all(&(*v as f32).to_le_bytes())?;
    }
    bin.flush()?;
    let header = serde_json::json!({
        "rows": spec.values.nrows(),
        "cols": spec.values.ncols(),
        "time_rate": spec.time_rate,
        "freq_grid": spec.freq_grid,
        "channel": spec.channel,
        "dtype": "f32le",
        "order": "row-major",
    });
    let mut hdr_path = path.as_os_str().to_owned();
    hdr_path.push(".json");
    std::fs::write(hdr_path, serde_json::to_string_pretty(&header)?.as_bytes())?;
    Ok(())
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::ParseError {
            offset: 0,
            reason: e.to_string(),
        }
    }
}
