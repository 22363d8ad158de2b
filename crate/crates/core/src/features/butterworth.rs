//! Butterworth IIR design (cascaded second-order sections) and zero-phase
//! filtering.
//!
//! Filters are designed from the analog Butterworth prototype: poles evenly
//! spaced on the left half of the |s| = ω_c circle, grouped into conjugate
//! pairs, each pair mapped to a digital biquad by the bilinear transform
//! with the cutoff pre-warped so the −3 dB point lands exactly on the
//! requested frequency.
//!
//! Zero-phase application runs the cascade forward and backward (squaring
//! the magnitude response, cancelling phase). Each pass pads the signal by
//! odd extension and starts sections from their constant-input steady state,
//! which keeps DC exactly and suppresses edge transients. The two pass
//! orders (forward-first and backward-first) are averaged, so reversing the
//! input exactly reverses the output.

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::f64::consts::PI;

/// One normalized biquad: y = b0·x + b1·x₋₁ + b2·x₋₂ − a1·y₋₁ − a2·y₋₂.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
}

impl Biquad {
    fn response_at(&self, z_inv: Complex64) -> Complex64 {
        let num = Complex64::new(self.b0, 0.0) + z_inv * (self.b1 + self.b2 * z_inv);
        let den = Complex64::new(1.0, 0.0) + z_inv * (self.a1 + self.a2 * z_inv);
        num / den
    }

    fn dc_gain(&self) -> f64 {
        (self.b0 + self.b1 + self.b2) / (1.0 + self.a1 + self.a2)
    }

    /// Digital pole pair of this section.
    fn poles(&self) -> [Complex64; 2] {
        // Roots of z² + a1·z + a2.
        let half = -self.a1 / 2.0;
        let disc = Complex64::new(self.a1 * self.a1 / 4.0 - self.a2, 0.0).sqrt();
        [Complex64::new(half, 0.0) + disc, Complex64::new(half, 0.0) - disc]
    }
}

/// Shared SOS-cascade machinery for the low-pass and high-pass variants.
#[derive(Debug, Clone)]
pub struct SosCascade {
    sections: Vec<Biquad>,
}

/// Even-order Butterworth low-pass as cascaded second-order sections.
#[derive(Debug, Clone)]
pub struct ButterworthLowPass {
    pub order: usize,
    pub cutoff: f64,
    pub design_rate: f64,
    cascade: SosCascade,
}

/// Even-order Butterworth high-pass (used e.g. as half of an acquisition
/// band-pass); same machinery as the low-pass.
#[derive(Debug, Clone)]
pub struct ButterworthHighPass {
    pub order: usize,
    pub cutoff: f64,
    pub design_rate: f64,
    cascade: SosCascade,
}

fn validate(order: usize, cutoff: f64, rate: f64) -> Result<()> {
    if order == 0 || order % 2 != 0 {
        return Err(Error::InvalidParams(format!(
            "Butterworth order must be a positive even number, got {order}"
        )));
    }
    if !(rate > 0.0) || !rate.is_finite() {
        return Err(Error::InvalidCutoff { cutoff, rate });
    }
    if !(cutoff > 0.0) || !(cutoff < rate / 2.0) {
        return Err(Error::InvalidCutoff { cutoff, rate });
    }
    Ok(())
}

/// Conjugate-pair analog prototype angles for an order-n Butterworth.
///
/// Poles sit at ω_c·e^{jθ_k}, θ_k = π(2k + n + 1)/(2n); for even n the
/// k-th and (n−1−k)-th are conjugates, so only k < n/2 is enumerated.
fn prototype_angles(order: usize) -> Vec<f64> {
    (0..order / 2)
        .map(|k| PI * (2.0 * k as f64 + order as f64 + 1.0) / (2.0 * order as f64))
        .collect()
}

fn design_sections(order: usize, cutoff: f64, rate: f64, highpass: bool) -> Vec<Biquad> {
    // Pre-warp so the bilinear transform maps the analog cutoff exactly
    // onto the digital one.
    let warped = 2.0 * rate * (PI * cutoff / rate).tan();
    let k = 2.0 * rate;
    prototype_angles(order)
        .into_iter()
        .map(|theta| {
            // Analog section s² + a1_a·s + ω², a1_a = −2ω·cosθ > 0.
            let a1_a = -2.0 * warped * theta.cos();
            let w2 = warped * warped;
            let a0d = k * k + a1_a * k + w2;
            let a1d = 2.0 * (w2 - k * k);
            let a2d = k * k - a1_a * k + w2;
            let (b0, b1, b2) = if highpass {
                (k * k, -2.0 * k * k, k * k)
            } else {
                (w2, 2.0 * w2, w2)
            };
            Biquad {
                b0: b0 / a0d,
                b1: b1 / a0d,
                b2: b2 / a0d,
                a1: a1d / a0d,
                a2: a2d / a0d,
            }
        })
        .collect()
}

/// Design an even-order Butterworth low-pass (default order 10).
pub fn design_butterworth(order: usize, cutoff: f64, rate: f64) -> Result<ButterworthLowPass> {
    validate(order, cutoff, rate)?;
    Ok(ButterworthLowPass {
        order,
        cutoff,
        design_rate: rate,
        cascade: SosCascade {
            sections: design_sections(order, cutoff, rate, false),
        },
    })
}

/// Design an even-order Butterworth high-pass.
pub fn design_butterworth_highpass(
    order: usize,
    cutoff: f64,
    rate: f64,
) -> Result<ButterworthHighPass> {
    validate(order, cutoff, rate)?;
    Ok(ButterworthHighPass {
        order,
        cutoff,
        design_rate: rate,
        cascade: SosCascade {
            sections: design_sections(order, cutoff, rate, true),
        },
    })
}

impl SosCascade {
    /// |H(e^{j2πf/fs})| of a single pass.
    fn magnitude_at(&self, f: f64, rate: f64) -> f64 {
        let w = 2.0 * PI * f / rate;
        let z_inv = Complex64::from_polar(1.0, -w);
        self.sections
            .iter()
            .map(|s| s.response_at(z_inv).norm())
            .product()
    }

    fn poles(&self) -> Vec<Complex64> {
        self.sections.iter().flat_map(|s| s.poles()).collect()
    }

    /// Samples needed for the slowest pole to decay to ~1e−9.
    fn transient_len(&self) -> usize {
        let pmax = self
            .poles()
            .iter()
            .map(|p| p.norm())
            .fold(0.0_f64, f64::max)
            .min(1.0 - 1e-12);
        let n = (9.0 * std::f64::consts::LN_10 / (1.0 - pmax)).ceil();
        (n as usize).max(6 * self.sections.len() + 3)
    }

    /// One causal pass (direct form II transposed), sections started at the
    /// constant-input steady state for `x[0]` so constant signals pass
    /// through unchanged.
    fn forward(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        let mut level = if x.is_empty() { 0.0 } else { x[0] };
        for s in &self.sections {
            let g = s.dc_gain();
            let mut s1 = (g - s.b0) * level;
            let mut s2 = (s.b2 - s.a2 * g) * level;
            for v in y.iter_mut() {
                let x_in = *v;
                let out = s.b0 * x_in + s1;
                s1 = s.b1 * x_in - s.a1 * out + s2;
                s2 = s.b2 * x_in - s.a2 * out;
                *v = out;
            }
            level *= g;
        }
        y
    }

    /// Forward-then-backward zero-phase pass over an odd-extended signal.
    fn filtfilt_forward_first(&self, x: &[f64]) -> Vec<f64> {
        if x.len() < 2 {
            return x.to_vec();
        }
        let pad = self.transient_len().min(x.len() - 1);
        let n = x.len();
        let mut ext = Vec::with_capacity(n + 2 * pad);
        for i in (1..=pad).rev() {
            ext.push(2.0 * x[0] - x[i]);
        }
        ext.extend_from_slice(x);
        for i in 1..=pad {
            ext.push(2.0 * x[n - 1] - x[n - 1 - i]);
        }
        let mut y = self.forward(&ext);
        y.reverse();
        let mut y = self.forward(&y);
        y.reverse();
        y[pad..pad + n].to_vec()
    }

    /// Zero-phase filtering: average of the forward-first and
    /// backward-first double passes, hence exactly reversal-equivariant.
    fn zero_phase(&self, x: &[f64]) -> Vec<f64> {
        let a = self.filtfilt_forward_first(x);
        let mut rev: Vec<f64> = x.iter().rev().copied().collect();
        rev = self.filtfilt_forward_first(&rev);
        rev.reverse();
        a.iter().zip(rev).map(|(p, q)| 0.5 * (p + q)).collect()
    }
}

macro_rules! filter_api {
    ($ty:ident) => {
        impl $ty {
            /// Single-pass magnitude response at frequency `f` (Hz).
            pub fn magnitude_at(&self, f: f64) -> f64 {
                self.cascade.magnitude_at(f, self.design_rate)
            }

            /// All digital poles of the cascade.
            pub fn poles(&self) -> Vec<Complex64> {
                self.cascade.poles()
            }

            /// One causal filtering pass.
            pub fn filter(&self, x: &[f64]) -> Vec<f64> {
                self.cascade.forward(x)
            }

            /// Zero-phase (forward-backward) filtering.
            pub fn zero_phase(&self, x: &[f64]) -> Vec<f64> {
                self.cascade.zero_phase(x)
            }
        }
    };
}

filter_api!(ButterworthLowPass);
filter_api!(ButterworthHighPass);
