//! Synthetic multi-contact LFP generator.
//!
//! Produces recordings whose structure mirrors what the pipeline expects
//! from depth electrodes: a β-band carrier whose amplitude is transiently
//! suppressed around behavioral events (with class-specific depth, latency
//! and duration), per-contact attenuation so bipolar re-referencing keeps
//! signal, pink-ish AR(1) background noise per contact, and a per-hemisphere
//! common-mode component that bipolar re-referencing cancels down to the
//! f32 rounding of the stored channels.

use super::{ContactAssignment, EventMarker, Hemisphere, LfpRecording, TaskLabel};
use crate::error::{Error, Result};
use crate::features::{design_butterworth, design_butterworth_highpass};
use ndarray::Array2;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Event-locked β-suppression signature of one behavior class.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ClassProfile {
    pub label: TaskLabel,
    /// Fractional carrier suppression at the trough, in (0, 1].
    pub depth: f64,
    /// Trough latency relative to the event marker, seconds (may be < 0).
    pub lag_s: f64,
    /// Gaussian σ of the suppression, seconds.
    pub width_s: f64,
}

/// Full description of a synthetic recording; identical specs generate
/// bit-identical recordings.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub sample_rate: f64,
    pub classes: Vec<ClassProfile>,
    pub events_per_class: usize,
    /// Seconds between consecutive event onsets.
    pub spacing_s: f64,
    /// Seconds of event-free signal at each end (must cover a ±1 s window).
    pub margin_s: f64,
    pub carrier_hz: f64,
    pub carrier_amp: f64,
    /// Carrier gain per contact index (0 = deepest); adjacent differences
    /// are what survives bipolar re-referencing.
    pub contact_gains: [f64; 4],
    /// Carrier gain multiplier applied to the right hemisphere.
    pub right_gain: f64,
    /// Per-event relative variation of suppression depth, in [0, 0.5].
    pub depth_jitter: f64,
    pub noise_amp: f64,
    pub common_mode_amp: f64,
    /// Apply a 1–100 Hz zero-phase band-pass (100 Hz capped at 0.45·rate).
    pub bandpass: bool,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            sample_rate: 5000.0,
            classes: Vec::new(),
            events_per_class: 40,
            spacing_s: 4.0,
            margin_s: 2.0,
            carrier_hz: 20.0,
            carrier_amp: 1.0,
            contact_gains: [1.0, 0.65, 0.35, 0.1],
            right_gain: 0.8,
            depth_jitter: 0.1,
            noise_amp: 0.3,
            common_mode_amp: 0.5,
            bandpass: true,
            seed: 0,
        }
    }
}

/// Built-in suppression signatures, one per real behavior class.
fn builtin_profile(label: TaskLabel) -> Option<ClassProfile> {
    let (depth, lag_s, width_s) = match label {
        TaskLabel::ButtonPress => (0.85, 0.10, 0.18),
        TaskLabel::MouthMovement => (0.55, 0.32, 0.30),
        TaskLabel::Speech => (0.75, -0.18, 0.22),
        TaskLabel::ArmMovement => (0.65, 0.05, 0.45),
        TaskLabel::RandomSegment => return None,
    };
    Some(ClassProfile {
        label,
        depth,
        lag_s,
        width_s,
    })
}

impl SyntheticSpec {
    /// Spec with the built-in signature for each requested class.
    /// `RandomSegment` is rejected: it is sampled from quiet stretches at
    /// feature-extraction time, not generated as events.
    pub fn standard(labels: &[TaskLabel], events_per_class: usize, seed: u64) -> Result<Self> {
        let mut classes = Vec::with_capacity(labels.len());
        for &label in labels {
            classes.push(builtin_profile(label).ok_or_else(|| {
                Error::InvalidSpec(format!(
                    "{label} has no event signature; random segments are drawn \
                     from quiet signal instead of being generated"
                ))
            })?);
        }
        Ok(Self {
            classes,
            events_per_class,
            seed,
            ..Self::default()
        })
    }

    pub fn total_events(&self) -> usize {
        self.classes.len() * self.events_per_class
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidSpec(msg));
        if !(self.sample_rate.is_finite() && self.sample_rate > 0.0) {
            return fail(format!("sample_rate must be positive, got {}", self.sample_rate));
        }
        if self.classes.is_empty() {
            return fail("at least one class profile is required".into());
        }
        for (i, c) in self.classes.iter().enumerate() {
            if c.label == TaskLabel::RandomSegment {
                return fail("RandomSegment cannot have an event profile".into());
            }
            if self.classes[..i].iter().any(|o| o.label == c.label) {
                return fail(format!("duplicate class profile for {}", c.label));
            }
            if !(c.depth > 0.0 && c.depth <= 1.0) {
                return fail(format!("{}: depth must lie in (0, 1], got {}", c.label, c.depth));
            }
            if !(c.width_s > 0.0 && c.width_s.is_finite()) {
                return fail(format!("{}: width_s must be positive, got {}", c.label, c.width_s));
            }
            if !c.lag_s.is_finite() {
                return fail(format!("{}: lag_s must be finite", c.label));
            }
        }
        if self.events_per_class == 0 {
            return fail("events_per_class must be at least 1".into());
        }
        if !(self.carrier_hz > 0.0 && self.carrier_hz < self.sample_rate / 2.0) {
            return fail(format!(
                "carrier_hz must lie in (0, rate/2) = (0, {}), got {}",
                self.sample_rate / 2.0,
                self.carrier_hz
            ));
        }
        if !(self.carrier_amp > 0.0) {
            return fail(format!("carrier_amp must be positive, got {}", self.carrier_amp));
        }
        if self.margin_s < 1.0 {
            return fail(format!(
                "margin_s must be at least 1.0 s so ±1 s windows fit, got {}",
                self.margin_s
            ));
        }
        if self.spacing_s < 2.5 {
            return fail(format!(
                "spacing_s must be at least 2.5 s to keep events separable, got {}",
                self.spacing_s
            ));
        }
        if !(0.0..=0.5).contains(&self.depth_jitter) {
            return fail(format!("depth_jitter must lie in [0, 0.5], got {}", self.depth_jitter));
        }
        if self.noise_amp < 0.0 || self.common_mode_amp < 0.0 {
            return fail("noise_amp and common_mode_amp must be non-negative".into());
        }
        if self.contact_gains.iter().any(|g| !g.is_finite() || *g < 0.0) {
            return fail("contact_gains must be non-negative".into());
        }
        if self.bandpass && self.sample_rate < 8.0 {
            return fail(format!(
                "band-pass needs sample_rate ≥ 8 Hz (1 Hz high-pass), got {}",
                self.sample_rate
            ));
        }
        Ok(())
    }
}

/// First-order autoregressive noise with unit marginal variance; the pole is
/// tied to ~3 Hz so the spectrum falls off like recorded field potentials.
struct Ar1 {
    rho: f64,
    drive: f64,
    state: f64,
}

impl Ar1 {
    fn new(rate: f64) -> Self {
        let rho = (-2.0 * std::f64::consts::PI * 3.0 / rate).exp();
        Self {
            rho,
            drive: (1.0 - rho * rho).sqrt(),
            state: 0.0,
        }
    }

    fn next(&mut self, rng: &mut ChaCha8Rng) -> f64 {
        let w: f64 = rng.sample(StandardNormal);
        self.state = self.rho * self.state + self.drive * w;
        self.state
    }
}

/// Generate a recording per `spec`: 8 channels (contacts 0–3 on each
/// hemisphere), event markers sorted by onset, deterministic in the seed.
pub fn generate_synthetic_recording(spec: &SyntheticSpec) -> Result<LfpRecording> {
    spec.validate()?;
    let rate = spec.sample_rate;
    let total = spec.total_events();
    let duration_s = 2.0 * spec.margin_s + (total - 1) as f64 * spec.spacing_s;
    let len = (duration_s * rate).round() as usize;

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    // Event schedule: evenly spaced slots, class order shuffled.
    let mut slot_labels: Vec<TaskLabel> = spec
        .classes
        .iter()
        .flat_map(|c| std::iter::repeat(c.label).take(spec.events_per_class))
        .collect();
    slot_labels.shuffle(&mut rng);
    let events: Vec<EventMarker> = slot_labels
        .iter()
        .enumerate()
        .map(|(k, &label)| EventMarker {
            onset: ((spec.margin_s + k as f64 * spec.spacing_s) * rate).round() as usize,
            label,
        })
        .collect();

    // Carrier amplitude envelope shared by every contact: suppression dips
    // around each event, evaluated only within ±6σ of each trough.
    let mut envelope = vec![1.0_f64; len];
    for ev in &events {
        let profile = spec
            .classes
            .iter()
            .find(|c| c.label == ev.label)
            .expect("scheduled label has a profile");
        let jitter: f64 = if spec.depth_jitter > 0.0 {
            1.0 + rng.gen_range(-spec.depth_jitter..=spec.depth_jitter)
        } else {
            1.0
        };
        let depth = (profile.depth * jitter).min(1.0);
        let center = ev.onset as f64 / rate + profile.lag_s;
        let sigma = profile.width_s;
        let lo = (((center - 6.0 * sigma) * rate).floor().max(0.0)) as usize;
        let hi = ((center + 6.0 * sigma) * rate).ceil().min((len - 1) as f64) as usize;
        for (i, e) in envelope.iter_mut().enumerate().take(hi + 1).skip(lo) {
            let dt = i as f64 / rate - center;
            *e -= depth * (-dt * dt / (2.0 * sigma * sigma)).exp();
        }
    }
    for e in envelope.iter_mut() {
        *e = e.max(0.02);
    }

    let carrier: Vec<f64> = (0..len)
        .map(|i| (2.0 * std::f64::consts::PI * spec.carrier_hz * i as f64 / rate).sin())
        .collect();

    // Per-hemisphere common mode: identical on all four contacts, so it
    // vanishes under bipolar re-referencing (up to the f32 rounding of the
    // stored per-contact sums).
    let mut common = Vec::with_capacity(2);
    for _ in 0..2 {
        let mut ar = Ar1::new(rate);
        common.push(
            (0..len)
                .map(|_| spec.common_mode_amp * ar.next(&mut rng))
                .collect::<Vec<f64>>(),
        );
    }

    let lp = if spec.bandpass {
        Some(design_butterworth(4, 100.0_f64.min(0.45 * rate), rate)?)
    } else {
        None
    };
    let hp = if spec.bandpass {
        Some(design_butterworth_highpass(4, 1.0, rate)?)
    } else {
        None
    };

    let mut channels = Array2::<f32>::zeros((8, len));
    let mut hemisphere_map = Vec::with_capacity(8);
    for (h, &hemi) in Hemisphere::BOTH.iter().enumerate() {
        let hemi_gain = if hemi == Hemisphere::Right {
            spec.right_gain
        } else {
            1.0
        };
        for contact in 0..4u8 {
            hemisphere_map.push(ContactAssignment { hemisphere: hemi, contact });
            let gain = spec.carrier_amp * hemi_gain * spec.contact_gains[contact as usize];
            let mut ar = Ar1::new(rate);
            let mut signal: Vec<f64> = (0..len)
                .map(|i| {
                    let white: f64 = rng.sample(StandardNormal);
                    gain * envelope[i] * carrier[i]
                        + spec.noise_amp * (0.8 * ar.next(&mut rng) + 0.2 * white)
                        + common[h][i]
                })
                .collect();
            if let (Some(lp), Some(hp)) = (&lp, &hp) {
                signal = lp.zero_phase(&signal);
                signal = hp.zero_phase(&signal);
            }
            let row = 4 * h + contact as usize;
            for (i, v) in signal.iter().enumerate() {
                channels[[row, i]] = *v as f32;
            }
        }
    }

    LfpRecording::new(channels, rate, hemisphere_map, events)
}
