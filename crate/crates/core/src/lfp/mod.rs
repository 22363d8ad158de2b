//! LFP recordings and the steps that turn them into labeled event windows.
//!
//! A recording holds raw contact voltages (µV) for up to four contacts per
//! hemisphere. Analysis never runs on raw contacts: each hemisphere is
//! bipolar re-referenced into adjacent-contact differences (pairs 0-1, 1-2,
//! 2-3), which cancels far-field common-mode activity. Event windows span
//! one second on either side of a behavioral onset; control windows
//! ("random segments") are drawn from event-free stretches of the signal.

mod synth;
pub mod io;

pub use synth::{generate_synthetic_recording, ClassProfile, SyntheticSpec};

use crate::error::{Error, Result};
use ndarray::Array2;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;

/// Subthalamic lead side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Hemisphere {
    Left,
    Right,
}

impl Hemisphere {
    pub const BOTH: [Hemisphere; 2] = [Hemisphere::Left, Hemisphere::Right];

    pub fn name(self) -> &'static str {
        match self {
            Hemisphere::Left => "Left",
            Hemisphere::Right => "Right",
        }
    }
}

impl fmt::Display for Hemisphere {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Behavioral task classes, plus the event-free control class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TaskLabel {
    ButtonPress,
    MouthMovement,
    Speech,
    ArmMovement,
    RandomSegment,
}

impl TaskLabel {
    /// All labels in their canonical (index) order.
    pub const ALL: [TaskLabel; 5] = [
        TaskLabel::ButtonPress,
        TaskLabel::MouthMovement,
        TaskLabel::Speech,
        TaskLabel::ArmMovement,
        TaskLabel::RandomSegment,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TaskLabel::ButtonPress => "ButtonPress",
            TaskLabel::MouthMovement => "MouthMovement",
            TaskLabel::Speech => "Speech",
            TaskLabel::ArmMovement => "ArmMovement",
            TaskLabel::RandomSegment => "RandomSegment",
        }
    }
}

impl fmt::Display for TaskLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for TaskLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TaskLabel::ALL
            .into_iter()
            .find(|l| l.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParams(format!("unknown task label `{s}`")))
    }
}

/// One behavioral event: sample index of its onset plus its class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventMarker {
    pub onset: usize,
    pub label: TaskLabel,
}

/// Placement of one recorded contact on a lead.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContactAssignment {
    pub hemisphere: Hemisphere,
    /// Contact index along the lead, 0 (deepest) through 3.
    pub contact: u8,
}

/// Raw multi-contact recording.
///
/// `channels` is one row per contact (µV, stored as f32 exactly as on disk);
/// `hemisphere_map[i]` names the lead position of row `i`.
#[derive(Debug, Clone)]
pub struct LfpRecording {
    pub channels: Array2<f32>,
    pub sample_rate: f64,
    pub hemisphere_map: Vec<ContactAssignment>,
    pub events: Vec<EventMarker>,
}

impl LfpRecording {
    /// Validating constructor; every loader funnels through this.
    pub fn new(
        channels: Array2<f32>,
        sample_rate: f64,
        hemisphere_map: Vec<ContactAssignment>,
        events: Vec<EventMarker>,
    ) -> Result<Self> {
        if !(sample_rate > 0.0) || !sample_rate.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "sample rate must be positive and finite, got {sample_rate}"
            )));
        }
        if hemisphere_map.len() != channels.nrows() {
            return Err(Error::InvalidSpec(format!(
                "hemisphere map has {} entries for {} channel rows",
                hemisphere_map.len(),
                channels.nrows()
            )));
        }
        let mut seen = std::collections::HashSet::new();
        for a in &hemisphere_map {
            if a.contact > 3 {
                return Err(Error::InvalidSpec(format!(
                    "contact index {} out of range 0..=3",
                    a.contact
                )));
            }
            if !seen.insert((a.hemisphere, a.contact)) {
                return Err(Error::InvalidSpec(format!(
                    "duplicate contact {}:{}",
                    a.hemisphere, a.contact
                )));
            }
        }
        let len = channels.ncols();
        for e in &events {
            if e.onset >= len {
                return Err(Error::InvalidSpec(format!(
                    "event onset {} outside recording of {} samples",
                    e.onset, len
                )));
            }
        }
        Ok(LfpRecording {
            channels,
            sample_rate,
            hemisphere_map,
            events,
        })
    }

    pub fn num_samples(&self) -> usize {
        self.channels.ncols()
    }
}

/// Bipolar-derived channels for one hemisphere.
#[derive(Debug, Clone)]
pub struct BipolarSignal {
    /// One row per adjacent-contact difference, in fixed order 0-1, 1-2, 2-3.
    pub pairs: Array2<f64>,
    pub sample_rate: f64,
    pub hemisphere: Hemisphere,
    /// Contact pairs backing each row, e.g. (0, 1).
    pub pair_contacts: Vec<(u8, u8)>,
}

/// A ±1 s slice of a bipolar signal around one event onset.
#[derive(Debug, Clone)]
pub struct EventWindow {
    /// One row per bipolar channel; exactly 2·sample_rate columns.
    pub segment: Array2<f64>,
    pub label: TaskLabel,
    pub hemisphere: Hemisphere,
    pub sample_rate: f64,
}

/// Derive the bipolar montage of one hemisphere.
///
/// Output row k is `contact_k − contact_{k+1}`, formed for every adjacent
/// pair where both contacts are mapped; hemispheres with fewer than four
/// contacts simply yield fewer pairs. Differences are computed in f64.
pub fn bipolar_rereference(rec: &LfpRecording, hemisphere: Hemisphere) -> Result<BipolarSignal> {
    let mut rows_by_contact: [Option<usize>; 4] = [None; 4];
    for (row, a) in rec.hemisphere_map.iter().enumerate() {
        if a.hemisphere == hemisphere {
            rows_by_contact[a.contact as usize] = Some(row);
        }
    }
    let mut pair_contacts = Vec::new();
    for k in 0u8..3 {
        if rows_by_contact[k as usize].is_some() && rows_by_contact[k as usize + 1].is_some() {
            pair_contacts.push((k, k + 1));
        }
    }
    if pair_contacts.is_empty() {
        let present: Vec<u8> = (0u8..4)
            .filter(|&k| rows_by_contact[k as usize].is_some())
            .collect();
        return Err(Error::MissingContact {
            hemisphere: hemisphere.name(),
            present,
        });
    }
    let len = rec.num_samples();
    let mut pairs = Array2::<f64>::zeros((pair_contacts.len(), len));
    for (out_row, &(a, b)) in pair_contacts.iter().enumerate() {
        let ra = rec.channels.row(rows_by_contact[a as usize].unwrap());
        let rb = rec.channels.row(rows_by_contact[b as usize].unwrap());
        for t in 0..len {
            pairs[[out_row, t]] = ra[t] as f64 - rb[t] as f64;
        }
    }
    Ok(BipolarSignal {
        pairs,
        sample_rate: rec.sample_rate,
        hemisphere,
        pair_contacts,
    })
}

/// Half-window length in samples (1 s worth); requires an integral rate.
fn half_window(sample_rate: f64) -> Result<usize> {
    let half = sample_rate.round();
    if (sample_rate - half).abs() > 1e-9 || half < 1.0 {
        return Err(Error::InvalidSpec(format!(
            "windowing requires an integral sample rate ≥ 1 Hz, got {sample_rate}"
        )));
    }
    Ok(half as usize)
}

/// Cut one ±1 s window per event.
///
/// Window `[onset − rate, onset + rate)` is half-open, so every window has
/// exactly `2·rate` samples and the onset sits at the first sample of the
/// second half.
pub fn extract_windows(sig: &BipolarSignal, events: &[EventMarker]) -> Result<Vec<EventWindow>> {
    let half = half_window(sig.sample_rate)? as i64;
    let len = sig.pairs.ncols();
    let mut out = Vec::with_capacity(events.len());
    for e in events {
        let start = e.onset as i64 - half;
        let end = e.onset as i64 + half;
        if start < 0 || end > len as i64 {
            return Err(Error::WindowOutOfBounds {
                onset: e.onset,
                label: e.label,
                start,
                end,
                len,
            });
        }
        let segment = sig
            .pairs
            .slice(ndarray::s![.., start as usize..end as usize])
            .to_owned();
        out.push(EventWindow {
            segment,
            label: e.label,
            hemisphere: sig.hemisphere,
            sample_rate: sig.sample_rate,
        });
    }
    Ok(out)
}

/// Deterministically sample the centers used by [`sample_random_segments`].
///
/// Admissible centers keep the whole ±1 s window inside the signal and stay
/// at least `guard_s` seconds away from every event onset. Centers are drawn
/// uniformly without replacement, so they depend only on the signal length,
/// the events, `count`, `guard_s`, and `seed` — both hemispheres of one
/// recording therefore receive identical control windows.
pub fn sample_random_centers(
    num_samples: usize,
    sample_rate: f64,
    events: &[EventMarker],
    count: usize,
    guard_s: f64,
    seed: u64,
) -> Result<Vec<usize>> {
    let half = half_window(sample_rate)?;
    let guard = (guard_s * sample_rate).round().max(0.0) as i64;

    // Admissible region as a sorted set of disjoint intervals [lo, hi].
    let lo0 = half as i64;
    let hi0 = num_samples as i64 - half as i64; // center ≤ len − half (end exclusive)
    let mut intervals: Vec<(i64, i64)> = if lo0 <= hi0 { vec![(lo0, hi0)] } else { vec![] };
    let mut onsets: Vec<i64> = events.iter().map(|e| e.onset as i64).collect();
    onsets.sort_unstable();
    for onset in onsets {
        let (f_lo, f_hi) = (onset - guard + 1, onset + guard - 1);
        let mut next = Vec::with_capacity(intervals.len() + 1);
        for (lo, hi) in intervals {
            if f_hi < lo || f_lo > hi {
                next.push((lo, hi));
            } else {
                if f_lo > lo {
                    next.push((lo, f_lo - 1));
                }
                if f_hi < hi {
                    next.push((f_hi + 1, hi));
                }
            }
        }
        intervals = next;
    }
    let total: i64 = intervals.iter().map(|(lo, hi)| hi - lo + 1).sum();
    if (total as usize) < count {
        return Err(Error::InsufficientQuietSignal {
            requested: count,
            admissible: total.max(0) as usize,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = std::collections::BTreeSet::new();
    while chosen.len() < count {
        let mut r = rng.gen_range(0..total);
        for &(lo, hi) in &intervals {
            let span = hi - lo + 1;
            if r < span {
                chosen.insert((lo + r) as usize);
                break;
            }
            r -= span;
        }
    }
    Ok(chosen.into_iter().collect())
}

/// Draw `count` event-free control windows labeled [`TaskLabel::RandomSegment`].
pub fn sample_random_segments(
    sig: &BipolarSignal,
    events: &[EventMarker],
    count: usize,
    guard_s: f64,
    seed: u64,
) -> Result<Vec<EventWindow>> {
    let centers = sample_random_centers(
        sig.pairs.ncols(),
        sig.sample_rate,
        events,
        count,
        guard_s,
        seed,
    )?;
    let markers: Vec<EventMarker> = centers
        .into_iter()
        .map(|onset| EventMarker {
            onset,
            label: TaskLabel::RandomSegment,
        })
        .collect();
    extract_windows(sig, &markers)
}
