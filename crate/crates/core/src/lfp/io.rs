//! On-disk container for recordings.
//!
//! Voltages live in a compact binary file; contact placement and event
//! markers live in a human-readable JSON sidecar at `<path>.json`.
//!
//! Binary layout (all integers little-endian):
//!
//! | offset | size | field                                   |
//! |-------:|-----:|-----------------------------------------|
//! |      0 |    8 | magic `LFPREC\0\0`                      |
//! |      8 |    2 | format version (`u16`, currently 1)     |
//! |     10 |    2 | channel count (`u16`)                   |
//! |     12 |    8 | samples per channel (`u64`)             |
//! |     20 |    8 | sample rate in Hz (`f64`)               |
//! |     28 |    … | samples, `f32`, channel-major           |
//!
//! Samples are stored exactly as the in-memory `f32` values, so a
//! save/load round trip is lossless.

use super::{ContactAssignment, EventMarker, LfpRecording};
use crate::error::{Error, Result};
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::{Path, PathBuf};

pub const MAGIC: [u8; 8] = *b"LFPREC\0\0";
pub const FORMAT_VERSION: u16 = 1;
const HEADER_LEN: usize = 28;

/// Path of the JSON sidecar belonging to a recording file.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".json");
    PathBuf::from(name)
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    hemisphere_map: Vec<ContactAssignment>,
    events: Vec<EventMarker>,
}

/// Write `rec` to `path` plus its `<path>.json` sidecar.
pub fn save_recording(rec: &LfpRecording, path: &Path) -> Result<()> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    file.write_all(&MAGIC)?;
    file.write_all(&FORMAT_VERSION.to_le_bytes())?;
    file.write_all(&(rec.channels.nrows() as u16).to_le_bytes())?;
    file.write_all(&(rec.num_samples() as u64).to_le_bytes())?;
    file.write_all(&rec.sample_rate.to_le_bytes())?;
    for row in rec.channels.rows() {
        for &v in row {
            file.write_all(&v.to_le_bytes())?;
        }
    }
    file.flush()?;

    let sidecar = Sidecar {
        hemisphere_map: rec.hemisphere_map.clone(),
        events: rec.events.clone(),
    };
    std::fs::write(sidecar_path(path), serde_json::to_string_pretty(&sidecar)?)?;
    Ok(())
}

fn parse_err(offset: usize, reason: impl Into<String>) -> Error {
    Error::ParseError {
        offset: offset as u64,
        reason: reason.into(),
    }
}

/// Load a recording saved by [`save_recording`]; both the binary file and
/// its sidecar must be present and intact.
pub fn load_recording(path: &Path) -> Result<LfpRecording> {
    let bytes = std::fs::read(path)?;
    if bytes.len() < HEADER_LEN {
        return Err(parse_err(
            bytes.len(),
            format!("file ends inside the {HEADER_LEN}-byte header"),
        ));
    }
    if bytes[..8] != MAGIC {
        return Err(parse_err(0, "bad magic, not a recording file"));
    }
    let version = u16::from_le_bytes(bytes[8..10].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(Error::SchemaMismatch {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let channels = u16::from_le_bytes(bytes[10..12].try_into().unwrap()) as usize;
    let samples64 = u64::from_le_bytes(bytes[12..20].try_into().unwrap());
    let sample_rate = f64::from_le_bytes(bytes[20..28].try_into().unwrap());
    let samples: usize = samples64
        .try_into()
        .map_err(|_| parse_err(12, format!("sample count {samples64} too large")))?;
    let need = channels
        .checked_mul(samples)
        .and_then(|n| n.checked_mul(4))
        .and_then(|n| n.checked_add(HEADER_LEN))
        .ok_or_else(|| parse_err(10, "declared size overflows"))?;
    if bytes.len() != need {
        return Err(parse_err(
            bytes.len().min(need),
            format!(
                "expected {need} bytes for {channels}×{samples} samples, file has {}",
                bytes.len()
            ),
        ));
    }
    let mut data = Array2::<f32>::zeros((channels, samples));
    for c in 0..channels {
        let base = HEADER_LEN + c * samples * 4;
        for s in 0..samples {
            let o = base + 4 * s;
            data[[c, s]] = f32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
        }
    }

    let sidecar_text = std::fs::read_to_string(sidecar_path(path))?;
    let sidecar: Sidecar = serde_json::from_str(&sidecar_text)?;
    LfpRecording::new(data, sample_rate, sidecar.hemisphere_map, sidecar.events)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lfp::{generate_synthetic_recording, SyntheticSpec, TaskLabel};

    fn sample_recording() -> LfpRecording {
        let spec = SyntheticSpec {
            sample_rate: 125.0,
            events_per_class: 2,
            spacing_s: 3.0,
            margin_s: 1.0,
            bandpass: false,
            ..SyntheticSpec::standard(&[TaskLabel::Speech, TaskLabel::ButtonPress], 2, 3).unwrap()
        };
        generate_synthetic_recording(&spec).unwrap()
    }

    #[test]
    fn save_load_round_trip_is_lossless() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rec.lfp");
        let rec = sample_recording();
        save_recording(&rec, &path).unwrap();
        assert!(sidecar_path(&path).exists());
        let back = load_recording(&path).unwrap();
        assert_eq!(back.channels, rec.channels);
        assert_eq!(back.sample_rate, rec.sample_rate);
        assert_eq!(back.hemisphere_map, rec.hemisphere_map);
        assert_eq!(back.events, rec.events);
    }

    #[test]
    fn truncated_file_reports_offset() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rec.lfp");
        save_recording(&sample_recording(), &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        let cut = bytes.len() - 100;
        std::fs::write(&path, &bytes[..cut]).unwrap();
        match load_recording(&path).unwrap_err() {
            Error::ParseError { offset, .. } => assert_eq!(offset, cut as u64),
            other => panic!("expected ParseError, got {other:?}"),
        }
        // Cutting into the header reports the file length too.
        std::fs::write(&path, &bytes[..10]).unwrap();
        assert!(matches!(
            load_recording(&path).unwrap_err(),
            Error::ParseError { offset: 10, .. }
        ));
    }

    #[test]
    fn bad_magic_and_wrong_version_are_distinguished() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rec.lfp");
        save_recording(&sample_recording(), &path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();

        let mut corrupted = bytes.clone();
        corrupted[0] = b'X';
        std::fs::write(&path, &corrupted).unwrap();
        assert!(matches!(
            load_recording(&path).unwrap_err(),
            Error::ParseError { offset: 0, .. }
        ));

        bytes[8..10].copy_from_slice(&2u16.to_le_bytes());
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(
            load_recording(&path).unwrap_err(),
            Error::SchemaMismatch { found: 2, expected: 1 }
        ));
    }

    #[test]
    fn missing_or_corrupt_sidecar_fails() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rec.lfp");
        save_recording(&sample_recording(), &path).unwrap();
        std::fs::remove_file(sidecar_path(&path)).unwrap();
        assert!(matches!(load_recording(&path).unwrap_err(), Error::Io(_)));

        std::fs::write(sidecar_path(&path), "{not json").unwrap();
        assert!(matches!(
            load_recording(&path).unwrap_err(),
            Error::ParseError { .. }
        ));
    }

    #[test]
    fn trailing_garbage_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rec.lfp");
        save_recording(&sample_recording(), &path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes.extend_from_slice(&[0u8; 7]);
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(
            load_recording(&path).unwrap_err(),
            Error::ParseError { .. }
        ));
    }
}
