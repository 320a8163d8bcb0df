use serde::{Deserialize, Serialize};

use crate::imaging::pgm_encoded_len;
use crate::sidecar;
use crate::stereo::DisparityMap;

use super::SimError;

/// Result of comparing consecutive disparity maps of one pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventCheck {
    pub triggered: bool,
    /// Mean absolute disparity difference over pixels valid in both maps.
    pub change: f64,
}

/// Flags a scene change when the mean absolute disparity difference over
/// commonly valid pixels exceeds `threshold`. No common valid pixel means no
/// change.
pub fn detect_event(
    prev: &DisparityMap,
    curr: &DisparityMap,
    threshold: f64,
) -> Result<EventCheck, SimError> {
    if !prev.same_shape(curr) {
        return Err(SimError::MapShape);
    }
    let mut sum = 0u64;
    let mut count = 0u64;
    let pairs = prev
        .disparities()
        .iter()
        .zip(prev.valid_mask())
        .zip(curr.disparities().iter().zip(curr.valid_mask()));
    for ((&a, &va), (&b, &vb)) in pairs {
        if va && vb {
            sum += u64::from(a.abs_diff(b));
            count += 1;
        }
    }
    let change = if count == 0 { 0.0 } else { sum as f64 / count as f64 };
    Ok(EventCheck {
        triggered: change > threshold,
        change,
    })
}

/// What a transmission carries.
#[derive(Debug, Clone, Copy)]
pub enum Payload<'a> {
    /// Plain `DSP1` sidecar.
    Disparity(&'a DisparityMap),
    /// Run-length `DSR1` sidecar.
    DisparityRle(&'a DisparityMap),
    /// One canonical PGM frame.
    RawFrame { width: usize, height: usize },
    /// Left and right canonical PGM frames.
    RawPair { width: usize, height: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PayloadKind {
    Disparity,
    DisparityRle,
    RawFrame,
    RawPair,
}

impl Payload<'_> {
    pub fn kind(&self) -> PayloadKind {
        match self {
            Payload::Disparity(_) => PayloadKind::Disparity,
            Payload::DisparityRle(_) => PayloadKind::DisparityRle,
            Payload::RawFrame { .. } => PayloadKind::RawFrame,
            Payload::RawPair { .. } => PayloadKind::RawPair,
        }
    }
}

/// Bytes on the air for a payload.
pub fn transmission_bytes(payload: &Payload<'_>) -> u64 {
    let n = match *payload {
        Payload::Disparity(map) => sidecar::plain_len(map.width(), map.height()),
        Payload::DisparityRle(map) => sidecar::encode_rle(map).len(),
        Payload::RawFrame { width, height } => pgm_encoded_len(width, height),
        Payload::RawPair { width, height } => 2 * pgm_encoded_len(width, height),
    };
    n as u64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_maps_do_not_trigger() {
        let m = DisparityMap::uniform(4, 4, 8, 3).unwrap();
        let e = detect_event(&m, &m, 1e-9).unwrap();
        assert_eq!(e, EventCheck { triggered: false, change: 0.0 });
    }

    #[test]
    fn constant_difference() {
        let a = DisparityMap::uniform(4, 4, 8, 1).unwrap();
        let b = DisparityMap::uniform(4, 4, 8, 4).unwrap();
        let e = detect_event(&a, &b, 2.5).unwrap();
        assert_eq!(e, EventCheck { triggered: true, change: 3.0 });
        // Strictly greater than the threshold.
        assert!(!detect_event(&a, &b, 3.0).unwrap().triggered);
    }

    #[test]
    fn only_commonly_valid_pixels_count() {
        let a = DisparityMap::new(4, 1, 9, vec![1, 2, 9, 0], vec![true, true, true, false]).unwrap();
        let b = DisparityMap::new(4, 1, 9, vec![4, 2, 0, 7], vec![true, false, true, true]).unwrap();
        // Common: index 0 (|1-4| = 3) and index 2 (|9-0| = 9).
        let reference: f64 = [3.0, 9.0].iter().sum::<f64>() / 2.0;
        assert_eq!(detect_event(&a, &b, 5.0).unwrap().change, reference);
        assert!(detect_event(&a, &b, 5.0).unwrap().triggered);
    }

    #[test]
    fn disjoint_validity_means_no_change() {
        let a = DisparityMap::new(2, 1, 9, vec![1, 0], vec![true, false]).unwrap();
        let b = DisparityMap::new(2, 1, 9, vec![0, 8], vec![false, true]).unwrap();
        assert_eq!(detect_event(&a, &b, 0.0).unwrap().change, 0.0);
    }

    #[test]
    fn shape_mismatch() {
        let a = DisparityMap::uniform(4, 4, 8, 1).unwrap();
        let b = DisparityMap::uniform(4, 4, 9, 1).unwrap();
        assert!(matches!(detect_event(&a, &b, 1.0), Err(SimError::MapShape)));
    }

    #[test]
    fn payload_sizes() {
        let m = DisparityMap::uniform(64, 64, 8, 0).unwrap();
        assert_eq!(transmission_bytes(&Payload::Disparity(&m)), 12304);
        let header = "P5\n64 64\n255\n".len() as u64;
        assert_eq!(
            transmission_bytes(&Payload::RawPair { width: 64, height: 64 }),
            2 * (header + 4096)
        );
        assert_eq!(transmission_bytes(&Payload::RawFrame { width: 64, height: 64 }), header + 4096);
        assert_eq!(transmission_bytes(&Payload::DisparityRle(&m)), 16 + 64 * 5);
    }
}
