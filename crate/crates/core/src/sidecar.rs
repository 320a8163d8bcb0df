//! Exact binary encodings of a [`DisparityMap`].
//!
//! `DSP1` (plain): magic, then width, height and max disparity as `u32` LE,
//! then one record per pixel in row-major order: disparity `u16` LE followed
//! by a validity byte (0 or 1).
//!
//! `DSR1` (run-length): the same 16-byte header with its own magic, then for
//! each row a sequence of runs `(length: u16 LE, disparity: u16 LE, valid: u8)`.
//! Runs never cross a row boundary and are split at 65535 pixels.

use thiserror::Error;

use crate::stereo::{DisparityMap, StereoError};

pub const PLAIN_MAGIC: &[u8; 4] = b"DSP1";
pub const RLE_MAGIC: &[u8; 4] = b"DSR1";
pub const HEADER_LEN: usize = 16;
pub const PLAIN_RECORD_LEN: usize = 3;
pub const RUN_RECORD_LEN: usize = 5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SidecarError {
    #[error("expected magic {expected:?}")]
    BadMagic { expected: &'static str },
    #[error("sidecar truncated: need {expected} bytes, found {actual}")]
    Truncated { expected: usize, actual: usize },
    #[error("{extra} unexpected trailing bytes")]
    TrailingBytes { extra: usize },
    #[error("max disparity {0} does not fit in 16 bits")]
    MaxDisparity(u32),
    #[error("validity byte {value} at offset {offset} is neither 0 nor 1")]
    BadValidity { offset: usize, value: u8 },
    #[error("zero-length run at offset {offset}")]
    EmptyRun { offset: usize },
    #[error("run at offset {offset} overflows its row")]
    RunOverflow { offset: usize },
    #[error(transparent)]
    Map(#[from] StereoError),
}

/// Byte length of the plain encoding for a `width`×`height` map.
pub fn plain_len(width: usize, height: usize) -> usize {
    HEADER_LEN + PLAIN_RECORD_LEN * width * height
}

fn write_header(out: &mut Vec<u8>, magic: &[u8; 4], map: &DisparityMap) {
    out.extend_from_slice(magic);
    out.extend_from_slice(&(map.width() as u32).to_le_bytes());
    out.extend_from_slice(&(map.height() as u32).to_le_bytes());
    out.extend_from_slice(&u32::from(map.max_disparity()).to_le_bytes());
}

fn read_header(
    bytes: &[u8],
    magic: &'static [u8; 4],
) -> Result<(usize, usize, u16), SidecarError> {
    if bytes.len() < 4 || &bytes[..4] != magic {
        return Err(SidecarError::BadMagic {
            expected: std::str::from_utf8(magic).unwrap_or("?"),
        });
    }
    if bytes.len() < HEADER_LEN {
        return Err(SidecarError::Truncated {
            expected: HEADER_LEN,
            actual: bytes.len(),
        });
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
    let max_d = word(12);
    let max_d = u16::try_from(max_d).map_err(|_| SidecarError::MaxDisparity(max_d))?;
    Ok((word(4) as usize, word(8) as usize, max_d))
}

fn validity(offset: usize, value: u8) -> Result<bool, SidecarError> {
    match value {
        0 => Ok(false),
        1 => Ok(true),
        value => Err(SidecarError::BadValidity { offset, value }),
    }
}

pub fn encode_plain(map: &DisparityMap) -> Vec<u8> {
    let mut out = Vec::with_capacity(plain_len(map.width(), map.height()));
    write_header(&mut out, PLAIN_MAGIC, map);
    for (&d, &ok) in map.disparities().iter().zip(map.valid_mask()) {
        out.extend_from_slice(&d.to_le_bytes());
        out.push(u8::from(ok));
    }
    out
}

pub fn decode_plain(bytes: &[u8]) -> Result<DisparityMap, SidecarError> {
    let (w, h, max_d) = read_header(bytes, PLAIN_MAGIC)?;
    let n = w * h;
    let expected = plain_len(w, h);
    if bytes.len() < expected {
        return Err(SidecarError::Truncated {
            expected,
            actual: bytes.len(),
        });
    }
    if bytes.len() > expected {
        return Err(SidecarError::TrailingBytes {
            extra: bytes.len() - expected,
        });
    }
    let mut disparities = Vec::with_capacity(n);
    let mut valid = Vec::with_capacity(n);
    for (i, rec) in bytes[HEADER_LEN..].chunks_exact(PLAIN_RECORD_LEN).enumerate() {
        disparities.push(u16::from_le_bytes([rec[0], rec[1]]));
        valid.push(validity(HEADER_LEN + i * PLAIN_RECORD_LEN + 2, rec[2])?);
    }
    Ok(DisparityMap::new(w, h, max_d, disparities, valid)?)
}

pub fn encode_rle(map: &DisparityMap) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + RUN_RECORD_LEN * map.height());
    write_header(&mut out, RLE_MAGIC, map);
    let w = map.width();
    for (drow, vrow) in map.disparities().chunks(w).zip(map.valid_mask().chunks(w)) {
        let mut i = 0;
        while i < w {
            let (d, ok) = (drow[i], vrow[i]);
            let mut len = 1;
            while i + len < w && len < usize::from(u16::MAX) && drow[i + len] == d && vrow[i + len] == ok {
                len += 1;
            }
            out.extend_from_slice(&(len as u16).to_le_bytes());
            out.extend_from_slice(&d.to_le_bytes());
            out.push(u8::from(ok));
            i += len;
        }
    }
    out
}

pub fn decode_rle(bytes: &[u8]) -> Result<DisparityMap, SidecarError> {
    let (w, h, max_d) = read_header(bytes, RLE_MAGIC)?;
    let n = w * h;
    let mut disparities = Vec::with_capacity(n);
    let mut valid = Vec::with_capacity(n);
    let mut pos = HEADER_LEN;
    for _ in 0..h {
        let mut filled = 0;
        while filled < w {
            let rec = bytes.get(pos..pos + RUN_RECORD_LEN).ok_or(SidecarError::Truncated {
                expected: pos + RUN_RECORD_LEN,
                actual: bytes.len(),
            })?;
            let len = usize::from(u16::from_le_bytes([rec[0], rec[1]]));
            if len == 0 {
                return Err(SidecarError::EmptyRun { offset: pos });
            }
            if filled + len > w {
                return Err(SidecarError::RunOverflow { offset: pos });
            }
            let d = u16::from_le_bytes([rec[2], rec[3]]);
            let ok = validity(pos + 4, rec[4])?;
            disparities.extend(std::iter::repeat_n(d, len));
            valid.extend(std::iter::repeat_n(ok, len));
            filled += len;
            pos += RUN_RECORD_LEN;
        }
    }
    if pos != bytes.len() {
        return Err(SidecarError::TrailingBytes {
            extra: bytes.len() - pos,
        });
    }
    Ok(DisparityMap::new(w, h, max_d, disparities, valid)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> DisparityMap {
        DisparityMap::new(
            3,
            2,
            7,
            vec![0, 5, 5, 7, 7, 7],
            vec![false, true, true, true, true, true],
        )
        .unwrap()
    }

    #[test]
    fn plain_layout_is_bit_exact() {
        let bytes = encode_plain(&sample());
        let mut expected = b"DSP1".to_vec();
        expected.extend_from_slice(&[3, 0, 0, 0, 2, 0, 0, 0, 7, 0, 0, 0]);
        expected.extend_from_slice(&[0, 0, 0, 5, 0, 1, 5, 0, 1, 7, 0, 1, 7, 0, 1, 7, 0, 1]);
        assert_eq!(bytes, expected);
        assert_eq!(bytes.len(), plain_len(3, 2));
        assert_eq!(plain_len(64, 64), 12304);
    }

    #[test]
    fn rle_layout_is_bit_exact() {
        let bytes = encode_rle(&sample());
        let mut expected = b"DSR1".to_vec();
        expected.extend_from_slice(&[3, 0, 0, 0, 2, 0, 0, 0, 7, 0, 0, 0]);
        expected.extend_from_slice(&[1, 0, 0, 0, 0, 2, 0, 5, 0, 1, 3, 0, 7, 0, 1]);
        assert_eq!(bytes, expected);
    }

    #[test]
    fn rle_size_oracle_constant_and_alternating() {
        // Constant 64x64 map: one run per row.
        let constant = DisparityMap::uniform(64, 64, 8, 3).unwrap();
        assert_eq!(encode_rle(&constant).len(), HEADER_LEN + 64 * RUN_RECORD_LEN);
        // Alternating values: one run per pixel, larger than the plain form.
        let d: Vec<u16> = (0..64 * 64).map(|i| (i % 2) as u16).collect();
        let alt = DisparityMap::new(64, 64, 1, d, vec![true; 4096]).unwrap();
        assert_eq!(encode_rle(&alt).len(), HEADER_LEN + 4096 * RUN_RECORD_LEN);
        assert!(encode_rle(&alt).len() > plain_len(64, 64));
    }

    #[test]
    fn long_rows_split_runs() {
        let map = DisparityMap::uniform(70_000, 1, 0, 0).unwrap();
        let bytes = encode_rle(&map);
        assert_eq!(bytes.len(), HEADER_LEN + 2 * RUN_RECORD_LEN);
        assert_eq!(decode_rle(&bytes).unwrap(), map);
    }

    #[test]
    fn decode_errors() {
        let good = encode_plain(&sample());
        assert!(matches!(decode_plain(b"DSP2"), Err(SidecarError::BadMagic { .. })));
        assert!(matches!(
            decode_plain(&good[..good.len() - 1]),
            Err(SidecarError::Truncated { .. })
        ));
        let mut extra = good.clone();
        extra.push(0);
        assert_eq!(decode_plain(&extra), Err(SidecarError::TrailingBytes { extra: 1 }));
        let mut bad = good.clone();
        bad[HEADER_LEN + 2] = 2;
        assert_eq!(
            decode_plain(&bad),
            Err(SidecarError::BadValidity { offset: 18, value: 2 })
        );
        let mut rle = encode_rle(&sample());
        rle[HEADER_LEN] = 0;
        assert_eq!(decode_rle(&rle), Err(SidecarError::EmptyRun { offset: 16 }));
        rle[HEADER_LEN] = 4;
        assert_eq!(decode_rle(&rle), Err(SidecarError::RunOverflow { offset: 16 }));
    }

    fn arb_map() -> impl Strategy<Value = DisparityMap> {
        (1usize..12, 1usize..12, 0u16..6).prop_flat_map(|(w, h, max_d)| {
            prop::collection::vec((0..=max_d, any::<bool>()), w * h).prop_map(move |cells| {
                let (d, v): (Vec<u16>, Vec<bool>) = cells.into_iter().unzip();
                DisparityMap::new(w, h, max_d, d, v).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn encodings_round_trip(map in arb_map()) {
            prop_assert_eq!(decode_plain(&encode_plain(&map)).unwrap(), map.clone());
            prop_assert_eq!(decode_rle(&encode_rle(&map)).unwrap(), map);
        }
    }
}
