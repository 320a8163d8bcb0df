//! Grayscale rasters and binary PGM (P5) input/output.

use std::fmt;

use thiserror::Error;

/// Errors produced while building or decoding a [`GrayImage`].
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ImageError {
    #[error("pixel buffer has {actual} values, expected {width}x{height} = {expected}")]
    BufferSize {
        width: usize,
        height: usize,
        expected: usize,
        actual: usize,
    },
    #[error("image {field} must be at least 1")]
    ZeroDimension { field: &'static str },
    #[error("bad magic number: expected \"P5\"")]
    BadMagic,
    #[error("header field `{field}` missing (input ends at byte {offset})")]
    MissingField { field: &'static str, offset: usize },
    #[error("header field `{field}` at byte {offset} is not a valid number")]
    InvalidNumber { field: &'static str, offset: usize },
    #[error("maxval {maxval} is outside 1..=255")]
    MaxvalOutOfRange { maxval: u64 },
    #[error("header field `maxval` must be followed by a single whitespace byte at offset {offset}")]
    MissingSeparator { offset: usize },
    #[error("pixel payload truncated at byte {offset}: expected {expected} bytes, found {actual}")]
    Truncated {
        offset: usize,
        expected: usize,
        actual: usize,
    },
    #[error("pixel at byte {offset} has value {value} above maxval {maxval}")]
    PixelAboveMaxval { offset: usize, value: u8, maxval: u8 },
    #[error("downscale factor must be at least 1")]
    ZeroFactor,
}

/// Column/row index into an image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PixelCoord {
    pub x: usize,
    pub y: usize,
}

impl PixelCoord {
    pub const fn new(x: usize, y: usize) -> Self {
        Self { x, y }
    }
}

/// A rectified 8-bit grayscale raster stored row-major.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl fmt::Debug for GrayImage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GrayImage")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish_non_exhaustive()
    }
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self, ImageError> {
        if width == 0 {
            return Err(ImageError::ZeroDimension { field: "width" });
        }
        if height == 0 {
            return Err(ImageError::ZeroDimension { field: "height" });
        }
        let expected = width * height;
        if pixels.len() != expected {
            return Err(ImageError::BufferSize {
                width,
                height,
                expected,
                actual: pixels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// Builds an image by evaluating `f(x, y)` for every pixel.
    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> u8,
    ) -> Result<Self, ImageError> {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self::new(width, height, pixels)
    }

    /// A `width`×`height` image filled with `value`.
    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self, ImageError> {
        Self::new(width, height, vec![value; width * height])
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    #[inline]
    pub fn row(&self, y: usize) -> &[u8] {
        &self.pixels[y * self.width..(y + 1) * self.width]
    }

    /// Intensity at `(x, y)`. Panics when out of bounds.
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        assert!(x < self.width && y < self.height, "pixel ({x}, {y}) out of bounds");
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn at(&self, p: PixelCoord) -> u8 {
        self.get(p.x, p.y)
    }

    pub fn contains(&self, p: PixelCoord) -> bool {
        p.x < self.width && p.y < self.height
    }

    pub fn same_dimensions(&self, other: &GrayImage) -> bool {
        self.width == other.width && self.height == other.height
    }
}

/// Canonical P5 header for an image of the given size.
pub fn pgm_header(width: usize, height: usize) -> String {
    format!("P5\n{width} {height}\n255\n")
}

/// Size in bytes of the canonical PGM encoding of a `width`×`height` image.
pub fn pgm_encoded_len(width: usize, height: usize) -> usize {
    pgm_header(width, height).len() + width * height
}

pub fn serialize_pgm(img: &GrayImage) -> Vec<u8> {
    let header = pgm_header(img.width, img.height);
    let mut out = Vec::with_capacity(header.len() + img.pixels.len());
    out.extend_from_slice(header.as_bytes());
    out.extend_from_slice(&img.pixels);
    out
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderCursor<'_> {
    /// Skips whitespace and `#` comments that run to end of line.
    fn skip_blank(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, field: &'static str) -> Result<u64, ImageError> {
        self.skip_blank();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(if start >= self.bytes.len() {
                ImageError::MissingField {
                    field,
                    offset: start,
                }
            } else {
                ImageError::InvalidNumber {
                    field,
                    offset: start,
                }
            });
        }
        // A number must end at whitespace or a comment.
        if let Some(&b) = self.bytes.get(self.pos) {
            if !b.is_ascii_whitespace() && b != b'#' {
                return Err(ImageError::InvalidNumber {
                    field,
                    offset: start,
                });
            }
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or(ImageError::InvalidNumber {
                field,
                offset: start,
            })
    }
}

/// Decodes a binary 8-bit PGM.
pub fn parse_pgm(bytes: &[u8]) -> Result<GrayImage, ImageError> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(ImageError::BadMagic);
    }
    let mut cur = HeaderCursor { bytes, pos: 2 };
    match bytes.get(2) {
        Some(b) if b.is_ascii_whitespace() || *b == b'#' => {}
        Some(_) => return Err(ImageError::BadMagic),
        None => {
            return Err(ImageError::MissingField {
                field: "width",
                offset: 2,
            })
        }
    }
    let width = cur.number("width")?;
    let height = cur.number("height")?;
    let maxval = cur.number("maxval")?;
    if width == 0 {
        return Err(ImageError::ZeroDimension { field: "width" });
    }
    if height == 0 {
        return Err(ImageError::ZeroDimension { field: "height" });
    }
    if !(1..=255).contains(&maxval) {
        return Err(ImageError::MaxvalOutOfRange { maxval });
    }
    match bytes.get(cur.pos) {
        Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
        _ => return Err(ImageError::MissingSeparator { offset: cur.pos }),
    }
    let data_start = cur.pos;
    let expected = usize::try_from(width)
        .ok()
        .and_then(|w| usize::try_from(height).ok().and_then(|h| w.checked_mul(h)))
        .ok_or(ImageError::InvalidNumber {
            field: "width",
            offset: 2,
        })?;
    let available = bytes.len() - data_start;
    if available < expected {
        return Err(ImageError::Truncated {
            offset: bytes.len(),
            expected,
            actual: available,
        });
    }
    let payload = &bytes[data_start..data_start + expected];
    let maxval = maxval as u8;
    if let Some(i) = payload.iter().position(|&v| v > maxval) {
        return Err(ImageError::PixelAboveMaxval {
            offset: data_start + i,
            value: payload[i],
            maxval,
        });
    }
    GrayImage::new(width as usize, height as usize, payload.to_vec())
}

/// Block-mean reduction by `factor` in each direction.
///
/// Output is `ceil(w/factor) × ceil(h/factor)`; partial edge blocks are
/// averaged over the pixels they actually cover, and means are rounded half
/// away from zero.
pub fn downscale(img: &GrayImage, factor: usize) -> Result<GrayImage, ImageError> {
    if factor == 0 {
        return Err(ImageError::ZeroFactor);
    }
    if factor == 1 {
        return Ok(img.clone());
    }
    let out_w = img.width.div_ceil(factor);
    let out_h = img.height.div_ceil(factor);
    GrayImage::from_fn(out_w, out_h, |ox, oy| {
        let x0 = ox * factor;
        let y0 = oy * factor;
        let x1 = (x0 + factor).min(img.width);
        let y1 = (y0 + factor).min(img.height);
        let mut sum = 0u64;
        for y in y0..y1 {
            sum += img.row(y)[x0..x1].iter().map(|&v| u64::from(v)).sum::<u64>();
        }
        let count = ((x1 - x0) * (y1 - y0)) as u64;
        ((2 * sum + count) / (2 * count)) as u8
    })
}
