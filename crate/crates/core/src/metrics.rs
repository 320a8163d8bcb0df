//! Full-reference similarity metrics: MSE, PSNR and SSIM.

use std::fmt;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::imaging::GrayImage;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("images differ in size: {a_w}x{a_h} vs {b_w}x{b_h}")]
    DimensionMismatch {
        a_w: usize,
        a_h: usize,
        b_w: usize,
        b_h: usize,
    },
    #[error("image {width}x{height} is smaller than the {window}x{window} SSIM window")]
    ImageSmallerThanWindow {
        width: usize,
        height: usize,
        window: usize,
    },
    #[error("invalid SSIM parameters: {0}")]
    Params(&'static str),
}

/// A similarity score; PSNR of identical images is [`MetricResult::Infinite`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MetricResult {
    Finite(f64),
    Infinite,
}

impl MetricResult {
    pub fn is_infinite(self) -> bool {
        matches!(self, MetricResult::Infinite)
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            MetricResult::Finite(v) => Some(v),
            MetricResult::Infinite => None,
        }
    }
}

impl fmt::Display for MetricResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricResult::Finite(v) => write!(f, "{v:?}"),
            MetricResult::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for MetricResult {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            MetricResult::Finite(v) => serializer.serialize_f64(*v),
            MetricResult::Infinite => serializer.serialize_str("inf"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsimParams {
    pub window_side: usize,
    pub k1: f64,
    pub k2: f64,
    pub dynamic_range: f64,
}

impl Default for SsimParams {
    fn default() -> Self {
        Self {
            window_side: 8,
            k1: 0.01,
            k2: 0.03,
            dynamic_range: 255.0,
        }
    }
}

impl SsimParams {
    pub fn c1(&self) -> f64 {
        (self.k1 * self.dynamic_range).powi(2)
    }

    pub fn c2(&self) -> f64 {
        (self.k2 * self.dynamic_range).powi(2)
    }

    fn validate(&self) -> Result<(), MetricError> {
        if self.window_side == 0 {
            return Err(MetricError::Params("window_side must be at least 1"));
        }
        if !(self.k1 > 0.0 && self.k2 > 0.0) {
            return Err(MetricError::Params("k1 and k2 must be positive"));
        }
        if !(self.dynamic_range > 0.0 && self.c1() > 0.0 && self.c2() > 0.0) {
            return Err(MetricError::Params("stabilizers must be positive"));
        }
        Ok(())
    }
}

fn check_dims(a: &GrayImage, b: &GrayImage) -> Result<(), MetricError> {
    if a.same_dimensions(b) {
        Ok(())
    } else {
        Err(MetricError::DimensionMismatch {
            a_w: a.width(),
            a_h: a.height(),
            b_w: b.width(),
            b_h: b.height(),
        })
    }
}

/// Mean squared intensity difference.
pub fn mse(a: &GrayImage, b: &GrayImage) -> Result<f64, MetricError> {
    check_dims(a, b)?;
    let sse: u64 = a
        .pixels()
        .iter()
        .zip(b.pixels())
        .map(|(&p, &q)| {
            let d = u64::from(p.abs_diff(q));
            d * d
        })
        .sum();
    Ok(sse as f64 / a.pixels().len() as f64)
}

/// PSNR in decibels for an MSE value, with a peak of 255.
pub fn psnr_from_mse(mse: f64) -> MetricResult {
    if mse == 0.0 {
        MetricResult::Infinite
    } else {
        MetricResult::Finite(10.0 * (255.0 * 255.0 / mse).log10())
    }
}

pub fn psnr(a: &GrayImage, b: &GrayImage) -> Result<MetricResult, MetricError> {
    Ok(psnr_from_mse(mse(a, b)?))
}

/// Summed-area table with a zero first row and column.
struct Integral {
    stride: usize,
    data: Vec<u64>,
}

impl Integral {
    fn build(w: usize, h: usize, value: impl Fn(usize) -> u64) -> Self {
        let stride = w + 1;
        let mut data = vec![0u64; stride * (h + 1)];
        for y in 0..h {
            let mut row = 0u64;
            for x in 0..w {
                row += value(y * w + x);
                data[(y + 1) * stride + x + 1] = data[y * stride + x + 1] + row;
            }
        }
        Self { stride, data }
    }

    /// Sum over the `side`×`side` block with top-left corner `(x, y)`.
    fn block(&self, x: usize, y: usize, side: usize) -> u64 {
        let s = self.stride;
        let (x1, y1) = (x + side, y + side);
        self.data[y1 * s + x1] + self.data[y * s + x] - self.data[y * s + x1] - self.data[y1 * s + x]
    }
}

/// Mean SSIM over every fully in-bounds window (stride 1).
///
/// Window statistics come from exact integer sums, and the per-window indices
/// are accumulated left to right, top to bottom. Variances and covariance use
/// the unbiased `n - 1` denominator; a 1×1 window has zero variance.
pub fn ssim(a: &GrayImage, b: &GrayImage, params: &SsimParams) -> Result<MetricResult, MetricError> {
    check_dims(a, b)?;
    params.validate()?;
    let (w, h) = (a.width(), a.height());
    let side = params.window_side;
    if w < side || h < side {
        return Err(MetricError::ImageSmallerThanWindow {
            width: w,
            height: h,
            window: side,
        });
    }

    let (pa, pb) = (a.pixels(), b.pixels());
    let sum_a = Integral::build(w, h, |i| u64::from(pa[i]));
    let sum_b = Integral::build(w, h, |i| u64::from(pb[i]));
    let sum_aa = Integral::build(w, h, |i| u64::from(pa[i]) * u64::from(pa[i]));
    let sum_bb = Integral::build(w, h, |i| u64::from(pb[i]) * u64::from(pb[i]));
    let sum_ab = Integral::build(w, h, |i| u64::from(pa[i]) * u64::from(pb[i]));

    let n = (side * side) as i128;
    let nf = n as f64;
    let var_den = (n * (n - 1)) as f64;
    let (c1, c2) = (params.c1(), params.c2());

    let mut total = 0.0f64;
    let mut windows = 0usize;
    for y in 0..=h - side {
        for x in 0..=w - side {
            let sa = i128::from(sum_a.block(x, y, side));
            let sb = i128::from(sum_b.block(x, y, side));
            let saa = i128::from(sum_aa.block(x, y, side));
            let sbb = i128::from(sum_bb.block(x, y, side));
            let sab = i128::from(sum_ab.block(x, y, side));

            let mu_a = sa as f64 / nf;
            let mu_b = sb as f64 / nf;
            let (var_a, var_b, cov) = if n > 1 {
                (
                    (n * saa - sa * sa) as f64 / var_den,
                    (n * sbb - sb * sb) as f64 / var_den,
                    (n * sab - sa * sb) as f64 / var_den,
                )
            } else {
                (0.0, 0.0, 0.0)
            };

            let num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2);
            let den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2);
            total += num / den;
            windows += 1;
        }
    }
    Ok(MetricResult::Finite(total / windows as f64))
}
