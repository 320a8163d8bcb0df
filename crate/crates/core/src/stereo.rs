//! Local block matching: SAD/SSD window costs, winner-takes-all disparity
//! selection and triangulation to metric depth.
//!
//! Disparities follow rectified geometry: a left pixel `(x, y)` matches the
//! right pixel `(x - d, y)` with `d >= 0`. Pixels whose support window, or any
//! of its disparity-shifted copies, would leave the image are marked invalid;
//! nothing is padded.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imaging::{GrayImage, ImageError, PixelCoord};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StereoError {
    #[error("left image is {left_w}x{left_h} but right image is {right_w}x{right_h}")]
    DimensionMismatch {
        left_w: usize,
        left_h: usize,
        right_w: usize,
        right_h: usize,
    },
    #[error("window side {side} exceeds the smaller image dimension {limit}")]
    WindowTooLarge { side: usize, limit: usize },
    #[error("max disparity {max_disparity} must be smaller than the image width {width}")]
    DisparityRange { max_disparity: usize, width: usize },
    #[error("max disparity {0} does not fit the 16-bit disparity encoding")]
    DisparityOverflow(usize),
    #[error("disparity map buffers have inconsistent lengths")]
    BufferSize,
    #[error("valid disparity {value} at index {index} exceeds max disparity {max_disparity}")]
    DisparityOutOfRange {
        index: usize,
        value: u16,
        max_disparity: u16,
    },
    #[error("focal length must be positive and finite, got {0}")]
    FocalLength(f64),
    #[error("baseline must be positive and finite, got {0}")]
    Baseline(f64),
    #[error(transparent)]
    Image(#[from] ImageError),
}

/// Matching cost aggregated over the support window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CostMethod {
    /// Sum of absolute differences.
    Sad,
    /// Sum of squared differences.
    Ssd,
}

impl CostMethod {
    pub const ALL: [CostMethod; 2] = [CostMethod::Sad, CostMethod::Ssd];

    pub fn as_str(self) -> &'static str {
        match self {
            CostMethod::Sad => "SAD",
            CostMethod::Ssd => "SSD",
        }
    }

    #[inline]
    fn pixel_cost(self, a: u8, b: u8) -> u64 {
        let diff = u64::from(a.abs_diff(b));
        match self {
            CostMethod::Sad => diff,
            CostMethod::Ssd => diff * diff,
        }
    }
}

impl fmt::Display for CostMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CostMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "sad" => Ok(CostMethod::Sad),
            "ssd" => Ok(CostMethod::Ssd),
            other => Err(format!("unknown cost method `{other}` (expected sad or ssd)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MatchParams {
    pub window_radius: usize,
    pub max_disparity: usize,
    pub method: CostMethod,
}

impl Default for MatchParams {
    fn default() -> Self {
        Self {
            window_radius: 3,
            max_disparity: 64,
            method: CostMethod::Sad,
        }
    }
}

impl MatchParams {
    pub fn new(window_radius: usize, max_disparity: usize, method: CostMethod) -> Self {
        Self {
            window_radius,
            max_disparity,
            method,
        }
    }

    #[inline]
    pub fn window_side(&self) -> usize {
        2 * self.window_radius + 1
    }

    pub fn with_method(self, method: CostMethod) -> Self {
        Self { method, ..self }
    }

    /// Checks the parameters against an image of the given size.
    pub fn validate_for(&self, width: usize, height: usize) -> Result<(), StereoError> {
        let side = self.window_side();
        let limit = width.min(height);
        if side > limit {
            return Err(StereoError::WindowTooLarge { side, limit });
        }
        if self.max_disparity >= width {
            return Err(StereoError::DisparityRange {
                max_disparity: self.max_disparity,
                width,
            });
        }
        if self.max_disparity > usize::from(u16::MAX) {
            return Err(StereoError::DisparityOverflow(self.max_disparity));
        }
        Ok(())
    }

    /// Whether `(x, y)` has every candidate window in bounds.
    pub fn is_valid_pixel(&self, width: usize, height: usize, x: usize, y: usize) -> bool {
        let r = self.window_radius;
        x >= r + self.max_disparity && x + r < width && y >= r && y + r < height
    }

    /// Number of pixels with a full search range.
    pub fn valid_pixel_count(&self, width: usize, height: usize) -> usize {
        let r = self.window_radius;
        let cols = width.saturating_sub(2 * r + self.max_disparity);
        let rows = height.saturating_sub(2 * r);
        cols * rows
    }

    /// Nominal elementary difference evaluations for an image of this size:
    /// valid pixels × candidate disparities × window area.
    pub fn elementary_ops(&self, width: usize, height: usize) -> u64 {
        let side = self.window_side() as u64;
        self.valid_pixel_count(width, height) as u64 * (self.max_disparity as u64 + 1) * side * side
    }
}

/// Integer disparity per left-image pixel plus a validity mask.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DisparityMap {
    width: usize,
    height: usize,
    max_disparity: u16,
    disparities: Vec<u16>,
    valid: Vec<bool>,
}

impl DisparityMap {
    pub fn new(
        width: usize,
        height: usize,
        max_disparity: u16,
        disparities: Vec<u16>,
        valid: Vec<bool>,
    ) -> Result<Self, StereoError> {
        if width == 0 || height == 0 {
            return Err(StereoError::Image(ImageError::ZeroDimension {
                field: if width == 0 { "width" } else { "height" },
            }));
        }
        let n = width * height;
        if disparities.len() != n || valid.len() != n {
            return Err(StereoError::BufferSize);
        }
        if let Some(index) = disparities
            .iter()
            .zip(&valid)
            .position(|(&d, &ok)| ok && d > max_disparity)
        {
            return Err(StereoError::DisparityOutOfRange {
                index,
                value: disparities[index],
                max_disparity,
            });
        }
        Ok(Self {
            width,
            height,
            max_disparity,
            disparities,
            valid,
        })
    }

    /// A map where every pixel holds disparity `d` and is valid.
    pub fn uniform(width: usize, height: usize, max_disparity: u16, d: u16) -> Result<Self, StereoError> {
        let n = width * height;
        Self::new(width, height, max_disparity, vec![d; n], vec![true; n])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn max_disparity(&self) -> u16 {
        self.max_disparity
    }

    pub fn disparities(&self) -> &[u16] {
        &self.disparities
    }

    pub fn valid_mask(&self) -> &[bool] {
        &self.valid
    }

    /// Disparity at `(x, y)`, or `None` when the pixel is invalid.
    pub fn get(&self, x: usize, y: usize) -> Option<u16> {
        let i = y * self.width + x;
        self.valid[i].then(|| self.disparities[i])
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    pub fn same_shape(&self, other: &DisparityMap) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.max_disparity == other.max_disparity
    }
}

/// Metric depth per pixel, present where the disparity was valid and nonzero.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    pub width: usize,
    pub height: usize,
    pub depths: Vec<Option<f64>>,
    pub focal_length: f64,
    pub baseline: f64,
}

impl DepthMap {
    pub fn get(&self, x: usize, y: usize) -> Option<f64> {
        self.depths[y * self.width + x]
    }
}

/// Work accounting for one disparity computation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostStats {
    /// Absolute- or squared-difference evaluations, counted nominally as
    /// valid pixels × (max disparity + 1) × window area.
    pub elementary_ops: u64,
    pub wall_seconds: f64,
}

/// Aggregated cost at `at` for disparity `d`.
///
/// Both windows must lie inside their images; violating that is a caller bug
/// and panics.
pub fn window_cost(
    left: &GrayImage,
    right: &GrayImage,
    at: PixelCoord,
    d: usize,
    params: &MatchParams,
) -> u64 {
    let r = params.window_radius;
    assert!(
        at.x >= r + d && at.x + r < left.width() && at.y >= r && at.y + r < left.height(),
        "window at ({}, {}) with disparity {d} leaves the image",
        at.x,
        at.y
    );
    assert!(
        at.x + r - d < right.width() && at.y + r < right.height(),
        "shifted window leaves the right image"
    );
    let mut cost = 0u64;
    for y in at.y - r..=at.y + r {
        let lrow = &left.row(y)[at.x - r..=at.x + r];
        let rrow = &right.row(y)[at.x - r - d..=at.x + r - d];
        for (&a, &b) in lrow.iter().zip(rrow) {
            cost += params.method.pixel_cost(a, b);
        }
    }
    cost
}

/// Accumulator for aggregated window costs.
///
/// Running sums add the incoming term before dropping the outgoing one, so
/// they may pass through values above the window bound. Modular arithmetic
/// keeps every completed sum exact.
trait Accum: Copy + Ord + Default {
    const MAX: Self;
    fn add(self, other: Self) -> Self;
    fn sub(self, other: Self) -> Self;
}

impl Accum for u32 {
    const MAX: Self = u32::MAX;

    #[inline]
    fn add(self, other: Self) -> Self {
        self.wrapping_add(other)
    }

    #[inline]
    fn sub(self, other: Self) -> Self {
        self.wrapping_sub(other)
    }
}

impl Accum for u64 {
    const MAX: Self = u64::MAX;

    #[inline]
    fn add(self, other: Self) -> Self {
        self.wrapping_add(other)
    }

    #[inline]
    fn sub(self, other: Self) -> Self {
        self.wrapping_sub(other)
    }
}

/// Computes a winner-takes-all disparity map.
///
/// Costs for each candidate disparity are aggregated with running column and
/// row sums, so the work per disparity is linear in the pixel count. Equal
/// costs resolve to the smallest disparity.
pub fn compute_disparity(
    left: &GrayImage,
    right: &GrayImage,
    params: &MatchParams,
) -> Result<(DisparityMap, CostStats), StereoError> {
    if !left.same_dimensions(right) {
        return Err(StereoError::DimensionMismatch {
            left_w: left.width(),
            left_h: left.height(),
            right_w: right.width(),
            right_h: right.height(),
        });
    }
    params.validate_for(left.width(), left.height())?;

    let start = Instant::now();
    let side = params.window_side() as u64;
    let (disparities, valid) = match params.method {
        // SAD window sums need 255·side² and fit 32 bits for any practical window.
        CostMethod::Sad if 255 * side * side <= u64::from(u32::MAX) => {
            aggregate::<u32>(left, right, params, |a, b| u32::from(a.abs_diff(b)))
        }
        CostMethod::Sad => aggregate::<u64>(left, right, params, |a, b| u64::from(a.abs_diff(b))),
        CostMethod::Ssd => aggregate::<u64>(left, right, params, |a, b| {
            let diff = u64::from(a.abs_diff(b));
            diff * diff
        }),
    };
    let wall_seconds = start.elapsed().as_secs_f64();

    let map = DisparityMap {
        width: left.width(),
        height: left.height(),
        max_disparity: params.max_disparity as u16,
        disparities,
        valid,
    };
    let stats = CostStats {
        elementary_ops: params.elementary_ops(left.width(), left.height()),
        wall_seconds,
    };
    Ok((map, stats))
}

fn aggregate<T: Accum>(
    left: &GrayImage,
    right: &GrayImage,
    params: &MatchParams,
    cost: impl Fn(u8, u8) -> T,
) -> (Vec<u16>, Vec<bool>) {
    let (w, h) = (left.width(), left.height());
    let r = params.window_radius;
    let max_d = params.max_disparity;
    let mut best_d = vec![0u16; w * h];
    let mut valid = vec![false; w * h];
    if params.valid_pixel_count(w, h) == 0 {
        return (best_d, valid);
    }

    // Only columns >= max_d can take part in a valid pixel's window.
    let col0 = max_d;
    let (x_lo, x_hi) = (max_d + r, w - 1 - r);
    let (y_lo, y_hi) = (r, h - 1 - r);
    let span = w - col0;
    let mut best = vec![T::MAX; w * h];
    let mut colsum = vec![T::default(); span];

    for d in 0..=max_d {
        colsum.fill(T::default());
        for y in 0..2 * r + 1 {
            let lrow = &left.row(y)[col0..];
            let rrow = &right.row(y)[col0 - d..w - d];
            for ((acc, &a), &b) in colsum.iter_mut().zip(lrow).zip(rrow) {
                *acc = acc.add(cost(a, b));
            }
        }
        for y in y_lo..=y_hi {
            if y > y_lo {
                let (add, sub) = (y + r, y - r - 1);
                let ladd = &left.row(add)[col0..];
                let radd = &right.row(add)[col0 - d..w - d];
                let lsub = &left.row(sub)[col0..];
                let rsub = &right.row(sub)[col0 - d..w - d];
                for (i, acc) in colsum.iter_mut().enumerate() {
                    *acc = acc.add(cost(ladd[i], radd[i])).sub(cost(lsub[i], rsub[i]));
                }
            }
            let mut sum = T::default();
            for &c in &colsum[..2 * r + 1] {
                sum = sum.add(c);
            }
            let row_best = &mut best[y * w..(y + 1) * w];
            let row_d = &mut best_d[y * w..(y + 1) * w];
            for x in x_lo..=x_hi {
                if x > x_lo {
                    sum = sum.add(colsum[x + r - col0]).sub(colsum[x - r - 1 - col0]);
                }
                if sum < row_best[x] {
                    row_best[x] = sum;
                    row_d[x] = d as u16;
                }
            }
        }
    }

    for y in y_lo..=y_hi {
        valid[y * w + x_lo..=y * w + x_hi].fill(true);
    }
    (best_d, valid)
}

/// Triangulates depth as `focal_length × baseline ÷ disparity`.
pub fn disparity_to_depth(
    map: &DisparityMap,
    focal_length: f64,
    baseline: f64,
) -> Result<DepthMap, StereoError> {
    if !(focal_length.is_finite() && focal_length > 0.0) {
        return Err(StereoError::FocalLength(focal_length));
    }
    if !(baseline.is_finite() && baseline > 0.0) {
        return Err(StereoError::Baseline(baseline));
    }
    let depths = map
        .disparities
        .iter()
        .zip(&map.valid)
        .map(|(&d, &ok)| (ok && d > 0).then(|| focal_length * baseline / f64::from(d)))
        .collect();
    Ok(DepthMap {
        width: map.width,
        height: map.height,
        depths,
        focal_length,
        baseline,
    })
}

/// Renders a map as gray levels: `round(255·d / max_disparity)`, invalid
/// pixels black.
pub fn scale_to_gray(map: &DisparityMap) -> GrayImage {
    let max_d = u32::from(map.max_disparity);
    let pixels = map
        .disparities
        .iter()
        .zip(&map.valid)
        .map(|(&d, &ok)| {
            if !ok || max_d == 0 {
                0
            } else {
                ((2 * 255 * u32::from(d) + max_d) / (2 * max_d)) as u8
            }
        })
        .collect();
    GrayImage::new(map.width, map.height, pixels).expect("map dimensions are nonzero")
}
