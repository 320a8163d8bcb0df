//! Stereo block matching for camera sensor networks.
//!
//! * [`imaging`]: grayscale rasters and binary PGM I/O.
//! * [`stereo`]: SAD/SSD block matching with winner-takes-all selection.
//! * [`sidecar`]: exact binary disparity-map encodings (plain and run-length).
//! * [`metrics`]: MSE, PSNR and SSIM.
//! * [`synth`]: seeded synthetic stereo pairs.
//! * [`sim`]: energy-aware network simulator built on the above.

pub mod imaging;
pub mod metrics;
pub mod sidecar;
pub mod sim;
pub mod stereo;
pub mod synth;

pub use imaging::{downscale, parse_pgm, serialize_pgm, GrayImage, ImageError, PixelCoord};
pub use metrics::{mse, psnr, ssim, MetricError, MetricResult, SsimParams};
pub use stereo::{
    compute_disparity, disparity_to_depth, scale_to_gray, window_cost, CostMethod, CostStats,
    DepthMap, DisparityMap, MatchParams, StereoError,
};
