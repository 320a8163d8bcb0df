//! Seeded synthetic stereo imagery.
//!
//! A texture of independent uniform intensities is drawn from a ChaCha8
//! stream, so a given seed always yields the same image on every platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::imaging::GrayImage;

/// Uniform random texture of the given size.
pub fn texture(width: usize, height: usize, seed: u64) -> GrayImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    GrayImage::from_fn(width, height, |_, _| rng.gen()).expect("texture dimensions must be nonzero")
}

/// A rectified pair whose right view is the left view shifted by `disparity`
/// pixels: `right(x, y) = left(x + disparity, y)`.
///
/// Both views are cut from one texture that is `disparity` columns wider than
/// the output, so the right view's last columns hold genuine scene content
/// instead of padding.
pub fn shifted_pair(width: usize, height: usize, disparity: usize, seed: u64) -> (GrayImage, GrayImage) {
    let scene = texture(width + disparity, height, seed);
    let left = GrayImage::from_fn(width, height, |x, y| scene.get(x, y)).expect("nonzero size");
    let right = GrayImage::from_fn(width, height, |x, y| scene.get(x + disparity, y)).expect("nonzero size");
    (left, right)
}
