//! Synthetic inputs for tests and benchmarks.

use rand::Rng;

use crate::image::{DepthMap, Frame};
use crate::rng;

/// Independent uniform channels in `[0, 1]`, seeded.
pub fn textured_frame(width: usize, height: usize, seed: u64) -> Frame {
    textured_frame_in(width, height, seed, [1.0; 3])
}

/// Independent uniform channels in `[0, hi[c]]`, seeded.
pub fn textured_frame_in(width: usize, height: usize, seed: u64, hi: [f32; 3]) -> Frame {
    let mut r = rng::stream(seed, "fixture-texture", 0);
    Frame::from_fn(width, height, |_, _| {
        [
            r.random::<f32>() * hi[0],
            r.random::<f32>() * hi[1],
            r.random::<f32>() * hi[2],
        ]
    })
    .expect("nonzero dimensions")
}

/// Depth rising linearly from 0 at the top-left corner to `max` at the bottom-right.
pub fn gradient_depth(width: usize, height: usize, max: f32) -> DepthMap {
    let span = (width + height).saturating_sub(2).max(1) as f32;
    DepthMap::from_fn(width, height, |x, y| max * (x + y) as f32 / span).expect("nonzero dimensions")
}
