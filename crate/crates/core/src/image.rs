//! Pixel containers shared by every stage of the pipeline.
//!
//! All buffers are row-major. Frames interleave their three channels, so the
//! value of channel `c` at `(x, y)` lives at `(y * width + x) * 3 + c`.
//! Golden tests depend on this traversal order.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CHANNELS: usize = 3;

/// Linear RGB triple.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rgb(pub [f32; 3]);

impl Rgb {
    pub const fn gray(v: f32) -> Self {
        Rgb([v, v, v])
    }

    pub fn max_channel(&self) -> f32 {
        self.0[0].max(self.0[1]).max(self.0[2])
    }

    pub fn min_channel(&self) -> f32 {
        self.0[0].min(self.0[1]).min(self.0[2])
    }
}

impl std::ops::Index<usize> for Rgb {
    type Output = f32;

    fn index(&self, c: usize) -> &f32 {
        &self.0[c]
    }
}

/// H×W×3 image with per-channel values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl Frame {
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        check_dims(width, height)?;
        if data.len() != width * height * CHANNELS {
            return Err(Error::BufferLength {
                width,
                height,
                channels: CHANNELS,
                actual: data.len(),
            });
        }
        Ok(Frame {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, color: Rgb) -> Result<Self> {
        check_dims(width, height)?;
        let data = std::iter::repeat_n(color.0, width * height)
            .flatten()
            .collect();
        Ok(Frame {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> [f32; 3],
    ) -> Result<Self> {
        check_dims(width, height)?;
        let mut data = Vec::with_capacity(width * height * CHANNELS);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Ok(Frame {
            width,
            height,
            data,
        })
    }

    /// Decodes interleaved 8-bit RGB as `v / 255`.
    pub fn from_rgb8(width: usize, height: usize, bytes: &[u8]) -> Result<Self> {
        let data = bytes.iter().map(|&b| f32::from(b) / 255.0).collect();
        Frame::new(width, height, data)
    }

    /// Encodes to interleaved 8-bit RGB as `round(v * 255)`, half away from zero.
    pub fn to_rgb8(&self) -> Vec<u8> {
        self.data.iter().map(|&v| quantize_u8(v)).collect()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn pixel(&self, x: usize, y: usize) -> [f32; 3] {
        let i = (y * self.width + x) * CHANNELS;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn set_pixel(&mut self, x: usize, y: usize, rgb: [f32; 3]) {
        let i = (y * self.width + x) * CHANNELS;
        self.data[i..i + CHANNELS].copy_from_slice(&rgb);
    }

    pub(crate) fn rows(&self) -> std::slice::ChunksExact<'_, f32> {
        self.data.chunks_exact(self.width * CHANNELS)
    }

    pub(crate) fn ensure_same_dims(&self, dims: (usize, usize)) -> Result<()> {
        if self.dims() != dims {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                actual: dims,
            });
        }
        Ok(())
    }
}

/// Single-channel field; used for transmissions and per-pixel accumulators.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl ScalarField {
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        check_dims(width, height)?;
        if data.len() != width * height {
            return Err(Error::BufferLength {
                width,
                height,
                channels: 1,
                actual: data.len(),
            });
        }
        Ok(ScalarField {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, v: f32) -> Result<Self> {
        ScalarField::new(width, height, vec![v; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }
}

/// Scene depth, larger is farther. Values are finite and non-negative.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl DepthMap {
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        check_dims(width, height)?;
        if data.len() != width * height {
            return Err(Error::BufferLength {
                width,
                height,
                channels: 1,
                actual: data.len(),
            });
        }
        if let Some(i) = data.iter().position(|d| !d.is_finite() || *d < 0.0) {
            return Err(Error::InvalidParameter(format!(
                "depth at pixel {i} is {} (must be finite and >= 0)",
                data[i]
            )));
        }
        Ok(DepthMap {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, d: f32) -> Result<Self> {
        DepthMap::new(width, height, vec![d; width * height])
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f32) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        DepthMap::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }

    pub fn max_depth(&self) -> f32 {
        self.data.iter().copied().fold(0.0, f32::max)
    }
}

fn check_dims(width: usize, height: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidParameter(format!(
            "image dimensions must be at least 1x1, got {width}x{height}"
        )));
    }
    Ok(())
}

pub(crate) fn quantize_u8(v: f32) -> u8 {
    // f32::round is half away from zero
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Clamps every channel to `[0, 1]`. Fails on the first non-finite value.
pub fn clamp_frame(f: &Frame) -> Result<Frame> {
    if let Some(i) = f.data.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            pixel: i / CHANNELS,
            channel: i % CHANNELS,
        });
    }
    let data = f.data.iter().map(|v| v.clamp(0.0, 1.0)).collect();
    Ok(Frame {
        width: f.width,
        height: f.height,
        data,
    })
}

/// Per-channel `(1 - w) * a + w * b`.
pub fn lerp_frames(a: &Frame, b: &Frame, w: f32) -> Result<Frame> {
    a.ensure_same_dims(b.dims())?;
    if !(0.0..=1.0).contains(&w) {
        return Err(Error::InvalidParameter(format!(
            "interpolation weight {w} outside [0, 1]"
        )));
    }
    let mut data = vec![0.0f32; a.data.len()];
    let row = a.width * CHANNELS;
    data.par_chunks_mut(row)
        .zip(a.data.par_chunks(row).zip(b.data.par_chunks(row)))
        .for_each(|(out, (ra, rb))| {
            for ((o, &va), &vb) in out.iter_mut().zip(ra).zip(rb) {
                *o = lerp(va, vb, w);
            }
        });
    Ok(Frame {
        width: a.width,
        height: a.height,
        data,
    })
}

/// Scalar blend kernel shared by haze and particle compositing.
#[inline]
pub(crate) fn lerp(a: f32, b: f32, w: f32) -> f32 {
    // exact at both endpoints, which a + w * (b - a) is not
    (1.0 - w) * a + w * b
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn frame_of(values: &[f32]) -> Frame {
        let n = values.len();
        let data = values.iter().flat_map(|&v| [v, v, v]).collect();
        Frame::new(n, 1, data).unwrap()
    }

    #[test]
    fn clamp_identity_on_zeros() {
        let f = Frame::filled(4, 3, Rgb::gray(0.0)).unwrap();
        assert_eq!(clamp_frame(&f).unwrap(), f);
    }

    #[test]
    fn clamp_bounds() {
        let f = frame_of(&[1.3, -0.2, 0.5]);
        let c = clamp_frame(&f).unwrap();
        assert_eq!(c.pixel(0, 0), [1.0; 3]);
        assert_eq!(c.pixel(1, 0), [0.0; 3]);
        assert_eq!(c.pixel(2, 0), [0.5; 3]);
    }

    #[test]
    fn clamp_names_first_nonfinite_pixel() {
        let mut f = frame_of(&[0.1, 0.2, 0.3, 0.4]);
        f.data_mut()[7] = f32::NAN;
        f.data_mut()[10] = f32::INFINITY;
        match clamp_frame(&f) {
            Err(Error::NonFinite { pixel, channel }) => assert_eq!((pixel, channel), (2, 1)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn lerp_endpoints_and_midpoint() {
        let a = frame_of(&[0.2, 0.7]);
        let b = frame_of(&[0.6, 0.1]);
        assert_eq!(lerp_frames(&a, &b, 0.0).unwrap(), a);
        assert_eq!(lerp_frames(&a, &b, 1.0).unwrap(), b);
        let mid = lerp_frames(&a, &b, 0.5).unwrap();
        assert!((mid.pixel(0, 0)[0] - 0.4).abs() < 1e-7);
    }

    #[test]
    fn lerp_rejects_bad_inputs() {
        let a = frame_of(&[0.2, 0.7]);
        let b = frame_of(&[0.6]);
        assert!(matches!(lerp_frames(&a, &b, 0.5), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(lerp_frames(&a, &a, 1.5), Err(Error::InvalidParameter(_))));
        assert!(matches!(lerp_frames(&a, &a, -0.1), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn rejects_empty_and_bad_lengths() {
        assert!(Frame::new(0, 1, vec![]).is_err());
        assert!(Frame::new(2, 2, vec![0.0; 11]).is_err());
        assert!(DepthMap::new(1, 1, vec![-1.0]).is_err());
        assert!(DepthMap::new(1, 1, vec![f32::NAN]).is_err());
    }

    #[test]
    fn rgb8_round_trip() {
        let bytes: Vec<u8> = (0..=255u8).flat_map(|b| [b, 255 - b, b / 2]).collect();
        let f = Frame::from_rgb8(256, 1, &bytes).unwrap();
        assert_eq!(f.to_rgb8(), bytes);
    }

    #[test]
    fn quantize_rounds_half_away_from_zero() {
        assert_eq!(quantize_u8(0.5 / 255.0), 1);
        assert_eq!(quantize_u8(1.5 / 255.0), 2);
        assert_eq!(quantize_u8(0.49 / 255.0), 0);
    }

    proptest! {
        #[test]
        fn lerp_is_convex(a in prop::collection::vec(0.0f32..=1.0, 12),
                          b in prop::collection::vec(0.0f32..=1.0, 12),
                          w in 0.0f32..=1.0) {
            let fa = Frame::new(2, 2, a.clone()).unwrap();
            let fb = Frame::new(2, 2, b.clone()).unwrap();
            let out = lerp_frames(&fa, &fb, w).unwrap();
            for ((o, x), y) in out.data().iter().zip(&a).zip(&b) {
                prop_assert!(*o >= x.min(*y) - 1e-7 && *o <= x.max(*y) + 1e-7);
            }
        }

        #[test]
        fn clamp_is_idempotent(v in prop::collection::vec(-2.0f32..3.0, 12)) {
            let f = Frame::new(4, 1, v).unwrap();
            let once = clamp_frame(&f).unwrap();
            let twice = clamp_frame(&once).unwrap();
            prop_assert_eq!(&once, &twice);
            prop_assert!(once.data().iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }
}
