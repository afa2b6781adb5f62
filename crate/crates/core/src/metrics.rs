//! PSNR and SSIM against a reference, per frame and per video.
//!
//! Frames are compared in `[0, 1]` (peak 1). SSIM uses an 11×11 Gaussian
//! window with σ = 1.5, K1 = 0.01, K2 = 0.03 and dynamic range 1, evaluated
//! on every fully-contained window of each channel; the per-channel means
//! are then averaged.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{Frame, CHANNELS};

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;
pub const SSIM_CONVENTION: &str = "per-channel mean; gaussian 11x11 sigma 1.5; K1 0.01; K2 0.03; L 1.0";

/// Peak signal-to-noise ratio with peak 1; `f64::INFINITY` for identical frames.
pub fn psnr(a: &Frame, b: &Frame) -> Result<f64> {
    a.ensure_same_dims(b.dims())?;
    let mse = mse(a, b);
    Ok(if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (1.0 / mse).log10()
    })
}

fn mse(a: &Frame, b: &Frame) -> f64 {
    let row_sums: Vec<f64> = a
        .rows()
        .zip(b.rows())
        .map(|(ra, rb)| {
            ra.iter()
                .zip(rb)
                .map(|(&x, &y)| {
                    let d = f64::from(x) - f64::from(y);
                    d * d
                })
                .sum()
        })
        .collect();
    row_sums.iter().sum::<f64>() / a.data().len() as f64
}

fn gaussian_kernel() -> [f64; SSIM_WINDOW] {
    let mut k = [0.0; SSIM_WINDOW];
    let c = (SSIM_WINDOW / 2) as f64;
    for (i, v) in k.iter_mut().enumerate() {
        let d = i as f64 - c;
        *v = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let s: f64 = k.iter().sum();
    k.map(|v| v / s)
}

/// Valid-mode separable filtering: output is `(w - 10) x (h - 10)`.
fn filter_valid(src: &[f64], w: usize, h: usize, k: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let ow = w - SSIM_WINDOW + 1;
    let oh = h - SSIM_WINDOW + 1;
    let mut horiz = vec![0.0; ow * h];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        for x in 0..ow {
            horiz[y * ow + x] = k.iter().zip(&row[x..x + SSIM_WINDOW]).map(|(a, b)| a * b).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = k
                .iter()
                .enumerate()
                .map(|(i, kv)| kv * horiz[(y + i) * ow + x])
                .sum();
        }
    }
    out
}

fn ssim_channel(a: &[f64], b: &[f64], w: usize, h: usize) -> f64 {
    let k = gaussian_kernel();
    let c1 = (SSIM_K1 * 1.0).powi(2);
    let c2 = (SSIM_K2 * 1.0).powi(2);
    let aa: Vec<f64> = a.iter().map(|v| v * v).collect();
    let bb: Vec<f64> = b.iter().map(|v| v * v).collect();
    let ab: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
    let mu_a = filter_valid(a, w, h, &k);
    let mu_b = filter_valid(b, w, h, &k);
    let e_aa = filter_valid(&aa, w, h, &k);
    let e_bb = filter_valid(&bb, w, h, &k);
    let e_ab = filter_valid(&ab, w, h, &k);
    let mut sum = 0.0;
    for i in 0..mu_a.len() {
        let (ma, mb) = (mu_a[i], mu_b[i]);
        let var_a = e_aa[i] - ma * ma;
        let var_b = e_bb[i] - mb * mb;
        let cov = e_ab[i] - ma * mb;
        let num = (2.0 * ma * mb + c1) * (2.0 * cov + c2);
        let den = (ma * ma + mb * mb + c1) * (var_a + var_b + c2);
        sum += num / den;
    }
    sum / mu_a.len() as f64
}

/// Mean structural similarity, averaged over channels.
pub fn ssim(a: &Frame, b: &Frame) -> Result<f64> {
    a.ensure_same_dims(b.dims())?;
    let (w, h) = a.dims();
    if w.min(h) < SSIM_WINDOW {
        return Err(Error::InvalidParameter(format!(
            "SSIM needs frames of at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {w}x{h}"
        )));
    }
    let plane = |f: &Frame, c: usize| -> Vec<f64> {
        f.data().iter().skip(c).step_by(CHANNELS).map(|&v| f64::from(v)).collect()
    };
    let per_channel: Vec<f64> = (0..CHANNELS)
        .into_par_iter()
        .map(|c| ssim_channel(&plane(a, c), &plane(b, c), w, h))
        .collect();
    Ok(per_channel.iter().sum::<f64>() / CHANNELS as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameScore {
    pub frame_index: usize,
    #[serde(with = "finite_or_inf")]
    pub psnr: f64,
    pub ssim: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub per_frame: Vec<FrameScore>,
    /// Mean over frames with finite PSNR; infinite when every frame is identical.
    #[serde(with = "finite_or_inf")]
    pub mean_psnr: f64,
    pub mean_ssim: f64,
    /// Frames excluded from `mean_psnr` because they matched exactly.
    pub infinite_psnr_frames: usize,
    pub ssim_convention: String,
}

/// Scores a restored sequence against its reference.
pub fn evaluate_video(restored: &[Frame], reference: &[Frame]) -> Result<MetricReport> {
    if restored.len() != reference.len() {
        return Err(Error::LengthMismatch {
            left: restored.len(),
            right: reference.len(),
        });
    }
    if restored.is_empty() {
        return Err(Error::Empty("no frames to evaluate"));
    }
    let per_frame: Vec<FrameScore> = restored
        .par_iter()
        .zip(reference)
        .enumerate()
        .map(|(i, (r, g))| {
            Ok(FrameScore {
                frame_index: i,
                psnr: psnr(r, g)?,
                ssim: ssim(r, g)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(summarize(per_frame))
}

/// Aggregates per-frame scores in index order.
pub fn summarize(per_frame: Vec<FrameScore>) -> MetricReport {
    let finite: Vec<f64> = per_frame.iter().map(|s| s.psnr).filter(|p| p.is_finite()).collect();
    let infinite = per_frame.len() - finite.len();
    let mean_psnr = if finite.is_empty() {
        f64::INFINITY
    } else {
        finite.iter().sum::<f64>() / finite.len() as f64
    };
    let mean_ssim = per_frame.iter().map(|s| s.ssim).sum::<f64>() / per_frame.len().max(1) as f64;
    MetricReport {
        per_frame,
        mean_psnr,
        mean_ssim,
        infinite_psnr_frames: infinite,
        ssim_convention: SSIM_CONVENTION.to_string(),
    }
}

/// JSON has no infinity; write it as the string `"inf"`.
mod finite_or_inf {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() && *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Str(s) if s == "inf" => Ok(f64::INFINITY),
            Repr::Str(s) => Err(de::Error::custom(format!("expected number or \"inf\", got {s:?}"))),
        }
    }
}
