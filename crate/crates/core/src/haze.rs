//! Volumetric haze: forward synthesis `L = H*T + A*(1 - T)` with
//! `T = exp(-beta * D)`, and its analytic inverse with airlight estimation
//! and a non-learned scalar search for the scattering coefficient.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{DepthMap, Frame, Rgb, ScalarField, CHANNELS};

/// Lower bound on the transmission used by the inverse.
pub const DEFAULT_EPSILON: f32 = 0.05;
pub const DEFAULT_AIRLIGHT_PERCENTILE: f64 = 99.9;
pub const DEFAULT_BETA_MIN: f64 = 0.0;
pub const DEFAULT_BETA_MAX: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HazeParams {
    pub beta: f64,
    pub airlight: Rgb,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaEstimate {
    pub beta_hat: f64,
    /// Search objective at `beta_hat`.
    pub residual: f64,
    pub beta_min: f64,
    pub beta_max: f64,
}

/// `exp(-beta * D)` per pixel.
pub fn transmission(depth: &DepthMap, beta: f64) -> Result<ScalarField> {
    if !(beta.is_finite() && beta >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "scattering coefficient must be finite and >= 0, got {beta}"
        )));
    }
    let data = depth
        .data()
        .par_iter()
        .map(|&d| (-beta * f64::from(d)).exp() as f32)
        .collect();
    ScalarField::new(depth.width(), depth.height(), data)
}

pub fn apply_haze(clean: &Frame, t_field: &ScalarField, airlight: Rgb) -> Result<Frame> {
    clean.ensure_same_dims(t_field.dims())?;
    let w = clean.width();
    let mut out = clean.clone();
    out.data_mut()
        .par_chunks_mut(w * CHANNELS)
        .zip(t_field.data().par_chunks(w))
        .for_each(|(row, trow)| {
            for (px, &t) in row.chunks_exact_mut(CHANNELS).zip(trow) {
                let t = f64::from(t);
                for (c, v) in px.iter_mut().enumerate() {
                    let a = f64::from(airlight[c]);
                    *v = (f64::from(*v) * t + a * (1.0 - t)).clamp(0.0, 1.0) as f32;
                }
            }
        });
    Ok(out)
}

/// Per-channel value at `percentile` of the pixel distribution (nearest
/// rank; 100 gives the exact channel maximum).
pub fn estimate_airlight(frame: &Frame, percentile: f64) -> Result<Rgb> {
    if !(percentile > 0.0 && percentile <= 100.0) {
        return Err(Error::InvalidParameter(format!(
            "percentile must lie in (0, 100], got {percentile}"
        )));
    }
    let n = frame.pixel_count();
    let rank = ((percentile / 100.0 * n as f64).ceil() as usize).clamp(1, n);
    let mut out = [0.0f32; 3];
    let mut values = Vec::with_capacity(n);
    for (c, o) in out.iter_mut().enumerate() {
        values.clear();
        values.extend(frame.data().iter().skip(c).step_by(CHANNELS).copied());
        let (_, v, _) = values.select_nth_unstable_by(rank - 1, f32::total_cmp);
        *o = *v;
    }
    Ok(Rgb(out))
}

/// Inverts the haze model: `(L - A) / max(T, eps) + A`, clamped to `[0, 1]`.
pub fn dehaze(hazy: &Frame, depth: &DepthMap, beta_hat: f64, airlight: Rgb, epsilon: f32) -> Result<Frame> {
    check_epsilon(epsilon)?;
    hazy.ensure_same_dims(depth.dims())?;
    let t_field = transmission(depth, beta_hat)?;
    let w = hazy.width();
    let mut out = hazy.clone();
    out.data_mut()
        .par_chunks_mut(w * CHANNELS)
        .zip(t_field.data().par_chunks(w))
        .for_each(|(row, trow)| {
            for (px, &t) in row.chunks_exact_mut(CHANNELS).zip(trow) {
                for (c, v) in px.iter_mut().enumerate() {
                    *v = invert(*v, airlight[c], t, epsilon).clamp(0.0, 1.0) as f32;
                }
            }
        });
    Ok(out)
}

fn check_epsilon(epsilon: f32) -> Result<()> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!("epsilon must be > 0, got {epsilon}")));
    }
    Ok(())
}

#[inline]
fn invert(l: f32, a: f32, t: f32, epsilon: f32) -> f64 {
    let a = f64::from(a);
    (f64::from(l) - a) / f64::from(t.max(epsilon)) + a
}

/// Settings for [`search_beta_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaSearch {
    pub iterations: usize,
    /// Side of the square min-filter window of the dark channel.
    pub dark_window: usize,
    /// Weight on the fraction of channel values pushed outside `[0, 1]`.
    pub clamp_penalty: f64,
    pub epsilon: f32,
}

impl Default for BetaSearch {
    fn default() -> Self {
        BetaSearch {
            iterations: 40,
            dark_window: 15,
            clamp_penalty: 0.5,
            epsilon: DEFAULT_EPSILON,
        }
    }
}

impl BetaSearch {
    /// Mean dark channel of the dehazed frame plus the clamp penalty.
    pub fn objective(&self, hazy: &Frame, depth: &DepthMap, airlight: Rgb, beta: f64) -> f64 {
        let (w, h) = hazy.dims();
        let eps = self.epsilon;
        let rows: Vec<(Vec<f32>, u64)> = hazy
            .data()
            .par_chunks(w * CHANNELS)
            .zip(depth.data().par_chunks(w))
            .map(|(row, drow)| {
                let mut clamped = 0u64;
                let mins = row
                    .chunks_exact(CHANNELS)
                    .zip(drow)
                    .map(|(px, &d)| {
                        let t = (-beta * f64::from(d)).exp() as f32;
                        let mut m = f64::INFINITY;
                        for (c, &l) in px.iter().enumerate() {
                            let v = invert(l, airlight[c], t, eps);
                            if !(0.0..=1.0).contains(&v) {
                                clamped += 1;
                            }
                            m = m.min(v.clamp(0.0, 1.0));
                        }
                        m as f32
                    })
                    .collect();
                (mins, clamped)
            })
            .collect();
        let clamped: u64 = rows.iter().map(|r| r.1).sum();
        let min_rgb: Vec<f32> = rows.into_iter().flat_map(|r| r.0).collect();
        let dark = min_filter_2d(&min_rgb, w, h, self.dark_window / 2);
        let mean_dark = ordered_mean(&dark, w);
        mean_dark + self.clamp_penalty * clamped as f64 / (w * h * CHANNELS) as f64
    }
}

/// Dark channel: per-pixel channel minimum, then a `window`×`window` min filter.
pub fn dark_channel(frame: &Frame, window: usize) -> ScalarField {
    let (w, h) = frame.dims();
    let min_rgb: Vec<f32> = frame
        .data()
        .chunks_exact(CHANNELS)
        .map(|p| p[0].min(p[1]).min(p[2]))
        .collect();
    let data = min_filter_2d(&min_rgb, w, h, window / 2);
    ScalarField::new(w, h, data).expect("dimensions come from a valid frame")
}

fn min_filter_2d(src: &[f32], w: usize, h: usize, radius: usize) -> Vec<f32> {
    let mut rows = vec![0.0f32; w * h];
    rows.par_chunks_mut(w)
        .zip(src.par_chunks(w))
        .for_each(|(out, row)| min_filter_1d(row, radius, out));

    let mut transposed = vec![0.0f32; w * h];
    for y in 0..h {
        for x in 0..w {
            transposed[x * h + y] = rows[y * w + x];
        }
    }
    let mut cols = vec![0.0f32; w * h];
    cols.par_chunks_mut(h)
        .zip(transposed.par_chunks(h))
        .for_each(|(out, col)| min_filter_1d(col, radius, out));

    let mut out = vec![0.0f32; w * h];
    for x in 0..w {
        for y in 0..h {
            out[y * w + x] = cols[x * h + y];
        }
    }
    out
}

/// Sliding minimum over `[i - radius, i + radius]`, truncated at the ends.
fn min_filter_1d(input: &[f32], radius: usize, out: &mut [f32]) {
    let n = input.len();
    let mut deque = std::collections::VecDeque::with_capacity(2 * radius + 1);
    let mut next = 0;
    for (i, o) in out.iter_mut().enumerate() {
        let hi = (i + radius).min(n - 1);
        while next <= hi {
            while deque.back().is_some_and(|&j: &usize| input[j] >= input[next]) {
                deque.pop_back();
            }
            deque.push_back(next);
            next += 1;
        }
        while deque.front().is_some_and(|&j| j + radius < i) {
            deque.pop_front();
        }
        *o = input[*deque.front().unwrap()];
    }
}

/// Mean with a fixed summation order: row sums first, then rows in order.
fn ordered_mean(values: &[f32], w: usize) -> f64 {
    let row_sums: Vec<f64> = values
        .par_chunks(w)
        .map(|r| r.iter().map(|&v| f64::from(v)).sum())
        .collect();
    row_sums.iter().sum::<f64>() / values.len() as f64
}

/// Golden-section search for β on `[beta_min, beta_max]` with the default settings.
pub fn search_beta(hazy: &Frame, depth: &DepthMap, airlight: Rgb, beta_min: f64, beta_max: f64) -> Result<BetaEstimate> {
    search_beta_with(&BetaSearch::default(), hazy, depth, airlight, beta_min, beta_max)
}

pub fn search_beta_with(
    cfg: &BetaSearch,
    hazy: &Frame,
    depth: &DepthMap,
    airlight: Rgb,
    beta_min: f64,
    beta_max: f64,
) -> Result<BetaEstimate> {
    hazy.ensure_same_dims(depth.dims())?;
    check_epsilon(cfg.epsilon)?;
    if !(beta_min.is_finite() && beta_max.is_finite() && beta_min >= 0.0 && beta_min < beta_max) {
        return Err(Error::InvalidParameter(format!(
            "search interval must satisfy 0 <= beta_min < beta_max, got [{beta_min}, {beta_max}]"
        )));
    }
    let first = hazy.pixel(0, 0);
    if hazy.data().chunks_exact(CHANNELS).all(|p| p == first) {
        return Err(Error::Unidentifiable("constant frame"));
    }

    let f = |b: f64| cfg.objective(hazy, depth, airlight, b);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (beta_min, beta_max);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..cfg.iterations {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let mut best = if fc < fd { (c, fc) } else { (d, fd) };
    // never worse than the bracket ends
    for x in [beta_min, beta_max] {
        let fx = f(x);
        if fx < best.1 {
            best = (x, fx);
        }
    }
    Ok(BetaEstimate {
        beta_hat: best.0,
        residual: best.1,
        beta_min,
        beta_max,
    })
}
