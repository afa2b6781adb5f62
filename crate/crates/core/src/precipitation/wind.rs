use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::rng;

/// Ornstein-Uhlenbeck parameters, applied independently per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WindConfig {
    /// Mean reversion rate per frame.
    pub theta: f64,
    /// Long-run mean, px/frame².
    pub mean: [f64; 2],
    /// Noise amplitude, px/frame².
    pub sigma: f64,
    /// Magnitude cap.
    pub max: f64,
}

impl Default for WindConfig {
    fn default() -> Self {
        WindConfig {
            theta: 0.1,
            mean: [0.0, 0.0],
            sigma: 0.15,
            max: 5.0,
        }
    }
}

/// Image-plane wind shared by all particles. The noise for frame `t` comes
/// from the stream `(seed, "wind", t)`, so the state is just the vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindState {
    pub w: [f64; 2],
    pub seed: u64,
}

impl WindState {
    pub fn new(seed: u64) -> Self {
        WindState { w: [0.0, 0.0], seed }
    }
}

/// `w <- w + theta (mean - w) + sigma n(t)`, then clamped to `|w| <= max`.
pub fn step_wind(state: &WindState, t: u64, cfg: &WindConfig) -> WindState {
    let mut r = rng::stream(state.seed, "wind", t);
    let mut w = state.w;
    for (axis, v) in w.iter_mut().enumerate() {
        let n: f64 = StandardNormal.sample(&mut r);
        *v += cfg.theta * (cfg.mean[axis] - *v) + cfg.sigma * n;
    }
    let mag = w[0].hypot(w[1]);
    if mag > cfg.max {
        let s = cfg.max / mag;
        w = [w[0] * s, w[1] * s];
    }
    WindState { w, seed: state.seed }
}
