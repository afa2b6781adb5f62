//! Analytic intensity trajectories, the five degradation settings, segment
//! labels and the cosine label affinity.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default number of frames per labelled segment.
pub const DEFAULT_SEGMENT_LENGTH: u32 = 12;
/// A type counts as present in a segment when its schedule exceeds this
/// fraction of its peak somewhere inside the segment.
pub const ACTIVITY_THRESHOLD: f64 = 0.01;
pub const DEFAULT_STEP_LEVELS: u32 = 3;
pub const DEFAULT_RAMP_FRACTION: f64 = 0.1;
pub const DEFAULT_SIGMA_FRACTION: f64 = 1.0 / 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DegradationType {
    Haze,
    Rain,
    Snow,
}

impl DegradationType {
    pub const ALL: [DegradationType; 3] = [Self::Haze, Self::Rain, Self::Snow];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_precipitation(self) -> bool {
        !matches!(self, Self::Haze)
    }
}

impl fmt::Display for DegradationType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Haze => "haze",
            Self::Rain => "rain",
            Self::Snow => "snow",
        })
    }
}

/// Curve shape. Parameters left out fall back to the documented defaults.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ProfileShape {
    Constant,
    /// `levels` equal sub-intervals rising `1/n, 2/n, .., 1`.
    Step {
        #[serde(default = "default_levels")]
        levels: u32,
    },
    /// Linear ramps of `ramp` frames at both ends (default 10% of the window).
    Trapezoid {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ramp: Option<f64>,
    },
    /// Gaussian centred on the window with `sigma` frames (default window/6),
    /// pedestal-subtracted so it reaches zero at both window edges.
    Gaussian {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sigma: Option<f64>,
    },
    /// Raised cosine, zero at both ends.
    Cosine,
}

fn default_levels() -> u32 {
    DEFAULT_STEP_LEVELS
}

impl ProfileShape {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Constant => "constant",
            Self::Step { .. } => "step",
            Self::Trapezoid { .. } => "trapezoid",
            Self::Gaussian { .. } => "gaussian",
            Self::Cosine => "cosine",
        }
    }

    pub fn is_smooth(&self) -> bool {
        matches!(self, Self::Trapezoid { .. } | Self::Gaussian { .. } | Self::Cosine)
    }
}

/// A normalized time curve active on `[t_start, t_end)`; peak value 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntensityProfile {
    #[serde(flatten)]
    pub shape: ProfileShape,
    pub t_start: u32,
    pub t_end: u32,
}

impl IntensityProfile {
    pub fn new(shape: ProfileShape, t_start: u32, t_end: u32) -> Self {
        IntensityProfile {
            shape,
            t_start,
            t_end,
        }
    }

    pub fn window(&self) -> f64 {
        f64::from(self.t_end) - f64::from(self.t_start)
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= f64::from(self.t_start) && t < f64::from(self.t_end)
    }

    /// Ramp length actually used, clamped to half the window.
    pub fn ramp(&self) -> f64 {
        let w = self.window();
        match self.shape {
            ProfileShape::Trapezoid { ramp } => ramp.unwrap_or(DEFAULT_RAMP_FRACTION * w).min(w / 2.0),
            _ => 0.0,
        }
    }

    pub fn sigma(&self) -> f64 {
        match self.shape {
            ProfileShape::Gaussian { sigma } => sigma.unwrap_or(DEFAULT_SIGMA_FRACTION * self.window()),
            _ => 0.0,
        }
    }

    /// Same profile with every defaulted parameter written out.
    pub fn materialized(&self) -> Self {
        let shape = match self.shape {
            ProfileShape::Trapezoid { .. } => ProfileShape::Trapezoid { ramp: Some(self.ramp()) },
            ProfileShape::Gaussian { .. } => ProfileShape::Gaussian { sigma: Some(self.sigma()) },
            s => s,
        };
        IntensityProfile { shape, ..*self }
    }

    /// Normalized value in `[0, 1]`; exactly zero outside the window.
    pub fn unit_value(&self, t: f64) -> f64 {
        if !self.contains(t) {
            return 0.0;
        }
        let w = self.window();
        let s = t - f64::from(self.t_start);
        match self.shape {
            ProfileShape::Constant => 1.0,
            ProfileShape::Step { levels } => {
                let n = levels.max(1);
                let k = ((s * f64::from(n) / w).floor() as u32).min(n - 1);
                f64::from(k + 1) / f64::from(n)
            }
            ProfileShape::Trapezoid { .. } => {
                let r = self.ramp();
                let e = f64::from(self.t_end) - t;
                (s / r).min(e / r).min(1.0)
            }
            ProfileShape::Gaussian { .. } => {
                let sigma = self.sigma();
                let two_var = 2.0 * sigma * sigma;
                let a = (s - w / 2.0).powi(2) / two_var;
                let b = (w / 2.0).powi(2) / two_var;
                // (exp(-a) - exp(-b)) / (1 - exp(-b)), written to stay accurate when sigma >> window
                ((-a).exp() * (a - b).exp_m1() / (-b).exp_m1()).clamp(0.0, 1.0)
            }
            ProfileShape::Cosine => {
                (1.0 - (2.0 * std::f64::consts::PI * s / w).cos()) / 2.0
            }
        }
    }

    /// Lipschitz constant of the normalized curve, for the continuous shapes.
    pub fn lipschitz(&self) -> Option<f64> {
        let w = self.window();
        match self.shape {
            ProfileShape::Constant | ProfileShape::Step { .. } => None,
            ProfileShape::Trapezoid { .. } => Some(1.0 / self.ramp()),
            ProfileShape::Gaussian { .. } => {
                let sigma = self.sigma();
                let half = w / 2.0;
                let b = half * half / (2.0 * sigma * sigma);
                // |g'| peaks at one sigma from the mean, or at the edge if that lies outside
                let slope = if sigma <= half {
                    1.0 / (sigma * std::f64::consts::E.sqrt())
                } else {
                    half / (sigma * sigma) * (-b).exp()
                };
                Some(slope / -(-b).exp_m1())
            }
            ProfileShape::Cosine => Some(std::f64::consts::PI / w),
        }
    }

    fn check(&self, what: &str, out: &mut Vec<Violation>) {
        if self.t_end <= self.t_start {
            out.push(Violation::new(
                format!("{what}: empty activity window"),
                Some((self.t_start, self.t_end)),
            ));
            return;
        }
        let bad = match self.shape {
            ProfileShape::Step { levels } => (levels == 0).then_some("step levels must be >= 1"),
            ProfileShape::Trapezoid { ramp: Some(r) } => {
                (!(r.is_finite() && r > 0.0)).then_some("trapezoid ramp must be > 0")
            }
            ProfileShape::Gaussian { sigma: Some(s) } => {
                (!(s.is_finite() && s > 0.0)).then_some("gaussian sigma must be > 0")
            }
            _ => None,
        };
        if let Some(msg) = bad {
            out.push(Violation::new(format!("{what}: {msg}"), None));
        }
    }
}

/// `profile` scaled to `peak_value` in the type's own units: scattering
/// coefficient per depth unit for haze, particles per megapixel per frame
/// for rain and snow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegradationSchedule {
    #[serde(rename = "type")]
    pub degradation_type: DegradationType,
    pub peak_value: f64,
    pub profile: IntensityProfile,
}

impl DegradationSchedule {
    pub fn new(degradation_type: DegradationType, peak_value: f64, profile: IntensityProfile) -> Self {
        DegradationSchedule {
            degradation_type,
            peak_value,
            profile,
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        self.peak_value * self.profile.unit_value(t)
    }

    pub fn is_active(&self, t: f64) -> bool {
        self.value(t) > ACTIVITY_THRESHOLD * self.peak_value
    }
}

/// Evaluates a schedule's intensity at frame `t`.
pub fn eval_profile(schedule: &DegradationSchedule, t: f64) -> f64 {
    schedule.value(t)
}

/// How adjacent windows meet in setting 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum Transition {
    /// Windows abut; no overlap allowed.
    #[default]
    Cut,
    /// Consecutive windows may overlap by up to `frames`.
    Fade { frames: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub setting: u8,
    pub duration: u32,
    #[serde(default)]
    pub schedules: Vec<DegradationSchedule>,
    #[serde(default = "default_segment_length")]
    pub segment_length: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub transition: Transition,
}

fn default_segment_length() -> u32 {
    DEFAULT_SEGMENT_LENGTH
}

impl Scenario {
    pub fn new(setting: u8, duration: u32, schedules: Vec<DegradationSchedule>) -> Self {
        Scenario {
            setting,
            duration,
            schedules,
            segment_length: DEFAULT_SEGMENT_LENGTH,
            seed: 0,
            transition: Transition::Cut,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Explicit defaults, so a manifest reproduces even if defaults change.
    pub fn materialized(&self) -> Self {
        let mut s = self.clone();
        for sch in &mut s.schedules {
            sch.profile = sch.profile.materialized();
        }
        s
    }

    pub fn validate(&self) -> Result<()> {
        let v = validate_scenario(self);
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidScenario(v))
        }
    }

    /// Sum of all schedules of `ty` at frame `t`.
    pub fn intensity(&self, ty: DegradationType, t: f64) -> f64 {
        self.schedules
            .iter()
            .filter(|s| s.degradation_type == ty)
            .map(|s| s.value(t))
            .sum()
    }

    pub fn active_types(&self, t: f64) -> MultiHot {
        let mut y = MultiHot::default();
        for s in &self.schedules {
            if s.is_active(t) {
                y.set(s.degradation_type);
            }
        }
        y
    }

    pub fn segment_count(&self) -> u32 {
        self.duration.div_ceil(self.segment_length.max(1))
    }

    pub fn segment_of(&self, t: u32) -> u32 {
        t / self.segment_length.max(1)
    }
}

/// One failed setting constraint, optionally with the frame range involved.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frames: Option<(u32, u32)>,
}

impl Violation {
    fn new(message: impl Into<String>, frames: Option<(u32, u32)>) -> Self {
        Violation {
            message: message.into(),
            frames,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.frames {
            Some((a, b)) => write!(f, "{} (frames [{a}, {b}))", self.message),
            None => f.write_str(&self.message),
        }
    }
}

/// Checks a scenario against its setting; an empty list means valid.
pub fn validate_scenario(s: &Scenario) -> Vec<Violation> {
    let mut out = Vec::new();
    if !(1..=5).contains(&s.setting) {
        out.push(Violation::new(format!("setting {} is not in 1..=5", s.setting), None));
    }
    if s.duration == 0 {
        out.push(Violation::new("duration must be at least one frame", None));
    }
    if s.segment_length == 0 {
        out.push(Violation::new("segment length must be at least one frame", None));
    }
    for (i, sch) in s.schedules.iter().enumerate() {
        let what = format!("schedule {i} ({})", sch.degradation_type);
        if !(sch.peak_value.is_finite() && sch.peak_value > 0.0) {
            out.push(Violation::new(format!("{what}: peak value must be finite and > 0"), None));
        }
        sch.profile.check(&what, &mut out);
    }

    let n = s.schedules.len();
    let covers_all = |sch: &DegradationSchedule| sch.profile.t_start == 0 && sch.profile.t_end >= s.duration;
    let distinct_types = {
        let mut types: Vec<_> = s.schedules.iter().map(|x| x.degradation_type).collect();
        types.sort();
        types.dedup();
        types.len()
    };

    match s.setting {
        1 => {
            if n != 1 {
                out.push(Violation::new("setting 1 requires exactly one schedule", None));
            } else if !covers_all(&s.schedules[0]) {
                let p = s.schedules[0].profile;
                out.push(Violation::new(
                    "setting 1 schedule must be active over the full duration",
                    Some((p.t_start, p.t_end)),
                ));
            }
        }
        2 => validate_transitions(s, &mut out),
        3 => {
            if n < 2 {
                out.push(Violation::new("setting 3 requires at least two schedules", None));
            }
            if distinct_types != n {
                out.push(Violation::new("setting 3 requires one schedule per degradation type", None));
            }
            if let Some(first) = s.schedules.first() {
                if s.schedules.iter().any(|x| x.profile != first.profile) {
                    out.push(Violation::new("setting 3 schedules must share one profile shape", None));
                }
            }
            for (i, sch) in s.schedules.iter().enumerate() {
                if !covers_all(sch) {
                    out.push(Violation::new(
                        format!("setting 3 schedule {i} must be active over the full duration"),
                        Some((sch.profile.t_start, sch.profile.t_end)),
                    ));
                }
            }
        }
        4 => {
            if n < 2 {
                out.push(Violation::new("setting 4 requires at least two schedules", None));
            } else if distinct_types < 2 {
                out.push(Violation::new("setting 4 requires at least two degradation types", None));
            }
        }
        _ => {}
    }
    out
}

fn validate_transitions(s: &Scenario, out: &mut Vec<Violation>) {
    if s.schedules.len() < 2 {
        out.push(Violation::new("setting 2 requires at least two schedules", None));
    }
    let mut sorted: Vec<&DegradationSchedule> = s.schedules.iter().collect();
    sorted.sort_by_key(|x| (x.profile.t_start, x.profile.t_end));
    let allowed = match s.transition {
        Transition::Cut => 0,
        Transition::Fade { frames } => frames,
    };

    for pair in sorted.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if a.degradation_type == b.degradation_type {
            out.push(Violation::new(
                format!("setting 2 consecutive windows share type {}", a.degradation_type),
                Some((a.profile.t_start, b.profile.t_end)),
            ));
        }
    }
    for (i, a) in sorted.iter().enumerate() {
        for b in &sorted[i + 1..] {
            let lo = b.profile.t_start;
            let hi = a.profile.t_end.min(b.profile.t_end);
            if lo < hi && hi - lo > allowed {
                out.push(Violation::new("setting 2 activity windows overlap", Some((lo, hi))));
            }
        }
    }

    let mut covered = 0u32;
    for sch in &sorted {
        if sch.profile.t_start > covered {
            out.push(Violation::new(
                "setting 2 windows leave frames uncovered",
                Some((covered, sch.profile.t_start.min(s.duration))),
            ));
        }
        covered = covered.max(sch.profile.t_end);
    }
    if covered < s.duration {
        out.push(Violation::new(
            "setting 2 windows leave frames uncovered",
            Some((covered, s.duration)),
        ));
    }
}

/// Multi-hot vector over (haze, rain, snow).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct MultiHot(pub [u8; 3]);

impl MultiHot {
    pub fn of(types: &[DegradationType]) -> Self {
        let mut y = MultiHot::default();
        for &t in types {
            y.set(t);
        }
        y
    }

    pub fn set(&mut self, ty: DegradationType) {
        self.0[ty.index()] = 1;
    }

    pub fn has(&self, ty: DegradationType) -> bool {
        self.0[ty.index()] != 0
    }

    pub fn is_empty(&self) -> bool {
        self.0.iter().all(|&v| v == 0)
    }

    fn dot(&self, other: &MultiHot) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(&a, &b)| f64::from(a) * f64::from(b))
            .sum()
    }

    fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentLabel {
    pub segment_index: u32,
    /// First frame of the segment.
    pub start: u32,
    /// One past the last frame of the segment.
    pub end: u32,
    pub y: MultiHot,
}

/// Labels frames `[i*p, min((i+1)*p, T))` with the types active anywhere inside.
pub fn segment_labels(s: &Scenario) -> Vec<SegmentLabel> {
    let p = s.segment_length.max(1);
    (0..s.segment_count())
        .map(|i| {
            let start = i * p;
            let end = (start + p).min(s.duration);
            let mut y = MultiHot::default();
            for sch in &s.schedules {
                if (start..end).any(|t| sch.is_active(f64::from(t))) {
                    y.set(sch.degradation_type);
                }
            }
            SegmentLabel {
                segment_index: i,
                start,
                end,
                y,
            }
        })
        .collect()
}

/// Cosine similarity of two multi-hot labels. Two empty labels have
/// affinity 1; one empty label against a non-empty one has affinity 0.
pub fn label_affinity(yi: &MultiHot, yj: &MultiHot) -> f64 {
    match (yi.is_empty(), yj.is_empty()) {
        (true, true) => 1.0,
        (true, false) | (false, true) => 0.0,
        _ => (yi.dot(yj) / (yi.norm() * yj.norm())).min(1.0),
    }
}

/// Positive and negative neighbour sets of one segment.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AffinitySets {
    pub positive: Vec<usize>,
    pub negative: Vec<usize>,
}

#[allow(clippy::neg_cmp_op_on_partial_ord)] // NaN thresholds must fail
pub fn affinity_partition(labels: &[SegmentLabel], tau_plus: f64, tau_minus: f64) -> Result<Vec<AffinitySets>> {
    if !(tau_plus > tau_minus) {
        return Err(Error::InvalidParameter(format!(
            "tau_plus ({tau_plus}) must exceed tau_minus ({tau_minus})"
        )));
    }
    Ok(labels
        .iter()
        .enumerate()
        .map(|(i, li)| {
            let mut sets = AffinitySets::default();
            for (j, lj) in labels.iter().enumerate() {
                let a = if i == j { 1.0 } else { label_affinity(&li.y, &lj.y) };
                if a >= tau_plus {
                    sets.positive.push(j);
                } else if a <= tau_minus {
                    sets.negative.push(j);
                }
            }
            sets
        })
        .collect())
}
