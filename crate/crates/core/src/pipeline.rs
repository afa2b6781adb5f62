//! End-to-end synthesis and restoration over frame sequences.
//!
//! Per frame `t`: evaluate the schedules, haze the clean frame with `β(t)`,
//! advance the wind, move the live particles, spawn new ones from the rain
//! and snow densities, and composite them over the hazy frame. Only the
//! particle system carries state between frames.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::haze::{self, BetaSearch};
use crate::image::{clamp_frame, DepthMap, Frame, Rgb};
use crate::io::{self as fio, FrameFormat};
use crate::precipitation::{composite, ParticleKind, ParticleSystem, PrecipitationConfig};
use crate::rng;
use crate::trajectory::{segment_labels, DegradationType, MultiHot, Scenario, SegmentLabel, ACTIVITY_THRESHOLD};

pub const LAYOUT_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";
pub const METADATA_FILE: &str = "metadata.jsonl";
pub const CLEAN_DIR: &str = "clean";
pub const DEGRADED_DIR: &str = "degraded";
pub const DEPTH_DIR: &str = "depth";
pub const RESTORED_DIR: &str = "restored";

/// Scenario document as read from disk: the scenario itself plus optional
/// overrides for the synthesis knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    #[serde(flatten)]
    pub scenario: Scenario,
    /// Fixed atmospheric light; sampled from the seed when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub airlight: Option<Rgb>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub precipitation: Option<PrecipitationConfig>,
}

impl From<Scenario> for ScenarioConfig {
    fn from(scenario: Scenario) -> Self {
        ScenarioConfig {
            scenario,
            airlight: None,
            precipitation: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerKind<T> {
    pub rain: T,
    pub snow: T,
}

impl<T: Copy> PerKind<T> {
    pub fn get(&self, kind: ParticleKind) -> T {
        match kind {
            ParticleKind::Rain => self.rain,
            ParticleKind::Snow => self.snow,
        }
    }

    fn set(&mut self, kind: ParticleKind, v: T) {
        match kind {
            ParticleKind::Rain => self.rain = v,
            ParticleKind::Snow => self.snow = v,
        }
    }
}

/// Ground truth for one synthesized frame, as actually applied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameMetadata {
    pub frame_index: u32,
    pub beta: f64,
    pub density: PerKind<f64>,
    pub active_types: MultiHot,
    pub segment_index: u32,
    pub spawned: PerKind<usize>,
    pub alive: PerKind<usize>,
}

/// Every tunable in force for a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisParameters {
    pub precipitation: PrecipitationConfig,
    /// Always `haze_then_particles`: particles blend over the hazy frame.
    pub layer_order: String,
    pub activity_threshold: f64,
    pub dehaze_epsilon: f32,
    pub airlight_percentile: f64,
    pub beta_search_interval: [f64; 2],
    pub beta_search: BetaSearch,
    pub ssim_convention: String,
}

impl SynthesisParameters {
    fn new(precipitation: PrecipitationConfig) -> Self {
        SynthesisParameters {
            precipitation,
            layer_order: "haze_then_particles".into(),
            activity_threshold: ACTIVITY_THRESHOLD,
            dehaze_epsilon: haze::DEFAULT_EPSILON,
            airlight_percentile: haze::DEFAULT_AIRLIGHT_PERCENTILE,
            beta_search_interval: [haze::DEFAULT_BETA_MIN, haze::DEFAULT_BETA_MAX],
            beta_search: BetaSearch::default(),
            ssim_convention: crate::metrics::SSIM_CONVENTION.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthEncoding {
    pub format: FrameFormat,
    /// `depth = pixel / 65535 * scale` for PNG depth.
    pub scale: f32,
}

/// Self-describing dataset header; together with the clean inputs it is
/// enough to regenerate every degraded frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub layout_version: u32,
    pub scenario: ScenarioConfig,
    pub seed: u64,
    pub frame_count: u32,
    pub width: usize,
    pub height: usize,
    pub airlight: Rgb,
    pub frame_format: FrameFormat,
    pub depth: DepthEncoding,
    pub segment_labels: Vec<SegmentLabel>,
    pub parameters: SynthesisParameters,
}

/// Samples the per-video atmospheric light: channels in `[0.7, 1.0]` with
/// spread at most 0.05.
pub fn sample_airlight(seed: u64) -> Rgb {
    let mut r = rng::stream(seed, "airlight", 0);
    let base: f32 = 0.7 + 0.25 * r.random::<f32>();
    Rgb([0; 3].map(|_| (base + 0.05 * r.random::<f32>()).min(1.0)))
}

/// Streaming synthesizer; feed frames in order with [`Synthesizer::process_frame`].
#[derive(Debug, Clone)]
pub struct Synthesizer {
    config: ScenarioConfig,
    airlight: Rgb,
    system: ParticleSystem,
    labels: Vec<SegmentLabel>,
    dims: (usize, usize),
    next: u32,
}

impl Synthesizer {
    /// Validates the scenario and materializes every default.
    pub fn new(config: &ScenarioConfig, width: usize, height: usize) -> Result<Self> {
        config.scenario.validate()?;
        let scenario = config.scenario.materialized();
        let precipitation = config.precipitation.unwrap_or_default();
        let airlight = config.airlight.unwrap_or_else(|| sample_airlight(scenario.seed));
        if airlight.0.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(Error::InvalidParameter(format!("airlight {:?} outside [0, 1]", airlight.0)));
        }
        let labels = segment_labels(&scenario);
        Ok(Synthesizer {
            system: ParticleSystem::new(scenario.seed, precipitation),
            config: ScenarioConfig {
                scenario,
                airlight: Some(airlight),
                precipitation: Some(precipitation),
            },
            airlight,
            labels,
            dims: (width, height),
            next: 0,
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.config.scenario
    }

    pub fn airlight(&self) -> Rgb {
        self.airlight
    }

    pub fn system(&self) -> &ParticleSystem {
        &self.system
    }

    pub fn manifest(&self, frame_format: FrameFormat, depth: DepthEncoding) -> DatasetManifest {
        let s = &self.config.scenario;
        DatasetManifest {
            layout_version: LAYOUT_VERSION,
            scenario: self.config.clone(),
            seed: s.seed,
            frame_count: s.duration,
            width: self.dims.0,
            height: self.dims.1,
            airlight: self.airlight,
            frame_format,
            depth,
            segment_labels: self.labels.clone(),
            parameters: SynthesisParameters::new(*self.system.config()),
        }
    }

    /// Degrades the next frame in sequence.
    pub fn process_frame(&mut self, clean: &Frame, depth: &DepthMap) -> Result<(Frame, FrameMetadata)> {
        clean.ensure_same_dims(self.dims)?;
        clean.ensure_same_dims(depth.dims())?;
        let t = self.next;
        let tf = f64::from(t);
        let s = &self.config.scenario;
        let beta = s.intensity(DegradationType::Haze, tf);

        let mut out = if beta > 0.0 {
            haze::apply_haze(clean, &haze::transmission(depth, beta)?, self.airlight)?
        } else {
            clean.clone()
        };

        let (w, h) = self.dims;
        self.system.set_depth_reference(f64::from(depth.max_depth()));
        self.system.step_wind();
        self.system.step_particles(w, h);
        let mut density = PerKind { rain: 0.0, snow: 0.0 };
        let mut spawned = PerKind { rain: 0, snow: 0 };
        for kind in ParticleKind::ALL {
            let f = s.intensity(kind.degradation(), tf);
            density.set(kind, f);
            spawned.set(kind, self.system.spawn(kind, f, w, h));
        }
        if !self.system.particles().is_empty() {
            out = composite(&out, &self.system, depth, beta)?;
        }
        self.system.end_frame();
        let out = clamp_frame(&out)?;

        let meta = FrameMetadata {
            frame_index: t,
            beta,
            density,
            active_types: s.active_types(tf),
            segment_index: s.segment_of(t),
            spawned,
            alive: PerKind {
                rain: self.system.alive(ParticleKind::Rain),
                snow: self.system.alive(ParticleKind::Snow),
            },
        };
        self.next += 1;
        Ok((out, meta))
    }
}

#[derive(Debug, Clone)]
pub struct SynthesisOutput {
    pub frames: Vec<Frame>,
    pub metadata: Vec<FrameMetadata>,
    pub manifest: DatasetManifest,
}

/// Synthesizes a whole in-memory video; `clean` and `depth` must have
/// `scenario.duration` entries each.
pub fn synthesize_video(clean: &[Frame], depth: &[DepthMap], config: &ScenarioConfig) -> Result<SynthesisOutput> {
    if clean.len() != depth.len() {
        return Err(Error::LengthMismatch {
            left: clean.len(),
            right: depth.len(),
        });
    }
    let first = clean.first().ok_or(Error::Empty("no clean frames"))?;
    check_duration(&config.scenario, clean.len())?;
    let mut synth = Synthesizer::new(config, first.width(), first.height())?;
    let mut frames = Vec::with_capacity(clean.len());
    let mut metadata = Vec::with_capacity(clean.len());
    for (c, d) in clean.iter().zip(depth) {
        let (f, m) = synth.process_frame(c, d)?;
        frames.push(f);
        metadata.push(m);
    }
    let manifest = synth.manifest(FrameFormat::Raw, DepthEncoding {
        format: FrameFormat::Raw,
        scale: 1.0,
    });
    Ok(SynthesisOutput {
        frames,
        metadata,
        manifest,
    })
}

pub fn check_duration(s: &Scenario, frames: usize) -> Result<()> {
    if frames != s.duration as usize {
        return Err(Error::LengthMismatch {
            left: frames,
            right: s.duration as usize,
        });
    }
    Ok(())
}

/// Reads `manifest.json` and `metadata.jsonl` from `dir`, sorted by frame.
pub fn read_sidecars(dir: &Path) -> Result<(DatasetManifest, Vec<FrameMetadata>)> {
    let mp = dir.join(MANIFEST_FILE);
    let dp = dir.join(METADATA_FILE);
    for p in [&mp, &dp] {
        if !p.is_file() {
            return Err(Error::MissingSidecar(p.clone()));
        }
    }
    let manifest: DatasetManifest = fio::read_json(&mp)?;
    let mut metadata: Vec<FrameMetadata> = fio::read_jsonl(&dp)?;
    metadata.sort_by_key(|m| m.frame_index);
    if metadata.len() != manifest.frame_count as usize
        || metadata.iter().enumerate().any(|(i, m)| m.frame_index as usize != i)
    {
        return Err(Error::malformed(
            &dp,
            0,
            format!("expected frames 0..{} exactly once", manifest.frame_count),
        ));
    }
    Ok((manifest, metadata))
}

/// How `run_dehaze` chooses β and the airlight.
#[derive(Debug, Clone, PartialEq)]
pub enum DehazeMode {
    /// Ground-truth β per frame and the dataset airlight, from the sidecars.
    GivenBeta { betas: Vec<f64>, airlight: Rgb },
    /// Percentile airlight and β search per frame.
    Search {
        beta_min: f64,
        beta_max: f64,
        percentile: f64,
    },
}

impl DehazeMode {
    pub fn search() -> Self {
        DehazeMode::Search {
            beta_min: haze::DEFAULT_BETA_MIN,
            beta_max: haze::DEFAULT_BETA_MAX,
            percentile: haze::DEFAULT_AIRLIGHT_PERCENTILE,
        }
    }

    pub fn from_sidecars(manifest: &DatasetManifest, metadata: &[FrameMetadata]) -> Self {
        let mut sorted: Vec<&FrameMetadata> = metadata.iter().collect();
        sorted.sort_by_key(|m| m.frame_index);
        DehazeMode::GivenBeta {
            betas: sorted.iter().map(|m| m.beta).collect(),
            airlight: manifest.airlight,
        }
    }
}

/// Restores frame `t`. Constant frames have no identifiable β and pass
/// through unchanged in search mode.
pub fn dehaze_frame(frame: &Frame, depth: &DepthMap, t: usize, mode: &DehazeMode, epsilon: f32) -> Result<Frame> {
    match mode {
        DehazeMode::GivenBeta { betas, airlight } => {
            let beta = *betas.get(t).ok_or_else(|| {
                Error::InvalidParameter(format!("no β recorded for frame {t} ({} in metadata)", betas.len()))
            })?;
            haze::dehaze(frame, depth, beta, *airlight, epsilon)
        }
        DehazeMode::Search {
            beta_min,
            beta_max,
            percentile,
        } => {
            let airlight = haze::estimate_airlight(frame, *percentile)?;
            let cfg = BetaSearch {
                epsilon,
                ..BetaSearch::default()
            };
            match haze::search_beta_with(&cfg, frame, depth, airlight, *beta_min, *beta_max) {
                Ok(est) => haze::dehaze(frame, depth, est.beta_hat, airlight, epsilon),
                Err(Error::Unidentifiable(_)) => Ok(frame.clone()),
                Err(e) => Err(e),
            }
        }
    }
}

pub fn run_dehaze(degraded: &[Frame], depth: &[DepthMap], mode: &DehazeMode, epsilon: f32) -> Result<Vec<Frame>> {
    if degraded.len() != depth.len() {
        return Err(Error::LengthMismatch {
            left: degraded.len(),
            right: depth.len(),
        });
    }
    degraded
        .iter()
        .zip(depth)
        .enumerate()
        .map(|(t, (f, d))| dehaze_frame(f, d, t, mode, epsilon))
        .collect()
}

/// Stacks column `column` of every frame: row `t` of the output is frame
/// `t`'s column, so the result is `height` wide and `T` tall.
pub fn trace_pixel_line(video: &[Frame], column: usize) -> Result<Frame> {
    let first = video.first().ok_or(Error::Empty("no frames to trace"))?;
    let (w, h) = first.dims();
    if column >= w {
        return Err(Error::InvalidParameter(format!("column {column} outside width {w}")));
    }
    for f in video {
        f.ensure_same_dims((w, h))?;
    }
    Frame::from_fn(h, video.len(), |y, t| video[t].pixel(column, y))
}
