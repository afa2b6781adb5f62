//! Deterministic synthesis of smoothly evolving weather degradations for
//! video (time-varying haze, rain and snow), the analytic inverse of the
//! haze model, and full-reference quality metrics.
//!
//! The crate is organized by stage:
//!
//! - [`image`]: frame, depth and scalar-field containers.
//! - [`trajectory`]: intensity profiles, scenarios and segment labels.
//! - [`haze`]: forward haze, airlight estimation, dehazing and β search.
//! - [`precipitation`]: the rain/snow particle system and compositing.
//! - [`metrics`]: PSNR and SSIM.
//! - [`io`] and [`pipeline`]: codecs, dataset layout and orchestration.

pub mod error;
pub mod haze;
pub mod image;
pub mod io;
pub mod metrics;
pub mod pipeline;
pub mod precipitation;
pub mod rng;
pub mod trajectory;
#[doc(hidden)]
pub mod testutil;

pub use error::{Error, Result};
pub use haze::{apply_haze, dehaze, estimate_airlight, search_beta, transmission, BetaEstimate, HazeParams};
pub use image::{clamp_frame, lerp_frames, DepthMap, Frame, Rgb, ScalarField};
pub use metrics::{evaluate_video, psnr, ssim, MetricReport};
pub use pipeline::{synthesize_video, DatasetManifest, DehazeMode, FrameMetadata, ScenarioConfig, Synthesizer};
pub use precipitation::{Particle, ParticleKind, ParticleSystem, PrecipitationConfig};
pub use trajectory::{
    affinity_partition, eval_profile, label_affinity, segment_labels, validate_scenario, DegradationSchedule,
    DegradationType, IntensityProfile, MultiHot, ProfileShape, Scenario, SegmentLabel,
};
