//! Particle-level rain and snow.
//!
//! A [`ParticleSystem`] owns every live particle plus the shared wind. Each
//! frame runs wind, motion and spawning in that order, then particles are
//! rendered as alpha sprites and blended over the (already hazy) frame one
//! at a time, gated by a strict depth test against the scene.

mod composite;
mod sprite;
mod system;
mod wind;

use serde::{Deserialize, Serialize};

use crate::trajectory::DegradationType;

pub use composite::{composite, composite_particles, visibility_mask, Footprint};
pub use sprite::{particle_radiance, render_sprite, Sprite};
pub use system::{sample_attributes, AttributeDraws, Particle, ParticleSystem};
pub use wind::{step_wind, WindConfig, WindState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParticleKind {
    Rain,
    Snow,
}

impl ParticleKind {
    pub const ALL: [ParticleKind; 2] = [Self::Rain, Self::Snow];

    pub fn label(self) -> &'static str {
        match self {
            Self::Rain => "rain",
            Self::Snow => "snow",
        }
    }

    pub fn from_degradation(ty: DegradationType) -> Option<Self> {
        match ty {
            DegradationType::Haze => None,
            DegradationType::Rain => Some(Self::Rain),
            DegradationType::Snow => Some(Self::Snow),
        }
    }

    pub fn degradation(self) -> DegradationType {
        match self {
            Self::Rain => DegradationType::Rain,
            Self::Snow => DegradationType::Snow,
        }
    }
}

/// Order in which particles are blended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompositeOrder {
    /// Ascending spawn id.
    #[default]
    SpawnId,
    /// Farthest first, ties by spawn id.
    BackToFront,
}

/// Per-kind attribute ranges. Sizes, speed and gravity are quoted at
/// normalized depth 1 (the far plane) and scale with `1 / z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KindConfig {
    /// `g0`, px/frame².
    pub gravity: f64,
    /// Initial downward speed, px/frame.
    pub base_speed: f64,
    /// Sideways initial velocity as a fraction of `base_speed`, drawn in `[-j, j]`.
    pub lateral_jitter: f64,
    /// Streak length (rain) or blob radius (snow), px.
    pub size: [f64; 2],
    pub thickness: [f64; 2],
    /// Base opacity before the `1 / (1 + z)` falloff.
    pub opacity: [f64; 2],
    /// Gray level of the particle before haze tinting.
    pub radiance: f32,
}

impl KindConfig {
    pub fn rain() -> Self {
        KindConfig {
            gravity: 40.0,
            base_speed: 15.0,
            lateral_jitter: 0.05,
            size: [8.0, 20.0],
            thickness: [0.8, 1.6],
            opacity: [0.4, 0.9],
            radiance: 0.85,
        }
    }

    pub fn snow() -> Self {
        KindConfig {
            gravity: 4.0,
            base_speed: 2.0,
            lateral_jitter: 0.5,
            size: [1.0, 2.5],
            thickness: [1.0, 2.5],
            opacity: [0.6, 1.0],
            radiance: 0.95,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PrecipitationConfig {
    pub rain: KindConfig,
    pub snow: KindConfig,
    /// Particle depths are log-uniform on `[near, far]` times the max scene depth.
    pub near_fraction: f64,
    pub far_fraction: f64,
    /// Motion-blur exposure in frames; rain streaks are at least `|u| * exposure` long.
    pub exposure: f64,
    /// Lifetime is `lifetime_factor * height / |u0|` frames.
    pub lifetime_factor: f64,
    /// Radiance is scaled by `1 - haze_tint * (1 - exp(-beta * Z))`.
    pub haze_tint: f32,
    pub wind: WindConfig,
    pub order: CompositeOrder,
}

impl Default for PrecipitationConfig {
    fn default() -> Self {
        PrecipitationConfig {
            rain: KindConfig::rain(),
            snow: KindConfig::snow(),
            near_fraction: 0.2,
            far_fraction: 1.0,
            exposure: 0.8,
            lifetime_factor: 3.0,
            haze_tint: 0.3,
            wind: WindConfig::default(),
            order: CompositeOrder::SpawnId,
        }
    }
}

impl PrecipitationConfig {
    pub fn kind(&self, kind: ParticleKind) -> &KindConfig {
        match kind {
            ParticleKind::Rain => &self.rain,
            ParticleKind::Snow => &self.snow,
        }
    }
}

/// Spawn band, as fractions of the frame: x in `[-0.1 W, 1.1 W]`, y in `[-0.15 H, 0]`.
pub const SPAWN_X: [f64; 2] = [-0.1, 1.1];
pub const SPAWN_Y_ABOVE: f64 = 0.15;
