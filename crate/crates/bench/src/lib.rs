//! Shared fixtures for the benchmarks.

use seud_core::precipitation::{Particle, ParticleKind, ParticleSystem, PrecipitationConfig};
use seud_core::testutil::{gradient_depth, textured_frame};
use seud_core::{DepthMap, Frame};

pub const WIDTH: usize = 640;
pub const HEIGHT: usize = 360;

pub fn scene() -> (Frame, DepthMap) {
    (textured_frame(WIDTH, HEIGHT, 1), gradient_depth(WIDTH, HEIGHT, 10.0))
}

/// A system warmed up until at least `target` particles are alive, mixed rain and snow.
pub fn populated_system(seed: u64, target: usize) -> ParticleSystem {
    let mut sys = ParticleSystem::new(seed, PrecipitationConfig::default());
    sys.set_depth_reference(10.0);
    let per_kind = target as f64 / (WIDTH * HEIGHT) as f64 * 1e6 / 2.0;
    while sys.particles().len() < target {
        sys.step_wind();
        sys.step_particles(WIDTH, HEIGHT);
        for kind in ParticleKind::ALL {
            sys.spawn(kind, per_kind, WIDTH, HEIGHT);
        }
        sys.end_frame();
    }
    sys
}

pub fn live_particles(sys: &ParticleSystem, n: usize) -> Vec<Particle> {
    sys.particles().iter().take(n).cloned().collect()
}
