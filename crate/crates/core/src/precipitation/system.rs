use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::{step_wind, ParticleKind, PrecipitationConfig, WindState, SPAWN_X, SPAWN_Y_ABOVE};
use crate::rng;

/// One precipitation element. Positions are in pixels with pixel `(i, j)`
/// covering `[i, i+1) x [j, j+1)`; y grows downward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Particle {
    pub id: u64,
    pub kind: ParticleKind,
    pub pos: [f64; 2],
    /// Depth along the viewing ray, scene units.
    pub depth: f64,
    /// Image-plane velocity, px/frame.
    pub vel: [f64; 2],
    /// Downward image-plane acceleration `g(Z)`, px/frame².
    pub gravity: f64,
    pub opacity: f32,
    /// Streak length (rain) or blob radius (snow), px.
    pub size: f64,
    pub thickness: f64,
    pub age: u32,
    pub lifetime: u32,
}

impl Particle {
    pub fn speed(&self) -> f64 {
        self.vel[0].hypot(self.vel[1])
    }
}

/// Unit draws behind one spawn. Fixing these and varying depth isolates
/// the depth coupling of the attributes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttributeDraws {
    pub x: f64,
    pub y: f64,
    pub depth: f64,
    pub size: f64,
    pub thickness: f64,
    pub opacity: f64,
    pub speed: f64,
    pub lateral: f64,
}

impl AttributeDraws {
    fn sample(r: &mut impl Rng) -> Self {
        AttributeDraws {
            x: r.random(),
            y: r.random(),
            depth: r.random(),
            size: r.random(),
            thickness: r.random(),
            opacity: r.random(),
            speed: r.random(),
            lateral: r.random(),
        }
    }
}

fn mix(range: [f64; 2], u: f64) -> f64 {
    range[0] + (range[1] - range[0]) * u
}

/// Builds a particle at `depth` from fixed unit draws. Sizes, speed and
/// gravity scale with `1 / z` and opacity with `1 / (1 + z)`, where `z` is
/// depth normalized by `depth_ref` (the far plane).
pub fn sample_attributes(
    kind: ParticleKind,
    depth: f64,
    depth_ref: f64,
    frame: (usize, usize),
    draws: &AttributeDraws,
    cfg: &PrecipitationConfig,
) -> Particle {
    let k = cfg.kind(kind);
    let z = depth / depth_ref;
    let (w, h) = (frame.0 as f64, frame.1 as f64);
    let fall = k.base_speed * (0.75 + 0.5 * draws.speed) / z;
    let drift = k.base_speed * k.lateral_jitter * (2.0 * draws.lateral - 1.0) / z;
    let vel = [drift, fall];
    let speed = drift.hypot(fall).max(1.0);
    let opacity = (mix(k.opacity, draws.opacity) / (1.0 + z)).clamp(f64::from(f32::MIN_POSITIVE), 1.0);
    Particle {
        id: 0,
        kind,
        pos: [
            mix(SPAWN_X, draws.x) * w,
            -SPAWN_Y_ABOVE * h * draws.y,
        ],
        depth,
        vel,
        gravity: k.gravity / z,
        opacity: opacity as f32,
        size: mix(k.size, draws.size) / z,
        thickness: mix(k.thickness, draws.thickness) / z,
        age: 0,
        lifetime: (cfg.lifetime_factor * h / speed).ceil().max(1.0) as u32,
    }
}

/// Live particles, the shared wind and the frame counter.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleSystem {
    particles: Vec<Particle>,
    wind: WindState,
    frame_index: u64,
    next_id: u64,
    seed: u64,
    config: PrecipitationConfig,
    depth_ref: f64,
}

impl ParticleSystem {
    pub fn new(seed: u64, config: PrecipitationConfig) -> Self {
        ParticleSystem {
            particles: Vec::new(),
            wind: WindState::new(seed),
            frame_index: 0,
            next_id: 0,
            seed,
            config,
            depth_ref: 1.0,
        }
    }

    pub fn config(&self) -> &PrecipitationConfig {
        &self.config
    }

    pub fn particles(&self) -> &[Particle] {
        &self.particles
    }

    pub fn wind(&self) -> &WindState {
        &self.wind
    }

    pub fn frame_index(&self) -> u64 {
        self.frame_index
    }

    pub fn alive(&self, kind: ParticleKind) -> usize {
        self.particles.iter().filter(|p| p.kind == kind).count()
    }

    /// Far-plane depth used to normalize particle depths; non-positive
    /// values fall back to 1.
    pub fn set_depth_reference(&mut self, max_scene_depth: f64) {
        self.depth_ref = if max_scene_depth > 0.0 && max_scene_depth.is_finite() {
            max_scene_depth
        } else {
            1.0
        };
    }

    pub fn depth_reference(&self) -> f64 {
        self.depth_ref
    }

    /// Adds a particle, assigning it the next spawn id.
    pub fn insert(&mut self, mut p: Particle) -> u64 {
        p.id = self.next_id;
        self.next_id += 1;
        self.particles.push(p);
        p.id
    }

    pub fn step_wind(&mut self) {
        self.wind = step_wind(&self.wind, self.frame_index, &self.config.wind);
    }

    /// `u <- u + g(Z) + w`, `pos <- pos + u`; drops particles that leave the
    /// spawn band and image, or reach their lifetime.
    pub fn step_particles(&mut self, width: usize, height: usize) {
        let (w, h) = (width as f64, height as f64);
        let x_range = SPAWN_X[0] * w..=SPAWN_X[1] * w;
        let y_range = -SPAWN_Y_ABOVE * h..=h;
        let wind = self.wind.w;
        self.particles.retain_mut(|p| {
            p.vel[0] += wind[0];
            p.vel[1] += p.gravity + wind[1];
            p.pos[0] += p.vel[0];
            p.pos[1] += p.vel[1];
            p.age += 1;
            p.age < p.lifetime && x_range.contains(&p.pos[0]) && y_range.contains(&p.pos[1])
        });
    }

    /// Spawns `Poisson(density * width * height / 1e6)` particles of `kind`
    /// and returns how many were added.
    pub fn spawn(&mut self, kind: ParticleKind, density: f64, width: usize, height: usize) -> usize {
        let lambda = density * (width * height) as f64 / 1e6;
        if !(lambda > 0.0 && lambda.is_finite()) {
            return 0;
        }
        let label = match kind {
            ParticleKind::Rain => "spawn-rain",
            ParticleKind::Snow => "spawn-snow",
        };
        let mut r = rng::stream(self.seed, label, self.frame_index);
        let n = Poisson::new(lambda).expect("lambda is positive and finite").sample(&mut r) as usize;
        let near = self.config.near_fraction * self.depth_ref;
        let far = self.config.far_fraction * self.depth_ref;
        self.particles.reserve(n);
        for _ in 0..n {
            let draws = AttributeDraws::sample(&mut r);
            let depth = near * (far / near).powf(draws.depth);
            let p = sample_attributes(kind, depth, self.depth_ref, (width, height), &draws, &self.config);
            self.insert(p);
        }
        n
    }

    pub fn end_frame(&mut self) {
        self.frame_index += 1;
    }
}
