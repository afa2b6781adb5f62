use super::{Particle, ParticleKind, PrecipitationConfig};

/// Narrowest cross-section sigma in px; thinner streaks alias at pixel centres.
const MIN_SIGMA: f64 = 0.4;

/// `exp(-16)` is below f32 resolution at unit scale.
const NEGLIGIBLE_EXPONENT: f64 = 16.0;

/// Local alpha map anchored at `(x0, y0)` in image pixels, plus a gray radiance.
#[derive(Debug, Clone, PartialEq)]
pub struct Sprite {
    pub x0: i64,
    pub y0: i64,
    pub width: usize,
    pub height: usize,
    pub alpha: Vec<f32>,
    pub radiance: f32,
}

impl Sprite {
    pub fn alpha_at(&self, lx: usize, ly: usize) -> f32 {
        self.alpha[ly * self.width + lx]
    }
}

/// Gray level of a particle, dimmed toward airlight with its own haze deficit.
pub fn particle_radiance(p: &Particle, cfg: &PrecipitationConfig, beta: f64) -> f32 {
    let base = cfg.kind(p.kind).radiance;
    let deficit = 1.0 - (-beta * p.depth).exp();
    base * (1.0 - cfg.haze_tint * deficit as f32)
}

/// Rain renders as an anti-aliased segment along the velocity with a
/// Gaussian cross-section; snow as an isotropic Gaussian blob. Peak alpha is
/// the particle opacity.
pub fn render_sprite(p: &Particle, cfg: &PrecipitationConfig, beta: f64) -> Sprite {
    let radiance = particle_radiance(p, cfg, beta);
    match p.kind {
        ParticleKind::Rain => render_streak(p, cfg.exposure, radiance),
        ParticleKind::Snow => render_blob(p, radiance),
    }
}

fn render_streak(p: &Particle, exposure: f64, radiance: f32) -> Sprite {
    let speed = p.speed();
    let dir = if speed > 1e-9 {
        [p.vel[0] / speed, p.vel[1] / speed]
    } else {
        [0.0, 1.0]
    };
    let half = 0.5 * p.size.max(speed * exposure);
    let sigma = (0.5 * p.thickness).max(MIN_SIGMA);
    let pad = 3.0 * sigma + 1.0;
    let ext_x = dir[0].abs() * half + pad;
    let ext_y = dir[1].abs() * half + pad;
    let inv = 1.0 / (2.0 * sigma * sigma);
    fill(p.pos, ext_x, ext_y, radiance, |dx, dy| {
        let along = dx * dir[0] + dy * dir[1];
        let cap = (half + 0.5 - along.abs()).clamp(0.0, 1.0);
        let across = -dx * dir[1] + dy * dir[0];
        let e = across * across * inv;
        if cap == 0.0 || e > NEGLIGIBLE_EXPONENT {
            0.0
        } else {
            cap * (-e).exp()
        }
    }, p.opacity)
}

fn render_blob(p: &Particle, radiance: f32) -> Sprite {
    let sigma = (0.5 * p.size).max(MIN_SIGMA);
    let ext = 3.0 * sigma + 1.0;
    let inv = 1.0 / (2.0 * sigma * sigma);
    let (x0, width) = span(p.pos[0], ext);
    let (y0, height) = span(p.pos[1], ext);
    let profile = |o: i64, n: usize, c: f64| -> Vec<f64> {
        (0..n)
            .map(|i| {
                let d = (o + i as i64) as f64 + 0.5 - c;
                (-d * d * inv).exp()
            })
            .collect()
    };
    let gx = profile(x0, width, p.pos[0]);
    let gy = profile(y0, height, p.pos[1]);
    let mut alpha = Vec::with_capacity(width * height);
    for &vy in &gy {
        alpha.extend(gx.iter().map(|&vx| p.opacity * (vx * vy) as f32));
    }
    Sprite {
        x0,
        y0,
        width,
        height,
        alpha,
        radiance,
    }
}

/// First pixel and pixel count covering `[c - ext, c + ext]`.
fn span(c: f64, ext: f64) -> (i64, usize) {
    let lo = (c - ext).floor() as i64;
    let hi = (c + ext).ceil() as i64;
    (lo, (hi - lo).max(1) as usize)
}

fn fill(
    center: [f64; 2],
    ext_x: f64,
    ext_y: f64,
    radiance: f32,
    shape: impl Fn(f64, f64) -> f64,
    opacity: f32,
) -> Sprite {
    let (x0, width) = span(center[0], ext_x);
    let (y0, height) = span(center[1], ext_y);
    let mut alpha = Vec::with_capacity(width * height);
    for ly in 0..height {
        let dy = (y0 + ly as i64) as f64 + 0.5 - center[1];
        for lx in 0..width {
            let dx = (x0 + lx as i64) as f64 + 0.5 - center[0];
            alpha.push(opacity * shape(dx, dy) as f32);
        }
    }
    Sprite {
        x0,
        y0,
        width,
        height,
        alpha,
        radiance,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn particle(kind: ParticleKind, vel: [f64; 2], opacity: f32) -> Particle {
        Particle {
            id: 0,
            kind,
            pos: [20.5, 20.5],
            depth: 2.0,
            vel,
            gravity: 1.0,
            opacity,
            size: 6.0,
            thickness: 1.5,
            age: 0,
            lifetime: 10,
        }
    }

    #[test]
    fn zero_opacity_is_transparent() {
        let cfg = PrecipitationConfig::default();
        for kind in ParticleKind::ALL {
            let s = render_sprite(&particle(kind, [1.0, 5.0], 0.0), &cfg, 0.0);
            assert!(s.alpha.iter().all(|&a| a == 0.0));
        }
    }

    #[test]
    fn snow_peaks_at_center_and_decays() {
        let cfg = PrecipitationConfig::default();
        let p = particle(ParticleKind::Snow, [0.0, 1.0], 0.7);
        let s = render_sprite(&p, &cfg, 0.0);
        let cx = (20 - s.x0) as usize;
        let cy = (20 - s.y0) as usize;
        assert_eq!(s.alpha_at(cx, cy), 0.7);
        let mut prev = 0.7;
        for r in 1..(s.width - cx) {
            let a = s.alpha_at(cx + r, cy);
            assert!(a < prev);
            prev = a;
        }
        assert_eq!(s.radiance, 0.95);
    }

    #[test]
    fn streak_follows_velocity() {
        let cfg = PrecipitationConfig::default();
        for vel in [[0.0, 20.0], [8.0, 15.0], [-12.0, 9.0], [20.0, 3.0]] {
            let s = render_sprite(&particle(ParticleKind::Rain, vel, 1.0), &cfg, 0.0);
            // alpha-weighted second moments give the principal axis
            let (mut m, mut mx, mut my) = (0.0, 0.0, 0.0);
            for ly in 0..s.height {
                for lx in 0..s.width {
                    let a = f64::from(s.alpha_at(lx, ly));
                    m += a;
                    mx += a * lx as f64;
                    my += a * ly as f64;
                }
            }
            let (cx, cy) = (mx / m, my / m);
            let (mut cxx, mut cyy, mut cxy) = (0.0, 0.0, 0.0);
            for ly in 0..s.height {
                for lx in 0..s.width {
                    let a = f64::from(s.alpha_at(lx, ly));
                    let (dx, dy) = (lx as f64 - cx, ly as f64 - cy);
                    cxx += a * dx * dx;
                    cyy += a * dy * dy;
                    cxy += a * dx * dy;
                }
            }
            let axis = 0.5 * (2.0 * cxy).atan2(cxx - cyy);
            let expected = vel[1].atan2(vel[0]);
            let mut diff = (axis - expected).rem_euclid(std::f64::consts::PI);
            if diff > std::f64::consts::FRAC_PI_2 {
                diff = std::f64::consts::PI - diff;
            }
            assert!(diff < 0.03, "vel={vel:?} axis={axis} expected={expected}");
        }
    }

    #[test]
    fn streak_length_covers_motion_blur() {
        let cfg = PrecipitationConfig::default();
        let slow = render_sprite(&particle(ParticleKind::Rain, [0.0, 1.0], 1.0), &cfg, 0.0);
        let fast = render_sprite(&particle(ParticleKind::Rain, [0.0, 40.0], 1.0), &cfg, 0.0);
        // size 6 vs 40 * 0.8 = 32 px
        assert!(slow.height < 16);
        assert!(fast.height >= 32);
    }

    #[test]
    fn haze_dims_radiance() {
        let cfg = PrecipitationConfig::default();
        let p = particle(ParticleKind::Rain, [0.0, 5.0], 1.0);
        assert_eq!(particle_radiance(&p, &cfg, 0.0), 0.85);
        let hazy = particle_radiance(&p, &cfg, 1.0);
        let expected = 0.85 * (1.0 - 0.3 * (1.0 - (-2.0f64).exp())) as f32;
        assert!((hazy - expected).abs() < 1e-6);
    }
}
