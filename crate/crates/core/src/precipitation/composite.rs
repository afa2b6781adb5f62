use rayon::prelude::*;

use super::{render_sprite, CompositeOrder, Particle, ParticleSystem, PrecipitationConfig, Sprite};
use crate::error::Result;
use crate::image::{lerp, DepthMap, Frame, CHANNELS};

/// Rows per parallel work unit. Every band walks the particles in the same
/// order, so banding never changes the result.
const BAND_ROWS: usize = 16;

/// Axis-aligned pixel rectangle inside the image.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Footprint {
    pub x0: usize,
    pub y0: usize,
    pub width: usize,
    pub height: usize,
}

/// `1` where the particle is strictly nearer than the scene surface.
pub fn visibility_mask(p: &Particle, scene_depth: &DepthMap, footprint: &Footprint) -> Vec<bool> {
    let mut mask = Vec::with_capacity(footprint.width * footprint.height);
    for y in footprint.y0..footprint.y0 + footprint.height {
        for x in footprint.x0..footprint.x0 + footprint.width {
            mask.push(p.depth < f64::from(scene_depth.get(x, y)));
        }
    }
    mask
}

/// Blends every particle of `sys` over `base`:
/// `L <- (1 - a M) L + a M P`, in the configured order.
pub fn composite(base: &Frame, sys: &ParticleSystem, scene_depth: &DepthMap, beta: f64) -> Result<Frame> {
    composite_particles(base, sys.particles(), sys.config(), scene_depth, beta)
}

pub fn composite_particles(
    base: &Frame,
    particles: &[Particle],
    cfg: &PrecipitationConfig,
    scene_depth: &DepthMap,
    beta: f64,
) -> Result<Frame> {
    base.ensure_same_dims(scene_depth.dims())?;
    let mut order: Vec<&Particle> = particles.iter().collect();
    match cfg.order {
        CompositeOrder::SpawnId => order.sort_by_key(|p| p.id),
        CompositeOrder::BackToFront => {
            order.sort_by(|a, b| b.depth.total_cmp(&a.depth).then(a.id.cmp(&b.id)))
        }
    }
    let sprites: Vec<(f64, Sprite)> = order
        .par_iter()
        .map(|p| (p.depth, render_sprite(p, cfg, beta)))
        .collect();

    let (w, h) = base.dims();
    let mut out = base.clone();
    out.data_mut()
        .par_chunks_mut(BAND_ROWS * w * CHANNELS)
        .enumerate()
        .for_each(|(band, buf)| {
            let by0 = (band * BAND_ROWS) as i64;
            let by1 = (by0 + BAND_ROWS as i64).min(h as i64);
            for (z, s) in &sprites {
                blend_sprite(buf, by0, by1, w, s, *z, scene_depth);
            }
        });
    for v in out.data_mut() {
        *v = v.clamp(0.0, 1.0);
    }
    Ok(out)
}

fn blend_sprite(buf: &mut [f32], by0: i64, by1: i64, w: usize, s: &Sprite, z: f64, scene_depth: &DepthMap) {
    let ya = s.y0.max(by0);
    let yb = (s.y0 + s.height as i64).min(by1);
    let xa = s.x0.max(0);
    let xb = (s.x0 + s.width as i64).min(w as i64);
    if ya >= yb || xa >= xb {
        return;
    }
    let depth = scene_depth.data();
    for y in ya..yb {
        let ly = (y - s.y0) as usize;
        let row = (y - by0) as usize * w;
        for x in xa..xb {
            let a = s.alpha_at((x - s.x0) as usize, ly);
            if a <= 0.0 {
                continue;
            }
            let idx = y as usize * w + x as usize;
            if z >= f64::from(depth[idx]) {
                continue;
            }
            let px = (row + x as usize) * CHANNELS;
            for v in &mut buf[px..px + CHANNELS] {
                *v = lerp(*v, s.radiance, a);
            }
        }
    }
}
