use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use seud_bench::{live_particles, populated_system, scene};
use seud_core::haze::{apply_haze, search_beta, transmission};
use seud_core::metrics::ssim;
use seud_core::precipitation::{composite_particles, PrecipitationConfig};
use seud_core::Rgb;

fn composite_5000(c: &mut Criterion) {
    let (frame, depth) = scene();
    let sys = populated_system(7, 5000);
    let particles = live_particles(&sys, 5000);
    let cfg = PrecipitationConfig::default();
    c.bench_function("composite_5000_particles_640x360", |b| {
        b.iter(|| composite_particles(black_box(&frame), &particles, &cfg, &depth, 0.3).unwrap())
    });
}

fn haze(c: &mut Criterion) {
    let (frame, depth) = scene();
    let a = Rgb([0.85, 0.87, 0.9]);
    c.bench_function("apply_haze_640x360", |b| {
        b.iter(|| {
            let t = transmission(&depth, black_box(0.2)).unwrap();
            apply_haze(&frame, &t, a).unwrap()
        })
    });
    let t = transmission(&depth, 0.2).unwrap();
    let hazy = apply_haze(&frame, &t, a).unwrap();
    let mut g = c.benchmark_group("search");
    g.sample_size(10);
    g.bench_function("search_beta_640x360", |b| {
        b.iter(|| search_beta(black_box(&hazy), &depth, a, 0.0, 3.0).unwrap())
    });
    g.finish();
}

fn metric(c: &mut Criterion) {
    let (frame, _) = scene();
    let other = seud_core::testutil::textured_frame(frame.width(), frame.height(), 2);
    c.bench_function("ssim_640x360", |b| b.iter(|| ssim(black_box(&frame), &other).unwrap()));
}

criterion_group!(benches, composite_5000, haze, metric);
criterion_main!(benches);
