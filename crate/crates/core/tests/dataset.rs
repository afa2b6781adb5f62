use std::path::Path;

use seud_core::io::{self, FrameFormat, JsonlWriter};
use seud_core::pipeline::{
    read_sidecars, run_dehaze, synthesize_video, DehazeMode, FrameMetadata, ScenarioConfig, Synthesizer,
    MANIFEST_FILE, METADATA_FILE,
};
use seud_core::testutil::{gradient_depth, textured_frame};
use seud_core::trajectory::{eval_profile, DegradationSchedule, DegradationType, IntensityProfile, ProfileShape, Scenario};
use seud_core::{psnr, DepthMap, Error, Frame};

fn sched(ty: DegradationType, peak: f64, shape: ProfileShape, a: u32, b: u32) -> DegradationSchedule {
    DegradationSchedule::new(ty, peak, IntensityProfile::new(shape, a, b))
}

fn inputs(n: usize, w: usize, h: usize) -> (Vec<Frame>, Vec<DepthMap>) {
    (
        (0..n).map(|i| textured_frame(w, h, 40 + i as u64)).collect(),
        (0..n).map(|_| gradient_depth(w, h, 6.0)).collect(),
    )
}

fn mixed(n: u32) -> ScenarioConfig {
    Scenario::new(
        5,
        n,
        vec![
            sched(DegradationType::Haze, 0.2, ProfileShape::Gaussian { sigma: None }, 0, n),
            sched(DegradationType::Rain, 5000.0, ProfileShape::Trapezoid { ramp: Some(2.0) }, 2, n - 2),
            sched(DegradationType::Snow, 4000.0, ProfileShape::Step { levels: 2 }, 0, n / 2),
        ],
    )
    .with_seed(31)
    .into()
}

/// Writes a dataset the way the CLI does, streaming one frame at a time.
fn write_dataset(root: &Path, clean: &[Frame], depth: &[DepthMap], cfg: &ScenarioConfig) {
    let (w, h) = clean[0].dims();
    let mut synth = Synthesizer::new(cfg, w, h).unwrap();
    io::create_dir(&root.join("degraded")).unwrap();
    let mut meta = JsonlWriter::create(&root.join(METADATA_FILE)).unwrap();
    for (t, (c, d)) in clean.iter().zip(depth).enumerate() {
        let (f, m) = synth.process_frame(c, d).unwrap();
        io::write_frame(&root.join("degraded").join(io::frame_file_name(t, FrameFormat::Png)), &f).unwrap();
        meta.push(&m).unwrap();
    }
    meta.finish().unwrap();
    io::write_json(&root.join(MANIFEST_FILE), &synth.manifest(FrameFormat::Png, seud_core::pipeline::DepthEncoding {
        format: FrameFormat::Raw,
        scale: 1.0,
    }))
    .unwrap();
}

fn read_tree(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = Vec::new();
    for sub in [root.to_path_buf(), root.join("degraded")] {
        for e in std::fs::read_dir(&sub).unwrap() {
            let p = e.unwrap().path();
            if p.is_file() {
                out.push((p.strip_prefix(root).unwrap().display().to_string(), std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn streaming_matches_batch() {
    let (clean, depth) = inputs(10, 48, 36);
    let cfg = mixed(10);
    let batch = synthesize_video(&clean, &depth, &cfg).unwrap();
    let mut synth = Synthesizer::new(&cfg, 48, 36).unwrap();
    for (t, (c, d)) in clean.iter().zip(&depth).enumerate() {
        let (f, m) = synth.process_frame(c, d).unwrap();
        assert_eq!(f, batch.frames[t]);
        assert_eq!(m, batch.metadata[t]);
    }
}

#[test]
fn regenerating_from_manifest_is_byte_identical() {
    let (clean, depth) = inputs(12, 40, 32);
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    write_dataset(a.path(), &clean, &depth, &mixed(12));
    let (manifest, _) = read_sidecars(a.path()).unwrap();
    write_dataset(b.path(), &clean, &depth, &manifest.scenario);
    assert_eq!(read_tree(a.path()), read_tree(b.path()));
}

#[test]
fn metadata_records_realized_values() {
    let (clean, depth) = inputs(14, 40, 32);
    let cfg = mixed(14);
    let out = synthesize_video(&clean, &depth, &cfg).unwrap();
    let s = &cfg.scenario;
    let mut replay = seud_core::ParticleSystem::new(s.seed, cfg.precipitation.unwrap_or_default());
    for m in &out.metadata {
        let t = f64::from(m.frame_index);
        assert_eq!(m.beta, eval_profile(&s.schedules[0], t));
        assert_eq!(m.density.rain, eval_profile(&s.schedules[1], t));
        assert_eq!(m.density.snow, eval_profile(&s.schedules[2], t));
        assert_eq!(m.segment_index, m.frame_index / 12);

        replay.set_depth_reference(6.0);
        replay.step_wind();
        replay.step_particles(40, 32);
        let rain = replay.spawn(seud_core::ParticleKind::Rain, m.density.rain, 40, 32);
        let snow = replay.spawn(seud_core::ParticleKind::Snow, m.density.snow, 40, 32);
        replay.end_frame();
        assert_eq!((m.spawned.rain, m.spawned.snow), (rain, snow));
        assert_eq!(m.alive.rain, replay.alive(seud_core::ParticleKind::Rain));
    }
}

#[test]
fn metadata_jsonl_round_trip() {
    let (clean, depth) = inputs(6, 24, 24);
    let out = synthesize_video(&clean, &depth, &mixed(6)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join(METADATA_FILE);
    io::write_jsonl(&path, &out.metadata).unwrap();
    let back: Vec<FrameMetadata> = io::read_jsonl(&path).unwrap();
    assert_eq!(back, out.metadata);
    let mpath = dir.path().join(MANIFEST_FILE);
    io::write_json(&mpath, &out.manifest).unwrap();
    assert_eq!(io::read_json::<seud_core::DatasetManifest>(&mpath).unwrap(), out.manifest);
}

#[test]
fn given_beta_needs_sidecars() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(read_sidecars(dir.path()), Err(Error::MissingSidecar(p)) if p.ends_with(MANIFEST_FILE)));
}

#[test]
fn given_beta_round_trip_through_raw_files() {
    let (clean, depth) = inputs(8, 64, 48);
    let cfg: ScenarioConfig = Scenario::new(
        1,
        8,
        vec![sched(DegradationType::Haze, 0.35, ProfileShape::Trapezoid { ramp: None }, 0, 8)],
    )
    .into();
    let out = synthesize_video(&clean, &depth, &cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let mut reread = Vec::new();
    for (t, f) in out.frames.iter().enumerate() {
        let p = dir.path().join(io::frame_file_name(t, FrameFormat::Raw));
        io::write_frame(&p, f).unwrap();
        reread.push(io::read_frame(&p).unwrap());
    }
    assert_eq!(reread, out.frames);
    let mode = DehazeMode::from_sidecars(&out.manifest, &out.metadata);
    let restored = run_dehaze(&reread, &depth, &mode, 0.05).unwrap();
    for (r, c) in restored.iter().zip(&clean) {
        assert!(psnr(r, c).unwrap() >= 50.0);
    }
}

#[test]
fn length_and_dimension_mismatches_are_errors() {
    let (clean, depth) = inputs(4, 24, 24);
    let cfg: ScenarioConfig = Scenario::new(5, 4, vec![]).into();
    assert!(matches!(
        synthesize_video(&clean[..3], &depth, &cfg),
        Err(Error::LengthMismatch { .. })
    ));
    let mut odd = clean.clone();
    odd[2] = textured_frame(20, 24, 1);
    assert!(matches!(
        synthesize_video(&odd, &depth, &cfg),
        Err(Error::DimensionMismatch { .. })
    ));
}
