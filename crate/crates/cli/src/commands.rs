use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};

use seud_core::io::{self, FrameFormat, JsonlWriter};
use seud_core::metrics::{self, FrameScore};
use seud_core::pipeline::{
    self, check_duration, DatasetManifest, DehazeMode, DepthEncoding, ScenarioConfig, Synthesizer,
    CLEAN_DIR, DEGRADED_DIR, DEPTH_DIR, MANIFEST_FILE, METADATA_FILE,
};
use seud_core::trajectory::validate_scenario;
use seud_core::{DepthMap, Frame};

use crate::Command;

pub fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Synthesize {
            clean,
            depth,
            scenario,
            seed,
            out,
            format,
            depth_scale,
        } => synthesize(&clean, &depth, &scenario, seed, &out, format, depth_scale),
        Command::Dehaze {
            input,
            depth,
            use_metadata,
            out,
            depth_scale,
            epsilon,
        } => dehaze(&input, &depth, use_metadata, &out, depth_scale, epsilon),
        Command::Evaluate {
            restored,
            reference,
            report,
            csv,
        } => evaluate(&restored, &reference, &report, csv),
        Command::Trace { input, column, out } => trace(&input, column, &out),
        Command::Validate { scenario } => validate(&scenario),
    }
}

/// A scenario document, or the scenario echoed inside a dataset manifest.
struct LoadedScenario {
    config: ScenarioConfig,
    manifest: Option<DatasetManifest>,
}

fn load_scenario(path: &Path) -> Result<LoadedScenario> {
    let value: serde_json::Value = io::read_json(path)?;
    if value.get("layout_version").is_some() {
        let manifest: DatasetManifest =
            serde_json::from_value(value).with_context(|| format!("{}: not a dataset manifest", path.display()))?;
        return Ok(LoadedScenario {
            config: manifest.scenario.clone(),
            manifest: Some(manifest),
        });
    }
    let config = serde_json::from_value(value).with_context(|| format!("{}: not a scenario", path.display()))?;
    Ok(LoadedScenario { config, manifest: None })
}

/// Depth files for `n` frames; a single file is shared by every frame.
struct DepthSource {
    files: Vec<PathBuf>,
    scale: f32,
    cached: Option<(usize, DepthMap)>,
}

impl DepthSource {
    fn open(dir: &Path, n: usize, scale: f32) -> Result<Self> {
        let files = if dir.is_file() {
            vec![dir.to_path_buf()]
        } else {
            io::list_frames(dir)?
        };
        ensure!(
            files.len() == 1 || files.len() == n,
            "{}: {} depth maps for {n} frames (need 1 or {n})",
            dir.display(),
            files.len()
        );
        Ok(DepthSource {
            files,
            scale,
            cached: None,
        })
    }

    fn format(&self) -> FrameFormat {
        FrameFormat::from_path(&self.files[0]).unwrap_or_default()
    }

    fn get(&mut self, t: usize) -> Result<&DepthMap> {
        let i = if self.files.len() == 1 { 0 } else { t };
        if self.cached.as_ref().map(|c| c.0) != Some(i) {
            self.cached = Some((i, io::read_depth(&self.files[i], self.scale)?));
        }
        Ok(&self.cached.as_ref().unwrap().1)
    }
}

fn frames_in(dir: &Path) -> Result<Vec<PathBuf>> {
    let files = io::list_frames(dir)?;
    ensure!(!files.is_empty(), "{}: no .png or .raw frames", dir.display());
    Ok(files)
}

fn synthesize(
    clean_dir: &Path,
    depth_dir: &Path,
    scenario_path: &Path,
    seed: Option<u64>,
    out: &Path,
    format: Option<FrameFormat>,
    depth_scale: Option<f32>,
) -> Result<()> {
    let LoadedScenario { mut config, manifest } = load_scenario(scenario_path)?;
    if let Some(seed) = seed {
        config.scenario.seed = seed;
    }
    let format = format.or(manifest.as_ref().map(|m| m.frame_format)).unwrap_or_default();
    let depth_scale = depth_scale.or(manifest.as_ref().map(|m| m.depth.scale)).unwrap_or(1.0);

    // every check that can fail without touching frame data runs before any output exists
    let clean = frames_in(clean_dir)?;
    check_duration(&config.scenario, clean.len())?;
    let mut depth = DepthSource::open(depth_dir, clean.len(), depth_scale)?;
    let first = io::read_frame(&clean[0])?;
    let mut synth = Synthesizer::new(&config, first.width(), first.height())?;
    let depth_format = depth.format();

    for sub in [CLEAN_DIR, DEGRADED_DIR, DEPTH_DIR] {
        io::create_dir(&out.join(sub))?;
    }
    let mut sidecar = JsonlWriter::create(&out.join(METADATA_FILE))?;
    for (t, path) in clean.iter().enumerate() {
        let frame = if t == 0 { first.clone() } else { io::read_frame(path)? };
        let d = depth.get(t)?;
        let (degraded, meta) = synth
            .process_frame(&frame, d)
            .with_context(|| format!("frame {t} ({})", path.display()))?;
        io::write_frame(&out.join(CLEAN_DIR).join(io::frame_file_name(t, format)), &frame)?;
        io::write_frame(&out.join(DEGRADED_DIR).join(io::frame_file_name(t, format)), &degraded)?;
        io::write_depth(&out.join(DEPTH_DIR).join(io::frame_file_name(t, depth_format)), d, depth_scale)?;
        sidecar.push(&meta)?;
    }
    sidecar.finish()?;
    let manifest = synth.manifest(format, DepthEncoding {
        format: depth_format,
        scale: depth_scale,
    });
    io::write_json(&out.join(MANIFEST_FILE), &manifest)?;
    println!(
        "synthesized {} frames ({}x{}) into {}",
        clean.len(),
        first.width(),
        first.height(),
        out.display()
    );
    Ok(())
}

/// Sidecars live beside the frames or in the dataset root above them.
fn find_sidecars(input: &Path) -> Result<(DatasetManifest, Vec<pipeline::FrameMetadata>)> {
    let parent = input.parent().filter(|p| p.join(MANIFEST_FILE).is_file());
    let dir = if input.join(MANIFEST_FILE).is_file() {
        input
    } else {
        parent.unwrap_or(input)
    };
    Ok(pipeline::read_sidecars(dir)?)
}

fn dehaze(
    input: &Path,
    depth_dir: &Path,
    use_metadata: bool,
    out: &Path,
    depth_scale: Option<f32>,
    epsilon: f32,
) -> Result<()> {
    let frames = frames_in(input)?;
    let (mode, scale, dims) = if use_metadata {
        let (manifest, metadata) = find_sidecars(input)?;
        ensure!(
            metadata.len() == frames.len(),
            "{} frames in {} but metadata describes {}",
            frames.len(),
            input.display(),
            metadata.len()
        );
        let scale = depth_scale.unwrap_or(manifest.depth.scale);
        let dims = Some((manifest.width, manifest.height));
        (DehazeMode::from_sidecars(&manifest, &metadata), scale, dims)
    } else {
        (DehazeMode::search(), depth_scale.unwrap_or(1.0), None)
    };
    let mut depth = DepthSource::open(depth_dir, frames.len(), scale)?;
    io::create_dir(out)?;
    for (t, path) in frames.iter().enumerate() {
        let frame = io::read_frame(path)?;
        if let Some((w, h)) = dims {
            ensure!(
                frame.dims() == (w, h),
                "{}: {}x{} frame but manifest says {w}x{h}",
                path.display(),
                frame.width(),
                frame.height()
            );
        }
        let restored = pipeline::dehaze_frame(&frame, depth.get(t)?, t, &mode, epsilon)
            .with_context(|| format!("frame {t} ({})", path.display()))?;
        io::write_frame(&out.join(path.file_name().unwrap()), &restored)?;
    }
    println!("restored {} frames into {}", frames.len(), out.display());
    Ok(())
}

fn evaluate(restored: &Path, reference: &Path, report: &Path, csv: bool) -> Result<()> {
    let a = frames_in(restored)?;
    let b = frames_in(reference)?;
    ensure!(
        a.len() == b.len(),
        "{} restored frames but {} reference frames",
        a.len(),
        b.len()
    );
    let mut scores = Vec::with_capacity(a.len());
    for (i, (pa, pb)) in a.iter().zip(&b).enumerate() {
        let (fa, fb) = (io::read_frame(pa)?, io::read_frame(pb)?);
        let ctx = || format!("frame {i} ({} vs {})", pa.display(), pb.display());
        scores.push(FrameScore {
            frame_index: i,
            psnr: metrics::psnr(&fa, &fb).with_context(ctx)?,
            ssim: metrics::ssim(&fa, &fb).with_context(ctx)?,
        });
    }
    let summary = metrics::summarize(scores);
    if csv {
        io::write_report_csv(report, &summary)?;
    } else {
        io::write_json(report, &summary)?;
    }
    println!(
        "frames {}  mean PSNR {:.4} dB  mean SSIM {:.6}",
        summary.per_frame.len(),
        summary.mean_psnr,
        summary.mean_ssim
    );
    Ok(())
}

fn trace(input: &Path, column: usize, out: &Path) -> Result<()> {
    let files = frames_in(input)?;
    let mut slices = Vec::with_capacity(files.len());
    for path in &files {
        let f = io::read_frame(path)?;
        ensure!(
            column < f.width(),
            "{}: column {column} outside width {}",
            path.display(),
            f.width()
        );
        slices.push(Frame::from_fn(1, f.height(), |_, y| f.pixel(column, y))?);
    }
    let image = pipeline::trace_pixel_line(&slices, 0)?;
    io::write_frame(out, &image)?;
    println!("traced column {column} over {} frames into {}", files.len(), out.display());
    Ok(())
}

fn validate(path: &Path) -> Result<()> {
    let LoadedScenario { config, .. } = load_scenario(path)?;
    let violations = validate_scenario(&config.scenario);
    if violations.is_empty() {
        println!(
            "ok: setting {}, {} schedule(s), {} frames",
            config.scenario.setting,
            config.scenario.schedules.len(),
            config.scenario.duration
        );
        return Ok(());
    }
    for v in &violations {
        println!("violation: {v}");
    }
    bail!("{}: {} violation(s)", path.display(), violations.len())
}
