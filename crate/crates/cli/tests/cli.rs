use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use seud_core::io::{self, FrameFormat};
use seud_core::metrics::MetricReport;
use seud_core::pipeline::{ScenarioConfig, DEGRADED_DIR, DEPTH_DIR, MANIFEST_FILE, METADATA_FILE};
use seud_core::testutil::{gradient_depth, textured_frame};
use seud_core::trajectory::{DegradationSchedule, DegradationType, IntensityProfile, ProfileShape, Scenario};
use seud_core::Frame;

fn seud(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_seud"))
        .args(args)
        .env_remove("SEUD_THREADS")
        .output()
        .unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Fixture {
    dir: tempfile::TempDir,
}

impl Fixture {
    fn new(n: usize, format: FrameFormat) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let clean = dir.path().join("clean");
        let depth = dir.path().join("depth");
        fs::create_dir_all(&clean).unwrap();
        fs::create_dir_all(&depth).unwrap();
        for i in 0..n {
            io::write_frame(&clean.join(io::frame_file_name(i, format)), &textured_frame(48, 32, i as u64)).unwrap();
        }
        io::write_depth(&depth.join("000000.png"), &gradient_depth(48, 32, 1.0), 1.0).unwrap();
        Fixture { dir }
    }

    fn path(&self, rel: &str) -> std::path::PathBuf {
        self.dir.path().join(rel)
    }

    fn scenario(&self, name: &str, sc: Scenario) -> std::path::PathBuf {
        let p = self.path(name);
        io::write_json(&p, &ScenarioConfig::from(sc)).unwrap();
        p
    }

    fn synthesize(&self, scenario: &Path, out: &str, extra: &[&str]) -> Output {
        let (clean, depth, out) = (self.path("clean"), self.path("depth"), self.path(out));
        let mut args = vec![
            "synthesize", "--clean", s(&clean), "--depth", s(&depth), "--scenario", s(scenario), "--out", s(&out),
        ];
        args.extend_from_slice(extra);
        seud(&args)
    }
}

fn haze(n: u32) -> Scenario {
    Scenario::new(
        1,
        n,
        vec![DegradationSchedule::new(
            DegradationType::Haze,
            1.5,
            IntensityProfile::new(ProfileShape::Cosine, 0, n),
        )],
    )
}

fn assert_exit(out: &Output, code: i32) {
    assert_eq!(
        out.status.code(),
        Some(code),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn usage_errors_exit_1() {
    assert_exit(&seud(&[]), 1);
    assert_exit(&seud(&["synthesize", "--clean", "x"]), 1);
    assert_exit(&seud(&["trace", "--in", "x", "--column", "minus-one", "--out", "y.png"]), 1);
    assert_exit(&seud(&["frobnicate"]), 1);
    assert_exit(&seud(&["--help"]), 0);

    let out = Command::new(env!("CARGO_BIN_EXE_seud"))
        .args(["validate", "--scenario", "nope.json"])
        .env("SEUD_THREADS", "lots")
        .output()
        .unwrap();
    assert_exit(&out, 1);
}

#[test]
fn data_errors_exit_2() {
    let fx = Fixture::new(4, FrameFormat::Png);
    assert_exit(&seud(&["validate", "--scenario", s(&fx.path("missing.json"))]), 2);
    fs::write(fx.path("junk.json"), "{ not json").unwrap();
    assert_exit(&seud(&["validate", "--scenario", s(&fx.path("junk.json"))]), 2);

    // duration disagrees with the frame count
    let sc = fx.scenario("long.json", haze(9));
    assert_exit(&fx.synthesize(&sc, "out", &[]), 2);
    assert!(!fx.path("out").exists(), "nothing is written for a rejected run");
}

#[test]
fn invalid_scenario_writes_nothing() {
    let fx = Fixture::new(4, FrameFormat::Png);
    let sc = fx.scenario("bad.json", Scenario::new(1, 4, vec![]));
    let out = fx.synthesize(&sc, "out", &[]);
    assert_exit(&out, 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("setting 1 requires exactly one schedule"));
    assert!(!fx.path("out").exists());
}

#[test]
fn synthesize_writes_layout_and_regenerates_from_manifest() {
    let fx = Fixture::new(6, FrameFormat::Png);
    let sc = fx.scenario("haze.json", haze(6));
    assert_exit(&fx.synthesize(&sc, "a", &["--seed", "9"]), 0);
    let a = fx.path("a");
    for sub in ["clean", DEGRADED_DIR, DEPTH_DIR] {
        let files = io::list_frames(&a.join(sub)).unwrap();
        assert_eq!(files.len(), 6, "{sub}");
        assert!(files[0].ends_with("000000.png"));
    }
    assert!(a.join(MANIFEST_FILE).is_file());
    assert_eq!(fs::read_to_string(a.join(METADATA_FILE)).unwrap().lines().count(), 6);

    assert_exit(&fx.synthesize(&a.join(MANIFEST_FILE), "b", &[]), 0);
    for rel in [MANIFEST_FILE, METADATA_FILE, "degraded/000003.png", "depth/000005.png"] {
        assert_eq!(fs::read(a.join(rel)).unwrap(), fs::read(fx.path("b").join(rel)).unwrap(), "{rel}");
    }

    let other = fx.synthesize(&sc, "c", &["--seed", "10"]);
    assert_exit(&other, 0);
    assert_ne!(
        fs::read(a.join(MANIFEST_FILE)).unwrap(),
        fs::read(fx.path("c").join(MANIFEST_FILE)).unwrap()
    );
}

#[test]
fn dehaze_and_evaluate() {
    let fx = Fixture::new(6, FrameFormat::Raw);
    let sc = fx.scenario("haze.json", haze(6));
    assert_exit(&fx.synthesize(&sc, "ds", &["--format", "raw"]), 0);
    let ds = fx.path("ds");
    let restored = fx.path("restored");
    assert_exit(
        &seud(&[
            "dehaze", "--in", s(&ds.join(DEGRADED_DIR)), "--depth", s(&ds.join(DEPTH_DIR)), "--use-metadata",
            "--out", s(&restored),
        ]),
        0,
    );
    let report = fx.path("report.json");
    assert_exit(
        &seud(&["evaluate", "--restored", s(&restored), "--reference", s(&ds.join("clean")), "--report", s(&report)]),
        0,
    );
    let parsed: MetricReport = io::read_json(&report).unwrap();
    assert_eq!(parsed.per_frame.len(), 6);
    assert!(parsed.mean_psnr >= 50.0);
    assert_eq!(parsed.infinite_psnr_frames, 1);

    let csv = fx.path("report.csv");
    assert_exit(
        &seud(&[
            "evaluate", "--restored", s(&restored), "--reference", s(&ds.join("clean")), "--report", s(&csv), "--csv",
        ]),
        0,
    );
    let text = fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("frame_index,psnr,ssim\n0,inf,1.00000000\n"));
    assert!(text.lines().last().unwrap().starts_with("mean,"));

    // search mode needs no sidecars
    assert_exit(
        &seud(&["dehaze", "--in", s(&ds.join(DEGRADED_DIR)), "--depth", s(&ds.join(DEPTH_DIR)), "--out", s(&fx.path("searched"))]),
        0,
    );
}

#[test]
fn dehaze_with_metadata_errors() {
    let fx = Fixture::new(4, FrameFormat::Png);
    // no sidecars beside or above the frames
    let out = seud(&[
        "dehaze", "--in", s(&fx.path("clean")), "--depth", s(&fx.path("depth")), "--use-metadata", "--out",
        s(&fx.path("r")),
    ]);
    assert_exit(&out, 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing sidecar"));

    // frames that disagree with the manifest dimensions
    let sc = fx.scenario("haze.json", haze(4));
    assert_exit(&fx.synthesize(&sc, "ds", &[]), 0);
    let degraded = fx.path("ds").join(DEGRADED_DIR);
    io::write_frame(&degraded.join("000002.png"), &textured_frame(40, 32, 1)).unwrap();
    let out = seud(&[
        "dehaze", "--in", s(&degraded), "--depth", s(&fx.path("depth")), "--use-metadata", "--out", s(&fx.path("r")),
    ]);
    assert_exit(&out, 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("manifest says 48x32"));
}

#[test]
fn depth_count_must_match_or_broadcast() {
    let fx = Fixture::new(3, FrameFormat::Png);
    let depth = fx.path("depth");
    io::write_depth(&depth.join("000001.png"), &gradient_depth(48, 32, 1.0), 1.0).unwrap();
    let sc = fx.scenario("quiet.json", Scenario::new(5, 3, vec![]));
    let out = fx.synthesize(&sc, "out", &[]);
    assert_exit(&out, 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("2 depth maps for 3 frames"));
}

#[test]
fn trace_writes_time_by_row_image() {
    let dir = tempfile::tempdir().unwrap();
    let frames = dir.path().join("frames");
    fs::create_dir_all(&frames).unwrap();
    for t in 0..5 {
        let mut f = Frame::filled(8, 6, seud_core::Rgb::gray(0.0)).unwrap();
        f.set_pixel(t, 1, [1.0; 3]);
        io::write_frame(&frames.join(io::frame_file_name(t, FrameFormat::Png)), &f).unwrap();
    }
    let out = dir.path().join("trace.png");
    assert_exit(&seud(&["trace", "--in", s(&frames), "--column", "3", "--out", s(&out)]), 0);
    let img = io::read_frame(&out).unwrap();
    assert_eq!(img.dims(), (6, 5));
    for t in 0..5 {
        for y in 0..6 {
            assert_eq!(img.pixel(y, t)[0] == 1.0, t == 3 && y == 1);
        }
    }
    assert_exit(&seud(&["trace", "--in", s(&frames), "--column", "8", "--out", s(&out)]), 2);
}

#[test]
fn malformed_raw_frame_reports_offset() {
    let fx = Fixture::new(2, FrameFormat::Raw);
    let bad = fx.path("clean").join("000001.raw");
    let bytes = fs::read(&bad).unwrap();
    fs::write(&bad, &bytes[..bytes.len() - 7]).unwrap();
    let sc = fx.scenario("quiet.json", Scenario::new(5, 2, vec![]));
    let out = fx.synthesize(&sc, "out", &["--format", "raw"]);
    assert_exit(&out, 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("malformed at byte"));
}
