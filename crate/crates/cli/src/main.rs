mod commands;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use std::path::PathBuf;

use seud_core::io::FrameFormat;

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;

/// Weather degradation synthesis, dehazing and evaluation for frame sequences.
#[derive(Debug, Parser)]
#[command(name = "seud", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Degrade a clean frame sequence according to a scenario.
    Synthesize {
        #[arg(long)]
        clean: PathBuf,
        /// One depth map per frame, or a single map used for every frame.
        #[arg(long)]
        depth: PathBuf,
        /// Scenario JSON, or a `manifest.json` to regenerate a dataset.
        #[arg(long)]
        scenario: PathBuf,
        /// Overrides the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Output frame format; defaults to the manifest's, else png.
        #[arg(long)]
        format: Option<FrameFormat>,
        /// Metres per full-scale value of 16-bit depth PNGs.
        #[arg(long)]
        depth_scale: Option<f32>,
    },
    /// Invert the haze model on a degraded sequence.
    Dehaze {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        depth: PathBuf,
        /// Use β and airlight from `manifest.json`/`metadata.jsonl` next to
        /// (or one level above) the input frames instead of estimating them.
        #[arg(long)]
        use_metadata: bool,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        depth_scale: Option<f32>,
        #[arg(long, default_value_t = seud_core::haze::DEFAULT_EPSILON)]
        epsilon: f32,
    },
    /// Score restored frames against references with PSNR and SSIM.
    Evaluate {
        #[arg(long)]
        restored: PathBuf,
        #[arg(long)]
        reference: PathBuf,
        #[arg(long)]
        report: PathBuf,
        /// Write CSV instead of JSON.
        #[arg(long)]
        csv: bool,
    },
    /// Stack one pixel column of every frame into a time-by-row image.
    Trace {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        column: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a scenario against its setting's rules.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
    },
}

fn init_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("SEUD_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| format!("SEUD_THREADS must be a non-negative integer, got {raw:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    if let Err(msg) = init_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(EXIT_USAGE);
    }
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_DATA)
        }
    }
}
