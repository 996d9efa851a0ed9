//! `spotlight`: render, track, calibrate and evaluate spotlight-projection
//! distance estimation on synthetic microscope frames.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use spotlight::experiment::{self, ExperimentConfig, Mode, SurfaceKind};

#[derive(Parser)]
#[command(name = "spotlight", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Flat key=value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Noise seed; required whenever noise is enabled.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    #[arg(long, global = true, value_enum)]
    surface: Option<Surface>,
    /// Accept tracking loss above the configured fraction.
    #[arg(long, global = true)]
    allow_loss: bool,
    /// Override a config key, e.g. `--set noise_sigma=2`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Surface {
    Plane,
    Sphere,
}

#[derive(Subcommand)]
enum Command {
    /// Render a labelled sweep or a motion-blurred sequence.
    Render,
    /// Track a directory of frames; estimate distances when a fit is given.
    Track {
        #[arg(long)]
        frames: Option<PathBuf>,
        #[arg(long)]
        fit: Option<PathBuf>,
        #[arg(long)]
        trajectory: Option<PathBuf>,
    },
    /// Fit the distance model to a samples CSV.
    Calibrate {
        #[arg(long)]
        samples: Option<PathBuf>,
        /// Plane fit used when fitting the sphere offset.
        #[arg(long)]
        fit: Option<PathBuf>,
    },
    /// Static calibration sweeps with table-shaped reports.
    StaticEval,
    /// Speed-ramp sequence and speed/error analysis.
    DynamicEval {
        #[arg(long)]
        trajectory: Option<PathBuf>,
    },
}

fn build_config(cli: &Cli) -> Result<ExperimentConfig, String> {
    let mut cfg = match &cli.common.config {
        Some(path) => {
            let text =
                std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            ExperimentConfig::from_text(&text).map_err(|e| format!("{}: {e}", path.display()))?
        }
        None => ExperimentConfig::default(),
    };
    for o in &cli.common.overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| format!("--set expects KEY=VALUE, got {o:?}"))?;
        cfg.set(k.trim(), v.trim()).map_err(|e| e.to_string())?;
    }
    if let Some(seed) = cli.common.seed {
        cfg.seed = Some(seed);
    }
    if let Some(s) = cli.common.surface {
        cfg.surface = match s {
            Surface::Plane => SurfaceKind::Plane,
            Surface::Sphere => SurfaceKind::Sphere,
        };
    }
    if cli.common.allow_loss {
        cfg.allow_loss = true;
    }
    cfg.out_dir = cli.common.out_dir.clone();
    let set = |slot: &mut Option<PathBuf>, v: &Option<PathBuf>| {
        if v.is_some() {
            slot.clone_from(v);
        }
    };
    cfg.mode = match &cli.command {
        Command::Render => Mode::Render,
        Command::Track {
            frames,
            fit,
            trajectory,
        } => {
            set(&mut cfg.frames, frames);
            set(&mut cfg.fit, fit);
            set(&mut cfg.trajectory, trajectory);
            Mode::Track
        }
        Command::Calibrate { samples, fit } => {
            set(&mut cfg.samples, samples);
            set(&mut cfg.fit, fit);
            Mode::Calibrate
        }
        Command::StaticEval => Mode::StaticEval,
        Command::DynamicEval { trajectory } => {
            set(&mut cfg.trajectory, trajectory);
            Mode::DynamicEval
        }
    };
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match build_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let artifacts = match experiment::run(&cfg) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    if let Err(e) = artifacts.write_to(&cfg.out_dir) {
        eprintln!("error: {e}");
        return ExitCode::FAILURE;
    }
    for (name, _) in artifacts
        .files
        .iter()
        .filter(|(n, _)| !n.starts_with("frames/"))
    {
        println!("{}", cfg.out_dir.join(name).display());
    }
    ExitCode::SUCCESS
}
