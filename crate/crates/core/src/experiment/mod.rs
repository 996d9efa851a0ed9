//! Reproducible experiments wiring rendering, tracking, calibration and
//! estimation together. Each run is determined by its configuration and seed,
//! both of which are embedded in the emitted summary.

mod config;
mod dynamic_eval;
mod modes;
mod report;
mod static_eval;

pub use config::{ExperimentConfig, Mode, RenderKind, SurfaceKind};
pub use dynamic_eval::{run_dynamic_experiment, DynamicOutcome};
pub use modes::{run_calibrate, run_render, run_track};
pub use report::Artifacts;
pub use static_eval::{run_static_experiment, PlaneTrial, SphereRow, StaticOutcome};

use thiserror::Error;

use crate::calibrate::CalibrationError;
use crate::detect::{
    seed_from_brightest, track_pattern, DetectError, EllipseObservation, TrackerConfig,
    TrackerState,
};
use crate::estimate::EstimateError;
use crate::image::{GrayImage, ImageError};
use crate::kv::KvError;
use crate::synth::SynthError;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {msg}")]
    Io { path: String, msg: String },
    #[error("tracking lost in {lost} of {total} frames ({:.1}%), above the allowed {:.1}%; pass --allow-loss to accept", 100.0 * *lost as f64 / *total as f64, 100.0 * max_fraction)]
    TrackingLoss {
        lost: usize,
        total: usize,
        max_fraction: f64,
    },
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Detect(#[from] DetectError),
    #[error(transparent)]
    Calibration(#[from] CalibrationError),
    #[error(transparent)]
    Estimate(#[from] EstimateError),
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error(transparent)]
    Geometry(#[from] crate::geometry::GeometryError),
}

impl From<KvError> for ExperimentError {
    fn from(e: KvError) -> Self {
        ExperimentError::Config(e.to_string())
    }
}

/// Observations of one stream, with frames where the spot was lost as `None`.
pub type Track = Vec<(usize, Option<EllipseObservation>)>;

/// Track a sequence of frames, seeding from the brightest pixels of the first.
pub fn track_frames<'a, I>(frames: I, cfg: &TrackerConfig) -> Result<Track, ExperimentError>
where
    I: IntoIterator<Item = &'a GrayImage>,
{
    let mut state = TrackerState::default();
    let mut out = Vec::new();
    for (i, img) in frames.into_iter().enumerate() {
        if state.seed.is_none() {
            state.seed = seed_from_brightest(img);
        }
        let obs = track_pattern(img, &mut state, cfg)?;
        out.push((i, obs));
    }
    Ok(out)
}

pub fn lost_frames(track: &Track) -> usize {
    track.iter().filter(|(_, o)| o.is_none()).count()
}

/// Fail when the lost fraction exceeds the configured limit, unless allowed.
pub fn check_loss(
    lost: usize,
    total: usize,
    cfg: &ExperimentConfig,
) -> Result<(), ExperimentError> {
    if total > 0 && lost as f64 > cfg.max_loss_fraction * total as f64 && !cfg.allow_loss {
        return Err(ExperimentError::TrackingLoss {
            lost,
            total,
            max_fraction: cfg.max_loss_fraction,
        });
    }
    Ok(())
}

/// Dispatch on `cfg.mode`.
pub fn run(cfg: &ExperimentConfig) -> Result<Artifacts, ExperimentError> {
    cfg.validate()?;
    match cfg.mode {
        Mode::Render => run_render(cfg),
        Mode::Track => run_track(cfg),
        Mode::Calibrate => run_calibrate(cfg),
        Mode::StaticEval => Ok(run_static_experiment(cfg)?.artifacts),
        Mode::DynamicEval => Ok(run_dynamic_experiment(cfg)?.artifacts),
    }
}
