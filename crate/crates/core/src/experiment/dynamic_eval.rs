//! Motion-blurred tracking along a speed-ramp trajectory.

use std::fs::File;

use nalgebra::Vector3;

use super::report::f6;
use super::static_eval::{cone, plane_scene, sphere_scene, STREAM_STRIDE};
use super::{
    check_loss, lost_frames, track_frames, Artifacts, ExperimentConfig, ExperimentError,
    SurfaceKind,
};
use crate::calibrate::{fit_plane_model_with, CalibrationFit};
use crate::estimate::{
    estimate_from_minor_axis, speed_at, speed_error_analysis, tip_speed, write_bins_csv,
    write_records_csv, EstimationRecord, SpeedErrorReport, SurfaceModel,
};
use crate::geometry::{PixelScale, SphereViewGeometry};
use crate::par::Execution;
use crate::synth::{
    read_trajectory_csv, render_sequence, speed_ramp_circle, write_trajectory_csv, NoiseModel,
    SceneSpec, TrajectorySample,
};

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicOutcome {
    pub artifacts: Artifacts,
    pub fit: CalibrationFit,
    pub records: Vec<EstimationRecord>,
    pub analysis: SpeedErrorReport,
    pub lost: usize,
    pub total: usize,
}

pub(crate) fn template_scene(cfg: &ExperimentConfig) -> Result<SceneSpec, ExperimentError> {
    match cfg.surface {
        SurfaceKind::Plane => plane_scene(cfg, cfg.start_distance_mm, [0.0, 0.0]),
        SurfaceKind::Sphere => sphere_scene(cfg, cfg.sphere_offsets_mm[0], cfg.start_distance_mm),
    }
}

/// Trajectory from the config file, or the generated speed ramp.
pub(crate) fn trajectory(
    cfg: &ExperimentConfig,
    template: &SceneSpec,
) -> Result<Vec<TrajectorySample>, ExperimentError> {
    match &cfg.trajectory {
        Some(path) => {
            let f = File::open(path).map_err(|e| ExperimentError::Io {
                path: path.display().to_string(),
                msg: e.to_string(),
            })?;
            Ok(read_trajectory_csv(f)?)
        }
        None => Ok(speed_ramp_circle(
            &template.pose,
            Vector3::x(),
            cfg.circle_radius_mm,
            cfg.elevation_deg.to_radians(),
            cfg.max_speed_mm_s,
            cfg.duration_s,
            cfg.trajectory_rate_hz,
        )),
    }
}

pub(crate) fn sequence_noise(cfg: &ExperimentConfig) -> NoiseModel {
    NoiseModel {
        gaussian_sigma: cfg.noise_sigma,
        salt_pepper: cfg.salt_pepper,
        seed: crate::synth::frame_seed(
            cfg.noise_seed(),
            STREAM_STRIDE * (cfg.trials + cfg.sphere_offsets_mm.len() + 1),
        ),
    }
}

/// Calibrate on a static plane sweep (or load the configured fit), then track
/// the blurred sequence and relate distance error to tip speed.
pub fn run_dynamic_experiment(cfg: &ExperimentConfig) -> Result<DynamicOutcome, ExperimentError> {
    cfg.validate()?;
    let mut artifacts = Artifacts::default();

    let fit = match &cfg.fit {
        Some(path) => super::modes::read_fit(path)?,
        None => {
            let scenes = cfg
                .sweep_distances()
                .iter()
                .map(|&d| plane_scene(cfg, d, [0.0, 0.0]))
                .collect::<Result<Vec<_>, _>>()?;
            let (samples, _) = super::static_eval::sweep_samples(cfg, &scenes, 0)?;
            fit_plane_model_with(&samples, cfg.rmse_divisor)?
        }
    };
    artifacts.add("fit.txt", fit.to_report().into_bytes());

    let surface = match cfg.surface {
        SurfaceKind::Plane => SurfaceModel::Plane,
        SurfaceKind::Sphere => SurfaceModel::Sphere {
            geom: SphereViewGeometry::with_offset(cfg.sphere_radius_mm, cfg.sphere_offsets_mm[0])?,
            scale: PixelScale::from_pixel_pitch(cfg.pitch_mm)?,
        },
    };
    cone(cfg)?;
    let template = template_scene(cfg)?;
    let traj = trajectory(cfg, &template)?;
    let mut buf = Vec::new();
    write_trajectory_csv(&mut buf, &traj)?;
    artifacts.add("trajectory.csv", buf);

    let frames = render_sequence(
        &traj,
        &template,
        cfg.frame_rate_hz,
        cfg.exposure_s,
        &sequence_noise(cfg),
        Execution::preferred(),
    )?;
    let track = track_frames(frames.iter().map(|f| &f.image), &cfg.tracker)?;
    let speeds = tip_speed(&traj)?;
    let records = track
        .iter()
        .map(|&(i, obs)| {
            let f = &frames[i];
            Ok(EstimationRecord {
                frame: i,
                t: f.t,
                e1_px: obs.map(|o| o.a_min),
                d_est: obs
                    .map(|o| estimate_from_minor_axis(o.a_min, &fit, &surface))
                    .transpose()?,
                d_true: Some(f.truth.d_true),
                speed: Some(speed_at(&traj, &speeds, f.t)),
            })
        })
        .collect::<Result<Vec<_>, ExperimentError>>()?;
    let (lost, total) = (lost_frames(&track), frames.len());

    let mut buf = Vec::new();
    write_records_csv(&mut buf, &records)?;
    artifacts.add("records.csv", buf);
    let analysis = speed_error_analysis(&records)?;
    let mut buf = Vec::new();
    write_bins_csv(&mut buf, &analysis)?;
    artifacts.add("speed_bins.csv", buf);

    let errors: Vec<f64> = records.iter().filter_map(|r| r.abs_error()).collect();
    let mean_abs = errors.iter().sum::<f64>() / errors.len().max(1) as f64;
    let inversions = analysis.inversions();
    let results = [
        ("delta_k", f6(fit.delta_k)),
        ("b", f6(fit.b)),
        ("spearman", f6(analysis.spearman)),
        (
            "correlation_defined",
            analysis.correlation_defined.to_string(),
        ),
        ("threshold_speed_mm_s", f6(analysis.threshold_speed)),
        ("max_speed_mm_s", f6(analysis.max_speed)),
        ("mean_abs_error_mm", f6(mean_abs)),
        ("bin_inversions", inversions.len().to_string()),
        (
            "largest_inversion_mm",
            f6(inversions.iter().map(|i| i.1).fold(0.0, f64::max)),
        ),
        ("frames", total.to_string()),
        ("lost_frames", lost.to_string()),
        ("loss_fraction", f6(lost as f64 / total.max(1) as f64)),
    ];
    check_loss(lost, total, cfg)?;
    artifacts.add_summary(cfg, &results);
    Ok(DynamicOutcome {
        artifacts,
        fit,
        records,
        analysis,
        lost,
        total,
    })
}
