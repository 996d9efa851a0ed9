//! File-driven modes: render frames to disk, track a frame directory,
//! calibrate from a samples file.

use std::fs::{self, File};
use std::path::{Path, PathBuf};

use super::dynamic_eval::{sequence_noise, template_scene, trajectory};
use super::report::f6;
use super::static_eval::{plane_scene, render_stream, sphere_distances, sphere_scene};
use super::{
    check_loss, lost_frames, track_frames, Artifacts, ExperimentConfig, ExperimentError,
    RenderKind, SurfaceKind,
};
use crate::calibrate::{
    fit_plane_model_with, fit_sphere_offset, read_samples_csv, write_residuals_csv, CalibrationFit,
};
use crate::detect::write_observations_csv;
use crate::estimate::{
    estimate_from_minor_axis, records_from_trajectory, write_records_csv, EstimationRecord,
    SurfaceModel,
};
use crate::geometry::{PixelScale, SphereViewGeometry};
use crate::image::{encode_pgm, read_frame};
use crate::kv;
use crate::par::Execution;
use crate::synth::{render_sequence, write_ground_truth_csv, write_trajectory_csv};

fn io_err(path: &Path, e: impl std::fmt::Display) -> ExperimentError {
    ExperimentError::Io {
        path: path.display().to_string(),
        msg: e.to_string(),
    }
}

fn required<'a>(p: &'a Option<PathBuf>, key: &str) -> Result<&'a PathBuf, ExperimentError> {
    p.as_ref()
        .ok_or_else(|| ExperimentError::Config(format!("this mode needs `{key}` to be set")))
}

pub(crate) fn read_fit(path: &Path) -> Result<CalibrationFit, ExperimentError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    Ok(CalibrationFit::from_report(&text)?)
}

fn frame_name(i: usize) -> String {
    format!("frames/frame_{i:05}.pgm")
}

/// Render a labelled static sweep or a blurred sequence.
pub fn run_render(cfg: &ExperimentConfig) -> Result<Artifacts, ExperimentError> {
    cfg.validate()?;
    let mut artifacts = Artifacts::default();
    let mut truth_rows = Vec::new();
    match cfg.render_kind {
        RenderKind::Sweep => {
            let distances = cfg.sweep_distances();
            let scenes = match cfg.surface {
                SurfaceKind::Plane => distances
                    .iter()
                    .map(|&d| plane_scene(cfg, d, [0.0, 0.0]))
                    .collect::<Result<Vec<_>, _>>()?,
                SurfaceKind::Sphere => sphere_distances(&distances)
                    .map(|d| sphere_scene(cfg, cfg.sphere_offsets_mm[0], d))
                    .collect::<Result<Vec<_>, _>>()?,
            };
            for (i, (img, truth)) in render_stream(cfg, &scenes, 0)?.into_iter().enumerate() {
                artifacts.add(frame_name(i), encode_pgm(&img));
                truth_rows.push((i, i as f64 / cfg.frame_rate_hz, truth));
            }
        }
        RenderKind::Sequence => {
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
            for f in frames {
                artifacts.add(frame_name(f.index), encode_pgm(&f.image));
                truth_rows.push((f.index, f.t, f.truth));
            }
        }
    }
    let mut buf = Vec::new();
    write_ground_truth_csv(&mut buf, &truth_rows)?;
    artifacts.add("ground_truth.csv", buf);
    artifacts.add_summary(cfg, &[("frames", truth_rows.len().to_string())]);
    Ok(artifacts)
}

/// Image files of a directory in name order.
pub fn list_frames(dir: &Path) -> Result<Vec<PathBuf>, ExperimentError> {
    let mut out: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| io_err(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            matches!(
                p.extension()
                    .and_then(|e| e.to_str())
                    .map(str::to_ascii_lowercase)
                    .as_deref(),
                Some("pgm" | "png")
            )
        })
        .collect();
    out.sort();
    if out.is_empty() {
        return Err(io_err(dir, "no .pgm or .png frames found"));
    }
    Ok(out)
}

/// Track every frame of `frames`; with a fit, also estimate distances.
pub fn run_track(cfg: &ExperimentConfig) -> Result<Artifacts, ExperimentError> {
    cfg.validate()?;
    let dir = required(&cfg.frames, "frames")?;
    let images = list_frames(dir)?
        .iter()
        .map(|p| read_frame(p).map_err(|e| io_err(p, e)))
        .collect::<Result<Vec<_>, _>>()?;
    let track = track_frames(images.iter(), &cfg.tracker)?;
    let mut artifacts = Artifacts::default();
    let mut buf = Vec::new();
    write_observations_csv(&mut buf, &track)
        .map_err(|e| io_err(Path::new("observations.csv"), e))?;
    artifacts.add("observations.csv", buf);

    let mut results = vec![
        ("frames", images.len().to_string()),
        ("lost_frames", lost_frames(&track).to_string()),
    ];
    if let Some(fit_path) = &cfg.fit {
        let fit = read_fit(fit_path)?;
        let surface = match cfg.surface {
            SurfaceKind::Plane => SurfaceModel::Plane,
            SurfaceKind::Sphere => SurfaceModel::Sphere {
                geom: SphereViewGeometry::with_offset(
                    cfg.sphere_radius_mm,
                    cfg.sphere_offsets_mm[0],
                )?,
                scale: PixelScale::from_pixel_pitch(cfg.pitch_mm)?,
            },
        };
        let times: Vec<f64> = (0..images.len())
            .map(|i| i as f64 / cfg.frame_rate_hz + cfg.exposure_s / 2.0)
            .collect();
        let records = match &cfg.trajectory {
            Some(path) => {
                let f = File::open(path).map_err(|e| io_err(path, e))?;
                let traj = crate::synth::read_trajectory_csv(f)?;
                let truth = template_scene(cfg)?.surface;
                records_from_trajectory(&track, &times, &traj, &fit, &surface, Some(&truth))?
            }
            None => track
                .iter()
                .map(|&(i, obs)| {
                    Ok(EstimationRecord {
                        frame: i,
                        t: times[i],
                        e1_px: obs.map(|o| o.a_min),
                        d_est: obs
                            .map(|o| estimate_from_minor_axis(o.a_min, &fit, &surface))
                            .transpose()?,
                        d_true: None,
                        speed: None,
                    })
                })
                .collect::<Result<Vec<_>, ExperimentError>>()?,
        };
        let mut buf = Vec::new();
        write_records_csv(&mut buf, &records)?;
        artifacts.add("records.csv", buf);
        results.push((
            "estimated_frames",
            records
                .iter()
                .filter(|r| r.d_est.is_some())
                .count()
                .to_string(),
        ));
    }
    check_loss(lost_frames(&track), track.len(), cfg)?;
    artifacts.add_summary(cfg, &results);
    Ok(artifacts)
}

/// Fit the plane model to a samples file; on the sphere, fit `c` against the
/// plane fit named by `fit`.
pub fn run_calibrate(cfg: &ExperimentConfig) -> Result<Artifacts, ExperimentError> {
    cfg.validate()?;
    let path = required(&cfg.samples, "samples")?;
    let f = File::open(path).map_err(|e| io_err(path, e))?;
    let samples = read_samples_csv(f)?;
    let mut artifacts = Artifacts::default();
    match cfg.surface {
        SurfaceKind::Plane => {
            let fit = fit_plane_model_with(&samples, cfg.rmse_divisor)?;
            artifacts.add("fit.txt", fit.to_report().into_bytes());
            let mut buf = Vec::new();
            write_residuals_csv(&mut buf, &samples, &fit)?;
            artifacts.add("residuals.csv", buf);
            artifacts.add_summary(
                cfg,
                &[
                    ("r2", f6(fit.r2)),
                    ("rmse", f6(fit.rmse)),
                    ("n", fit.n.to_string()),
                ],
            );
        }
        SurfaceKind::Sphere => {
            let plane = read_fit(required(&cfg.fit, "fit")?)?;
            let scale = PixelScale::from_pixel_pitch(cfg.pitch_mm)?;
            let s = fit_sphere_offset(&samples, &plane, cfg.sphere_radius_mm, &scale)?;
            let pairs = [
                ("c", f6(s.c)),
                ("std_dev", f6(s.std_dev)),
                ("mean_abs_error", f6(s.mean_abs_error)),
                ("max_error", f6(s.max_error)),
                ("rmse", f6(s.rmse)),
                ("n", s.n.to_string()),
            ];
            artifacts.add("sphere_fit.txt", kv::format(&pairs).into_bytes());
            artifacts.add_summary(cfg, &pairs);
        }
    }
    Ok(artifacts)
}
