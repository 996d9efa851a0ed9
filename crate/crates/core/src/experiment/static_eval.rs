//! Static calibration sweeps on the plane and sphere phantoms.

use super::report::f6;
use super::{
    check_loss, lost_frames, track_frames, Artifacts, ExperimentConfig, ExperimentError,
    SurfaceKind,
};
use crate::calibrate::{
    fit_plane_model_with, fit_pooled, fit_sphere_offset, write_residuals_csv, write_samples_csv,
    CalibrationFit, DistanceSample, SphereFit,
};
use crate::geometry::{ConeModel, PixelScale};
use crate::image::GrayImage;
use crate::par::{self, Execution};
use crate::synth::{
    frame_seed, render_frame, Background, Camera, FrameTruth, NoiseModel, SceneSpec,
};

/// Spot placements of successive plane trials, px from the image centre.
const TRIAL_OFFSETS_PX: [[f64; 2]; 3] = [[0.0, 0.0], [-120.0, -60.0], [120.0, 60.0]];

/// Frame-seed stride between independent streams of one experiment.
pub(crate) const STREAM_STRIDE: usize = 1 << 20;

pub const PLANE_TABLE_HEADER: &str = "point,delta_k_mm_px,b_mm,r2,rmse_mm,n";
pub const SPHERE_TABLE_HEADER: &str = "point,c_true_mm,c_mm,std_dev_mm,mean_abs_error_mm,max_error_mm,n";

#[derive(Debug, Clone, PartialEq)]
pub struct PlaneTrial {
    pub offset_px: [f64; 2],
    pub fit: CalibrationFit,
    pub samples: Vec<DistanceSample>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SphereRow {
    pub c_true: f64,
    pub fit: SphereFit,
    pub samples: Vec<DistanceSample>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StaticOutcome {
    pub artifacts: Artifacts,
    pub plane: Vec<PlaneTrial>,
    /// Fit over all plane trials.
    pub pooled: Option<CalibrationFit>,
    pub sphere: Vec<SphereRow>,
    pub lost: usize,
    pub total: usize,
}

pub(crate) fn cone(cfg: &ExperimentConfig) -> Result<ConeModel, ExperimentError> {
    Ok(ConeModel::from_slope(cfg.cone_k, cfg.cone_b)?)
}

pub(crate) fn styled(cfg: &ExperimentConfig, mut scene: SceneSpec) -> SceneSpec {
    scene.background = Background::Flat(cfg.background);
    scene.spot_level = cfg.spot_level;
    scene
}

pub(crate) fn plane_scene(
    cfg: &ExperimentConfig,
    d: f64,
    offset_px: [f64; 2],
) -> Result<SceneSpec, ExperimentError> {
    let camera = Camera::top_down(cfg.pitch_mm, cfg.width, cfg.height);
    let scene = SceneSpec::plane(cone(cfg)?, d, cfg.tilt_deg.to_radians(), camera, offset_px)?;
    Ok(styled(cfg, scene))
}

pub(crate) fn sphere_scene(
    cfg: &ExperimentConfig,
    c: f64,
    d: f64,
) -> Result<SceneSpec, ExperimentError> {
    let scene = SceneSpec::sphere(
        cone(cfg)?,
        cfg.sphere_radius_mm,
        c,
        d,
        cfg.pitch_mm,
        cfg.width,
        cfg.height,
    )?;
    Ok(styled(cfg, scene))
}

/// On the concave sphere a tip touching the surface would have the spot rim
/// behind its end face, so contact distances are left out.
pub(crate) fn sphere_distances(distances: &[f64]) -> impl Iterator<Item = f64> + '_ {
    distances.iter().copied().filter(|&d| d > 0.0)
}

pub(crate) fn noise(cfg: &ExperimentConfig, stream: usize, frame: usize) -> NoiseModel {
    NoiseModel {
        gaussian_sigma: cfg.noise_sigma,
        salt_pepper: cfg.salt_pepper,
        seed: frame_seed(cfg.noise_seed(), stream * STREAM_STRIDE + frame),
    }
}

/// Render one static stream, in parallel over frames.
pub(crate) fn render_stream(
    cfg: &ExperimentConfig,
    scenes: &[SceneSpec],
    stream: usize,
) -> Result<Vec<(GrayImage, FrameTruth)>, ExperimentError> {
    par::map_range(Execution::preferred(), scenes.len(), |i| {
        render_frame(&scenes[i], &noise(cfg, stream, i))
    })
    .into_iter()
    .map(|r| r.map_err(ExperimentError::from))
    .collect()
}

/// Render, track and pair detected minor axes with the true distances.
pub(crate) fn sweep_samples(
    cfg: &ExperimentConfig,
    scenes: &[SceneSpec],
    stream: usize,
) -> Result<(Vec<DistanceSample>, usize), ExperimentError> {
    let frames = render_stream(cfg, scenes, stream)?;
    let track = track_frames(frames.iter().map(|(img, _)| img), &cfg.tracker)?;
    let samples = track
        .iter()
        .filter_map(|&(i, obs)| obs.map(|o| DistanceSample::new(o.a_min, frames[i].1.d_true)))
        .collect();
    Ok((samples, lost_frames(&track)))
}

fn plane_trials(
    cfg: &ExperimentConfig,
    n: usize,
) -> Result<(Vec<PlaneTrial>, usize, usize), ExperimentError> {
    let distances = cfg.sweep_distances();
    let (mut trials, mut lost, mut total) = (Vec::new(), 0, 0);
    for t in 0..n {
        let offset_px = TRIAL_OFFSETS_PX[t % TRIAL_OFFSETS_PX.len()];
        let scenes = distances
            .iter()
            .map(|&d| plane_scene(cfg, d, offset_px))
            .collect::<Result<Vec<_>, _>>()?;
        let (samples, l) = sweep_samples(cfg, &scenes, t)?;
        lost += l;
        total += scenes.len();
        let fit = fit_plane_model_with(&samples, cfg.rmse_divisor)?;
        trials.push(PlaneTrial {
            offset_px,
            fit,
            samples,
        });
    }
    Ok((trials, lost, total))
}

fn samples_csv(samples: &[DistanceSample]) -> Result<Vec<u8>, ExperimentError> {
    let mut buf = Vec::new();
    write_samples_csv(&mut buf, samples)?;
    Ok(buf)
}

fn plane_row(point: &str, f: &CalibrationFit) -> String {
    format!(
        "{point},{},{},{},{},{}\n",
        f6(f.delta_k),
        f6(f.b),
        f6(f.r2),
        f6(f.rmse),
        f.n
    )
}

/// Plane: `trials` sweeps at different image locations, each fit on its own,
/// plus a pooled fit. Sphere: a plane calibration (or the fit file given in
/// the config), then one sweep per lateral offset with `c` fitted.
pub fn run_static_experiment(cfg: &ExperimentConfig) -> Result<StaticOutcome, ExperimentError> {
    cfg.validate()?;
    let mut artifacts = Artifacts::default();
    let mut results: Vec<(&str, String)> = Vec::new();

    let planes_needed = match (cfg.surface, &cfg.fit) {
        (SurfaceKind::Plane, _) => cfg.trials,
        (SurfaceKind::Sphere, Some(_)) => 0,
        (SurfaceKind::Sphere, None) => 1,
    };
    let (plane, mut lost, mut total) = plane_trials(cfg, planes_needed)?;

    let mut pooled = None;
    if cfg.surface == SurfaceKind::Plane {
        let sets: Vec<&[DistanceSample]> = plane.iter().map(|t| t.samples.as_slice()).collect();
        let avg = fit_pooled(&sets, cfg.rmse_divisor)?;
        let mut table = format!("{PLANE_TABLE_HEADER}\n");
        for (i, t) in plane.iter().enumerate() {
            table.push_str(&plane_row(&(i + 1).to_string(), &t.fit));
            artifacts.add(
                format!("samples_trial{}.csv", i + 1),
                samples_csv(&t.samples)?,
            );
        }
        table.push_str(&plane_row("average", &avg));
        artifacts.add("plane_calibration.csv", table.into_bytes());
        let pooled_samples: Vec<DistanceSample> = sets.concat();
        let mut res = Vec::new();
        write_residuals_csv(&mut res, &pooled_samples, &avg)?;
        artifacts.add("residuals_average.csv", res);
        artifacts.add("fit.txt", avg.to_report().into_bytes());
        results.extend([
            ("average_delta_k", f6(avg.delta_k)),
            ("average_b", f6(avg.b)),
            ("average_r2", f6(avg.r2)),
            ("average_rmse", f6(avg.rmse)),
        ]);
        pooled = Some(avg);
    }

    let mut sphere = Vec::new();
    if cfg.surface == SurfaceKind::Sphere {
        let plane_fit = match &cfg.fit {
            Some(path) => super::modes::read_fit(path)?,
            None => {
                let t = &plane[0];
                artifacts.add("samples_plane.csv", samples_csv(&t.samples)?);
                t.fit
            }
        };
        artifacts.add("plane_fit.txt", plane_fit.to_report().into_bytes());
        let scale = PixelScale::from_pixel_pitch(cfg.pitch_mm)?;
        let distances = cfg.sweep_distances();
        let mut table = format!("{SPHERE_TABLE_HEADER}\n");
        for (i, &c) in cfg.sphere_offsets_mm.iter().enumerate() {
            let scenes = sphere_distances(&distances)
                .map(|d| sphere_scene(cfg, c, d))
                .collect::<Result<Vec<_>, _>>()?;
            let (samples, l) = sweep_samples(cfg, &scenes, cfg.trials + i)?;
            lost += l;
            total += scenes.len();
            let fit = fit_sphere_offset(&samples, &plane_fit, cfg.sphere_radius_mm, &scale)?;
            table.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                i + 1,
                f6(c),
                f6(fit.c),
                f6(fit.std_dev),
                f6(fit.mean_abs_error),
                f6(fit.max_error),
                fit.n
            ));
            artifacts.add(
                format!("samples_point{}.csv", i + 1),
                samples_csv(&samples)?,
            );
            sphere.push(SphereRow {
                c_true: c,
                fit,
                samples,
            });
        }
        artifacts.add("sphere_evaluation.csv", table.into_bytes());
        let worst_mean = sphere
            .iter()
            .map(|r| r.fit.mean_abs_error)
            .fold(0.0, f64::max);
        let worst_max = sphere.iter().map(|r| r.fit.max_error).fold(0.0, f64::max);
        results.extend([
            ("worst_mean_abs_error", f6(worst_mean)),
            ("worst_max_error", f6(worst_max)),
        ]);
    }

    results.extend([
        ("frames", total.to_string()),
        ("lost_frames", lost.to_string()),
        ("loss_fraction", f6(lost as f64 / total.max(1) as f64)),
    ]);
    check_loss(lost, total, cfg)?;
    artifacts.add_summary(cfg, &results);
    Ok(StaticOutcome {
        artifacts,
        plane,
        pooled,
        sphere,
        lost,
        total,
    })
}
