use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{trajectory, NoiseModel, SceneSpec, SynthError, TrajectorySample};
use crate::conic::{fit_ellipse, Ellipse};
use crate::geometry::{raycast_oracle, ConePose};
use crate::image::GrayImage;
use crate::par::{self, Execution};

/// Sub-exposures accumulated per blurred frame.
pub const SUB_EXPOSURES: usize = 16;
/// Mantle rays used for the ground-truth footprint.
const FOOTPRINT_RAYS: usize = 720;

pub const GROUND_TRUTH_HEADER: &str = "frame,t_s,d_true_mm,e1_true_px,cx_px,cy_px";

/// Analytic label of a rendered frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameTruth {
    /// Axial tip-to-surface distance.
    pub d_true: f64,
    /// Full minor axis of the imaged spot, px.
    pub e1_px: f64,
    pub e2_px: f64,
    pub center_px: [f64; 2],
}

/// Image of the spot outline, fitted to projected mantle/surface points.
pub fn footprint(scene: &SceneSpec, pose: &ConePose) -> Result<(Ellipse, f64), SynthError> {
    let hit = raycast_oracle(pose, &scene.cone, &scene.surface, FOOTPRINT_RAYS)?;
    let projected = hit
        .points
        .iter()
        .map(|p| scene.camera.project(p))
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| SynthError::Scene("spot lies behind the camera".into()))?;
    Ok((fit_ellipse(&projected)?, hit.distance))
}

fn truth_of(outline: &Ellipse, distance: f64) -> FrameTruth {
    FrameTruth {
        d_true: distance,
        e1_px: outline.minor_axis(),
        e2_px: outline.major_axis(),
        center_px: outline.center,
    }
}

/// Render one frame of `scene`.
pub fn render_frame(
    scene: &SceneSpec,
    noise: &NoiseModel,
) -> Result<(GrayImage, FrameTruth), SynthError> {
    scene.validate()?;
    noise.validate()?;
    let (outline, distance) = footprint(scene, &scene.pose)?;
    let img = rasterize(scene, &[outline], noise, noise.seed);
    Ok((img, truth_of(&outline, distance)))
}

/// Coverage of a single footprint: 1 inside, 0 outside, linear over one pixel.
#[inline]
fn coverage(e: &Ellipse, x: f64, y: f64) -> f64 {
    (0.5 - e.signed_distance(x, y)).clamp(0.0, 1.0)
}

fn rasterize(scene: &SceneSpec, outlines: &[Ellipse], noise: &NoiseModel, seed: u64) -> GrayImage {
    let (w, h) = (scene.camera.width, scene.camera.height);
    let mut level = vec![0.0f64; w * h];
    for y in 0..h {
        for x in 0..w {
            level[y * w + x] = scene.background.level(x, y);
        }
    }

    // Union of footprints over their joint bounding box.
    let mut bbox = [
        f64::INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::NEG_INFINITY,
    ];
    for e in outlines {
        let b = e.bounding_box();
        bbox = [
            bbox[0].min(b[0]),
            bbox[1].min(b[1]),
            bbox[2].max(b[2]),
            bbox[3].max(b[3]),
        ];
    }
    let x0 = (bbox[0] - 2.0).floor().max(0.0) as usize;
    let y0 = (bbox[1] - 2.0).floor().max(0.0) as usize;
    let x1 = ((bbox[2] + 2.0).ceil().max(0.0) as usize).min(w.saturating_sub(1));
    let y1 = ((bbox[3] + 2.0).ceil().max(0.0) as usize).min(h.saturating_sub(1));
    let peak = scene.spot_level as f64;
    if x0 <= x1 && y0 <= y1 && bbox[0] < w as f64 && bbox[1] < h as f64 {
        for y in y0..=y1 {
            for x in x0..=x1 {
                let (fx, fy) = (x as f64, y as f64);
                let cov = outlines
                    .iter()
                    .map(|e| coverage(e, fx, fy))
                    .fold(0.0, f64::max);
                if cov > 0.0 {
                    let bg = level[y * w + x];
                    level[y * w + x] = bg + (peak - bg) * cov;
                }
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gauss =
        (noise.gaussian_sigma > 0.0).then(|| Normal::new(0.0, noise.gaussian_sigma).unwrap());
    let data = level
        .into_iter()
        .map(|mut v| {
            if let Some(g) = &gauss {
                v += g.sample(&mut rng);
            }
            if noise.salt_pepper > 0.0 && rng.random::<f64>() < noise.salt_pepper {
                v = if rng.random::<bool>() { 255.0 } else { 0.0 };
            }
            v.round().clamp(0.0, 255.0) as u8
        })
        .collect();
    GrayImage::from_raw(w, h, data).expect("raster size")
}

/// A frame of a rendered sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceFrame {
    pub index: usize,
    /// Mid-exposure time, s.
    pub t: f64,
    pub image: GrayImage,
    /// Label at mid-exposure.
    pub truth: FrameTruth,
    /// Tip path length during the exposure window, mm.
    pub smear_mm: f64,
}

/// Per-frame seed derived from the sequence seed (splitmix64 finaliser).
pub fn frame_seed(seed: u64, index: usize) -> u64 {
    let mut z = seed ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Render a trajectory at `frame_rate` Hz with the given exposure.
///
/// Frame `i` opens its shutter at `t0 + i / frame_rate`; the blurred spot is
/// the union of [`SUB_EXPOSURES`] footprints at poses interpolated evenly
/// across the exposure window. Frames are independent and rendered with
/// `exec`.
pub fn render_sequence(
    trajectory: &[TrajectorySample],
    template: &SceneSpec,
    frame_rate: f64,
    exposure: f64,
    noise: &NoiseModel,
    exec: Execution,
) -> Result<Vec<SequenceFrame>, SynthError> {
    if !(frame_rate > 0.0 && frame_rate.is_finite()) {
        return Err(SynthError::Timing(format!(
            "frame rate {frame_rate} must be positive"
        )));
    }
    if !(exposure >= 0.0 && exposure <= 1.0 / frame_rate) {
        return Err(SynthError::Timing(format!(
            "exposure {exposure} s must lie in [0, 1/frame_rate = {}]",
            1.0 / frame_rate
        )));
    }
    trajectory::validate(trajectory)?;
    template.validate()?;
    noise.validate()?;

    let t0 = trajectory[0].t;
    let span = trajectory[trajectory.len() - 1].t - t0;
    let n_frames = ((span - exposure) * frame_rate + 1e-9).floor().max(-1.0) as i64 + 1;
    let n_frames = n_frames.max(0) as usize;

    let frames = par::map_range(exec, n_frames, |i| -> Result<SequenceFrame, SynthError> {
        let open = t0 + i as f64 / frame_rate;
        let poses = (0..SUB_EXPOSURES)
            .map(|j| {
                let t = open + exposure * j as f64 / (SUB_EXPOSURES - 1) as f64;
                trajectory::interpolate_pose(trajectory, t)
            })
            .collect::<Result<Vec<_>, _>>()?;
        let outlines = poses
            .iter()
            .map(|p| footprint(template, p).map(|(e, _)| e))
            .collect::<Result<Vec<_>, _>>()?;
        let mid_t = open + exposure / 2.0;
        let mid = trajectory::interpolate_pose(trajectory, mid_t)?;
        let (mid_outline, distance) = footprint(template, &mid)?;
        let smear_mm = poses.windows(2).map(|w| (w[1].tip - w[0].tip).norm()).sum();
        let image = rasterize(template, &outlines, noise, frame_seed(noise.seed, i));
        Ok(SequenceFrame {
            index: i,
            t: mid_t,
            image,
            truth: truth_of(&mid_outline, distance),
            smear_mm,
        })
    });
    frames.into_iter().collect()
}

/// Ground-truth CSV with header [`GROUND_TRUTH_HEADER`].
pub fn write_ground_truth_csv<W: Write>(
    out: W,
    rows: &[(usize, f64, FrameTruth)],
) -> Result<(), SynthError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(GROUND_TRUTH_HEADER.split(','))?;
    for (frame, t, truth) in rows {
        w.write_record([
            frame.to_string(),
            format!("{t:.6}"),
            format!("{:.6}", truth.d_true),
            format!("{:.6}", truth.e1_px),
            format!("{:.6}", truth.center_px[0]),
            format!("{:.6}", truth.center_px[1]),
        ])?;
    }
    w.flush()?;
    Ok(())
}
