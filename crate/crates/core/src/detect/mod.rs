//! Spot segmentation and tracking.
//!
//! Per frame: grayscale conversion, patch clamping and cropping around the
//! current seed, median then Gaussian smoothing, fixed-threshold binarisation,
//! 8-connected labelling, selection of the largest component (which must
//! exceed `min_component` pixels), border following, and an ellipse fit. The
//! fit runs on subpixel points of the half-intensity contour between the
//! component and the patch background, found along the outward axes of the
//! boundary pixels. Observations whose minor axis is below `max_minor_axis`
//! are emitted and re-seed the next frame.

mod edge;
mod filter;
mod label;
mod patch;

pub use edge::{contrast_levels, subpixel_edge_points};
pub use filter::{gaussian_filter, median_filter, Patch};
pub use label::{label_components, select_component, trace_outer_boundary, Component, Mask};
pub use patch::patch_check;

use std::io::Write;

use thiserror::Error;

use crate::conic::{self, ConicError, Ellipse};
use crate::image::{GrayImage, ToGray};

pub const DEFAULT_THRESHOLD: u8 = 200;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DetectError {
    #[error("tracker has no seed position")]
    Unseeded,
    #[error("image {rows}x{cols} is too small for a patch of half-width {patch_half}")]
    ImageTooSmall {
        rows: usize,
        cols: usize,
        patch_half: usize,
    },
    #[error("malformed image: {0}")]
    MalformedImage(String),
    #[error("invalid tracker configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Fit(#[from] ConicError),
}

/// Tracker parameters. Lengths in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackerConfig {
    /// Patch half-width `p`; the patch is `2p × 2p`.
    pub patch_half: usize,
    pub threshold: u8,
    /// `T_s`: the selected component must have more pixels than this.
    pub min_component: usize,
    /// `m_e`: observations need a minor axis strictly below this.
    pub max_minor_axis: f64,
    pub median_kernel: usize,
    pub gaussian_sigma: f64,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self::with_patch_half(50)
    }
}

impl TrackerConfig {
    /// Defaults for a given patch half-width, with `m_e = 2p`.
    pub fn with_patch_half(p: usize) -> Self {
        Self {
            patch_half: p,
            threshold: DEFAULT_THRESHOLD,
            min_component: 20,
            max_minor_axis: 2.0 * p as f64,
            median_kernel: 3,
            gaussian_sigma: 1.0,
        }
    }

    pub fn validate(&self) -> Result<(), DetectError> {
        let bad = |m: String| Err(DetectError::Config(m));
        if self.patch_half < 8 {
            return bad(format!("patch half-width {} must be >= 8", self.patch_half));
        }
        if self.threshold == 0 || self.threshold == 255 {
            return bad(format!("threshold {} must lie in (0, 255)", self.threshold));
        }
        if self.min_component < 1 {
            return bad("minimum component size must be >= 1".into());
        }
        if !(self.max_minor_axis > 0.0) {
            return bad(format!(
                "maximum minor axis {} must be positive",
                self.max_minor_axis
            ));
        }
        if self.median_kernel == 0 || self.median_kernel.is_multiple_of(2) {
            return bad(format!(
                "median kernel {} must be odd and >= 1",
                self.median_kernel
            ));
        }
        if !(self.gaussian_sigma >= 0.0 && self.gaussian_sigma.is_finite()) {
            return bad(format!(
                "gaussian sigma {} must be >= 0",
                self.gaussian_sigma
            ));
        }
        Ok(())
    }
}

/// Detected spot in full-image pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipseObservation {
    pub frame: usize,
    /// Full minor axis, px.
    pub a_min: f64,
    /// Full major axis, px.
    pub a_maj: f64,
    pub center: [f64; 2],
    /// Major-axis direction, radians.
    pub angle: f64,
}

/// Per-stream tracking state.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrackerState {
    pub seed: Option<[f64; 2]>,
    /// Frames processed so far.
    pub frame: usize,
    pub last: Option<EllipseObservation>,
}

impl TrackerState {
    pub fn seeded(seed: [f64; 2]) -> Self {
        Self {
            seed: Some(seed),
            ..Self::default()
        }
    }
}

/// Centroid of the pixels at the frame's maximum intensity.
pub fn seed_from_brightest(img: &GrayImage) -> Option<[f64; 2]> {
    let max = img.max_value();
    let (mut n, mut sx, mut sy) = (0usize, 0f64, 0f64);
    for y in 0..img.height() {
        for x in 0..img.width() {
            if img.get(x, y) == max {
                n += 1;
                sx += x as f64;
                sy += y as f64;
            }
        }
    }
    (n > 0).then(|| [sx / n as f64, sy / n as f64])
}

/// Ellipse through boundary points; axes reported as full lengths.
pub fn fit_ellipse(points: &[[f64; 2]]) -> Result<Ellipse, DetectError> {
    Ok(conic::fit_ellipse(points)?)
}

/// Outcome of the spot search inside one patch, in patch coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchDetection {
    pub ellipse: Ellipse,
    pub component_size: usize,
    pub edge_points: usize,
}

/// Filter, segment and fit inside an already cropped patch.
pub fn detect_in_patch(raw: &Patch, cfg: &TrackerConfig) -> Option<PatchDetection> {
    let smoothed = gaussian_filter(&median_filter(raw, cfg.median_kernel), cfg.gaussian_sigma);
    let threshold = cfg.threshold as f32;
    let mask = Mask {
        width: smoothed.width,
        height: smoothed.height,
        data: smoothed.data.iter().map(|&v| v > threshold).collect(),
    };
    let (labels, comps) = label_components(&mask);
    let center = [
        (smoothed.width as f64 - 1.0) / 2.0,
        (smoothed.height as f64 - 1.0) / 2.0,
    ];
    let comp = select_component(&comps, cfg.min_component, center)?;
    let boundary = trace_outer_boundary(&labels, smoothed.width, smoothed.height, comp);

    let mut points = Vec::new();
    if let Some((fg, bg)) = contrast_levels(&smoothed, &labels, comp.label) {
        if fg > bg {
            points =
                subpixel_edge_points(&smoothed, &labels, comp.label, &boundary, 0.5 * (fg + bg));
        }
    }
    if points.len() < 6 {
        points = boundary
            .iter()
            .map(|&(x, y)| [x as f64, y as f64])
            .collect();
    }
    let ellipse = conic::fit_ellipse(&points).ok()?;
    Some(PatchDetection {
        ellipse,
        component_size: comp.count,
        edge_points: points.len(),
    })
}

/// Track the spot in one frame, updating `state`.
///
/// Returns `Ok(None)` when no component passes the size gate, the fit fails,
/// or the minor axis is not below `max_minor_axis`; the seed is then kept.
pub fn track_pattern<F: ToGray + ?Sized>(
    frame: &F,
    state: &mut TrackerState,
    cfg: &TrackerConfig,
) -> Result<Option<EllipseObservation>, DetectError> {
    cfg.validate()?;
    let seed = state.seed.ok_or(DetectError::Unseeded)?;
    if !(seed[0].is_finite() && seed[1].is_finite()) {
        return Err(DetectError::Unseeded);
    }
    let gray = frame.to_gray();
    if gray.width() == 0
        || gray.height() == 0
        || gray.as_raw().len() != gray.width() * gray.height()
    {
        return Err(DetectError::MalformedImage(format!(
            "{}x{} frame",
            gray.width(),
            gray.height()
        )));
    }
    let p = cfg.patch_half;
    let (mcx, mcy) = patch_check(
        (seed[0].round() as i64, seed[1].round() as i64),
        (gray.height(), gray.width()),
        p,
    )?;
    let patch = Patch::crop(&gray, mcx - p, mcy - p, 2 * p, 2 * p);

    let index = state.frame;
    state.frame += 1;
    let obs = detect_in_patch(&patch, cfg)
        .filter(|d| d.ellipse.minor_axis() < cfg.max_minor_axis)
        .map(|d| EllipseObservation {
            frame: index,
            a_min: d.ellipse.minor_axis(),
            a_maj: d.ellipse.major_axis(),
            center: [
                d.ellipse.center[0] + patch.origin.0 as f64,
                d.ellipse.center[1] + patch.origin.1 as f64,
            ],
            angle: d.ellipse.angle,
        });
    if let Some(o) = &obs {
        state.seed = Some(o.center);
    }
    state.last = obs;
    Ok(obs)
}

pub const OBSERVATIONS_HEADER: &str = "frame,a_min_px,a_maj_px,ex_px,ey_px,status";

/// Observations CSV; lost frames carry empty fields and status `lost`.
pub fn write_observations_csv<W: Write>(
    out: W,
    rows: &[(usize, Option<EllipseObservation>)],
) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(OBSERVATIONS_HEADER.split(','))?;
    for (frame, obs) in rows {
        match obs {
            Some(o) => w.write_record([
                frame.to_string(),
                format!("{:.6}", o.a_min),
                format!("{:.6}", o.a_maj),
                format!("{:.6}", o.center[0]),
                format!("{:.6}", o.center[1]),
                "ok".to_string(),
            ])?,
            None => w.write_record([
                frame.to_string(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                "lost".to_string(),
            ])?,
        }
    }
    w.flush()?;
    Ok(())
}

/// Parse an observations CSV written by [`write_observations_csv`].
pub fn read_observations_csv<R: std::io::Read>(
    input: R,
) -> Result<Vec<(usize, Option<EllipseObservation>)>, DetectError> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let bad = |m: String| DetectError::MalformedImage(m);
    let header = r
        .headers()
        .map_err(|e| bad(e.to_string()))?
        .iter()
        .collect::<Vec<_>>()
        .join(",");
    if header != OBSERVATIONS_HEADER {
        return Err(bad(format!(
            "expected observations header `{OBSERVATIONS_HEADER}`, found `{header}`"
        )));
    }
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let field = |i: usize| rec.get(i).unwrap_or("");
        let frame: usize = field(0)
            .parse()
            .map_err(|_| bad(format!("bad frame index {:?}", field(0))))?;
        let obs = if field(5) == "ok" {
            let num = |i: usize| {
                field(i)
                    .parse::<f64>()
                    .map_err(|_| bad(format!("bad number {:?}", field(i))))
            };
            Some(EllipseObservation {
                frame,
                a_min: num(1)?,
                a_maj: num(2)?,
                center: [num(3)?, num(4)?],
                angle: 0.0,
            })
        } else {
            None
        };
        out.push((frame, obs));
    }
    Ok(out)
}
