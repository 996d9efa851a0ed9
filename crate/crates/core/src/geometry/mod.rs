//! Closed-form relations between spot size and tip-to-surface distance.
//!
//! Lengths are millimetres, angles radians. The minor axis `e1` used by these
//! formulas is the semi-minor axis of the spot: for a perpendicular plane at
//! axial distance `d` from the cone apex it equals `d·tan(θ/2)`.

mod raycast;

pub use raycast::{raycast_oracle, ConePose, OracleResult, Surface, DEFAULT_MANTLE_RAYS};

use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("cone angle {0} rad outside (0, π)")]
    ConeAngle(f64),
    #[error("cone slope k must be positive and finite, got {0}")]
    ConeSlope(f64),
    #[error("pixel scale must be positive and finite, got {0}")]
    PixelScale(f64),
    #[error("invalid sphere view geometry: {0}")]
    SphereView(String),
    #[error("minor axis {e1} mm exceeds sphere radius {r} mm")]
    SpotLargerThanSphere { e1: f64, r: f64 },
    #[error("lateral offset c = {c} mm must lie in [0, r = {r})")]
    LateralOffset { c: f64, r: f64 },
    #[error("minor axis must be positive, got {0}")]
    MinorAxis(f64),
    #[error("cone does not intersect the surface: {0}")]
    NoIntersection(&'static str),
    #[error("at least {needed} mantle rays are required, got {got}")]
    TooFewRays { needed: usize, got: usize },
    #[error("axis must be a non-zero finite vector")]
    Axis,
}

/// Optical parameters of the spotlight cone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeModel {
    theta: f64,
    k: f64,
    b: f64,
}

impl ConeModel {
    /// Cone with full apex angle `theta`; `k = 1/tan(θ/2)`.
    pub fn from_angle(theta: f64, b: f64) -> Result<Self, GeometryError> {
        if !(theta > 0.0 && theta < PI) {
            return Err(GeometryError::ConeAngle(theta));
        }
        Ok(Self {
            theta,
            k: 1.0 / (theta / 2.0).tan(),
            b,
        })
    }

    /// Cone from its slope `k` (distance per unit semi-minor axis) and intercept `b`.
    ///
    /// `b` is a regression intercept and may be negative.
    pub fn from_slope(k: f64, b: f64) -> Result<Self, GeometryError> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(GeometryError::ConeSlope(k));
        }
        Ok(Self {
            theta: 2.0 * (1.0 / k).atan(),
            k,
            b,
        })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn half_angle(&self) -> f64 {
        self.theta / 2.0
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn b(&self) -> f64 {
        self.b
    }
}

/// See [`ConeModel::from_angle`].
pub fn cone_from_angle(theta: f64, b: f64) -> Result<ConeModel, GeometryError> {
    ConeModel::from_angle(theta, b)
}

/// Ratio between the metric semi-minor axis (mm) and the detected image minor
/// axis (px).
///
/// The tracker reports full axis lengths, so for a camera with pixel pitch
/// `p` mm the ratio is `p / 2`; see [`PixelScale::from_pixel_pitch`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelScale {
    delta: f64,
}

impl PixelScale {
    pub fn new(delta: f64) -> Result<Self, GeometryError> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(GeometryError::PixelScale(delta));
        }
        Ok(Self { delta })
    }

    /// Scale for full-axis pixel measurements on a sensor of the given pitch.
    pub fn from_pixel_pitch(pitch_mm: f64) -> Result<Self, GeometryError> {
        Self::new(pitch_mm / 2.0)
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }
}

/// Eyeball radius, lateral offset of the spot from the optical axis and view size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereViewGeometry {
    r: f64,
    c: f64,
    v: f64,
}

/// Midpoint of the 22 to 23 mm eyeball diameter range.
pub const DEFAULT_EYE_RADIUS_MM: f64 = 11.25;
pub const DEFAULT_VIEW_SIZE_MM: f64 = 10.0;

impl SphereViewGeometry {
    pub fn new(r: f64, c: f64, v: f64) -> Result<Self, GeometryError> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(GeometryError::SphereView(format!(
                "radius {r} must be positive"
            )));
        }
        if !(c >= 0.0 && c < r) {
            return Err(GeometryError::LateralOffset { c, r });
        }
        if !(v > 0.0 && v <= 2.0 * r) {
            return Err(GeometryError::SphereView(format!(
                "view size {v} outside (0, 2r]"
            )));
        }
        Ok(Self { r, c, v })
    }

    /// Geometry with the default view size, clipped to the sphere diameter.
    pub fn with_offset(r: f64, c: f64) -> Result<Self, GeometryError> {
        Self::new(r, c, DEFAULT_VIEW_SIZE_MM.min(2.0 * r))
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn v(&self) -> f64 {
        self.v
    }

    /// `cos(atan(c / sqrt(r² − c²)))`: the factor relating image and metric
    /// minor axes for a spot at lateral offset `c`.
    pub fn foreshortening(&self) -> f64 {
        let (r, c) = (self.r, self.c);
        (c / (r * r - c * c).sqrt()).atan().cos()
    }
}

/// Spot ellipse axes on the surface, in mm (semi-axes).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricEllipse {
    pub e1: f64,
    pub e2: f64,
}

/// `d_p = k·e1 + b`.
pub fn distance_on_plane(cone: &ConeModel, e1: f64) -> f64 {
    cone.k * e1 + cone.b
}

/// Depth of the spherical cap under a spot of semi-minor axis `e1`:
/// `r − sqrt(r² − e1²)`.
pub fn sphere_sagitta(r: f64, e1: f64) -> Result<f64, GeometryError> {
    if e1 > r || e1 < 0.0 || !e1.is_finite() {
        return Err(GeometryError::SpotLargerThanSphere { e1, r });
    }
    let chord = (r * r - e1 * e1).sqrt();
    // Same value as r - chord without the cancellation at large r.
    Ok(e1 * e1 / (r + chord))
}

/// `d_s = k·e1 + b + r − sqrt(r² − e1²)`.
pub fn distance_on_sphere(cone: &ConeModel, r: f64, e1: f64) -> Result<f64, GeometryError> {
    Ok(distance_on_plane(cone, e1) + sphere_sagitta(r, e1)?)
}

/// Metric semi-minor axis of a spot seen at lateral offset `c` on the sphere.
pub fn metric_minor_axis_from_image(
    e1_px: f64,
    scale: &PixelScale,
    geom: &SphereViewGeometry,
) -> f64 {
    scale.delta * e1_px * geom.foreshortening()
}

/// `d_p = (δ·k)·e1′ + b`.
pub fn distance_from_image_plane(cone: &ConeModel, scale: &PixelScale, e1_px: f64) -> f64 {
    (scale.delta * cone.k) * e1_px + cone.b
}

/// Distance to the sphere from an image minor axis, with the foreshortening
/// correction applied to both the linear and the sagitta term.
pub fn distance_from_image_sphere(
    cone: &ConeModel,
    scale: &PixelScale,
    geom: &SphereViewGeometry,
    e1_px: f64,
) -> Result<f64, GeometryError> {
    let e1 = metric_minor_axis_from_image(e1_px, scale, geom);
    let linear = cone.k * scale.delta * geom.foreshortening() * e1_px + cone.b;
    Ok(linear + sphere_sagitta(geom.r, e1)?)
}

/// Lower bound of the angle at `D` in the sphere construction, reached when
/// the spot sits at lateral offset `c`:
/// `atan((r + sqrt(r² − c²))·cos(asin(c/r)/2) / e1)`.
pub fn min_angle_sde(geom: &SphereViewGeometry, e1: f64) -> Result<f64, GeometryError> {
    if !(e1 > 0.0) {
        return Err(GeometryError::MinorAxis(e1));
    }
    let (r, c) = (geom.r, geom.c);
    let fp = r + (r * r - c * c).sqrt();
    Ok((fp * ((c / r).asin() / 2.0).cos() / e1).atan())
}
