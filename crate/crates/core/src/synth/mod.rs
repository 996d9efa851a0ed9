//! Synthetic microscope frames with analytic ground truth.
//!
//! The spot is a flat-top footprint of the cone on the phantom surface,
//! rasterised with a one-pixel linear anti-aliased edge over a flat or
//! textured background. Motion blur is the union of sixteen sub-exposure
//! footprints.

mod camera;
mod render;
mod trajectory;

pub use camera::{Camera, Projection};
pub use render::{
    footprint, frame_seed, render_frame, render_sequence, write_ground_truth_csv, FrameTruth,
    SequenceFrame, GROUND_TRUTH_HEADER, SUB_EXPOSURES,
};
pub use trajectory::{
    interpolate_pose, read_trajectory_csv, speed_ramp_circle, stationary, straight_line,
    write_trajectory_csv, TrajectorySample, TRAJECTORY_HEADER,
};

use nalgebra::Vector3;
use thiserror::Error;

use crate::conic::ConicError;
use crate::geometry::{ConeModel, ConePose, GeometryError, Surface};
use crate::image::GrayImage;

/// Default 8-bit detection threshold the spot level must exceed.
pub const DEFAULT_SPOT_LEVEL: u8 = 255;
pub const DEFAULT_BACKGROUND_LEVEL: u8 = 80;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("footprint fit failed: {0}")]
    Conic(#[from] ConicError),
    #[error("invalid scene: {0}")]
    Scene(String),
    #[error("invalid trajectory: {0}")]
    Trajectory(String),
    #[error("invalid sequence timing: {0}")]
    Timing(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Background {
    Flat(u8),
    /// Tiled texture, e.g. a printed retina photograph.
    Texture(GrayImage),
}

impl Background {
    #[inline]
    fn level(&self, x: usize, y: usize) -> f64 {
        match self {
            Background::Flat(v) => *v as f64,
            Background::Texture(t) => t.get(x % t.width(), y % t.height()) as f64,
        }
    }
}

/// Sensor noise applied after rasterisation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    /// Standard deviation of additive Gaussian noise, intensity levels.
    pub gaussian_sigma: f64,
    /// Fraction of pixels replaced by 0 or 255.
    pub salt_pepper: f64,
    pub seed: u64,
}

impl NoiseModel {
    pub fn none() -> Self {
        Self {
            gaussian_sigma: 0.0,
            salt_pepper: 0.0,
            seed: 0,
        }
    }

    pub fn gaussian(sigma: f64, seed: u64) -> Self {
        Self {
            gaussian_sigma: sigma,
            salt_pepper: 0.0,
            seed,
        }
    }

    pub fn is_noiseless(&self) -> bool {
        self.gaussian_sigma == 0.0 && self.salt_pepper == 0.0
    }

    fn validate(&self) -> Result<(), SynthError> {
        if !(self.gaussian_sigma >= 0.0 && self.gaussian_sigma.is_finite()) {
            return Err(SynthError::Scene(format!(
                "noise sigma {} must be >= 0",
                self.gaussian_sigma
            )));
        }
        if !(0.0..1.0).contains(&self.salt_pepper) {
            return Err(SynthError::Scene(format!(
                "salt-and-pepper fraction {} outside [0, 1)",
                self.salt_pepper
            )));
        }
        Ok(())
    }
}

/// Everything needed to render one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub surface: Surface,
    pub cone: ConeModel,
    pub pose: ConePose,
    pub camera: Camera,
    pub background: Background,
    pub spot_level: u8,
}

impl SceneSpec {
    /// Plane `z = 0` seen from above by an orthographic camera.
    ///
    /// The cone axis meets the plane at `offset_px` from the image centre,
    /// tilted by `tilt` (radians) about the world y axis, with the tip at
    /// axial distance `distance` from the surface.
    pub fn plane(
        cone: ConeModel,
        distance: f64,
        tilt: f64,
        camera: Camera,
        offset_px: [f64; 2],
    ) -> Result<Self, SynthError> {
        let hit = camera.image_origin
            + camera.right * (offset_px[0] * camera.pitch_mm)
            + camera.down() * (offset_px[1] * camera.pitch_mm);
        let hit = Vector3::new(hit.x, hit.y, 0.0);
        let axis = Vector3::new(tilt.sin(), 0.0, -tilt.cos());
        let pose = ConePose::new(hit - axis * distance, axis)?;
        let scene = Self {
            surface: Surface::plane(Vector3::zeros(), Vector3::z())?,
            cone,
            pose,
            camera,
            background: Background::Flat(DEFAULT_BACKGROUND_LEVEL),
            spot_level: DEFAULT_SPOT_LEVEL,
        };
        scene.validate()?;
        Ok(scene)
    }

    /// Eyeball of radius `r` centred at the origin, seen through a pinhole at
    /// the eyeball centre looking down −z onto the pole `(0, 0, −r)`.
    ///
    /// The spot centre sits at lateral distance `c` from the optical axis with
    /// the cone axis along the local surface normal, and the image window is
    /// centred on the spot.
    pub fn sphere(
        cone: ConeModel,
        r: f64,
        c: f64,
        distance: f64,
        pitch_mm: f64,
        width: usize,
        height: usize,
    ) -> Result<Self, SynthError> {
        if !(c >= 0.0 && c < r) {
            return Err(GeometryError::LateralOffset { c, r }.into());
        }
        let beta = (c / r).asin();
        let spot = Vector3::new(r * beta.sin(), 0.0, -r * beta.cos());
        let axis = spot / r;
        let pose = ConePose::new(spot - axis * distance, axis)?;
        let camera = Camera {
            pitch_mm,
            width,
            height,
            view: -Vector3::z(),
            right: Vector3::x(),
            image_origin: Vector3::new(r * beta.tan(), 0.0, -r),
            projection: Projection::Central {
                center: Vector3::zeros(),
            },
        };
        let scene = Self {
            surface: Surface::sphere(Vector3::zeros(), r)?,
            cone,
            pose,
            camera,
            background: Background::Flat(DEFAULT_BACKGROUND_LEVEL),
            spot_level: DEFAULT_SPOT_LEVEL,
        };
        scene.validate()?;
        Ok(scene)
    }

    pub fn with_pose(&self, pose: ConePose) -> Self {
        Self {
            pose,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if self.spot_level <= crate::detect::DEFAULT_THRESHOLD {
            return Err(SynthError::Scene(format!(
                "spot level {} must exceed the detection threshold {}",
                self.spot_level,
                crate::detect::DEFAULT_THRESHOLD
            )));
        }
        self.camera.validate()?;
        self.surface
            .intersect(&self.pose.tip, &self.pose.axis, 0.0)
            .ok_or(GeometryError::NoIntersection(
                "cone axis misses the surface",
            ))?;
        Ok(())
    }
}
