use nalgebra::Vector3;

use super::SynthError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Projection {
    /// Parallel projection along the view direction: constant scale.
    Orthographic,
    /// Pinhole at `center`, image plane through `image_origin`.
    Central { center: Vector3<f64> },
}

/// Microscope camera. Pixel centres sit at integer coordinates; the image
/// centre `((w−1)/2, (h−1)/2)` images `image_origin`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Camera {
    /// Millimetres per pixel on the image plane.
    pub pitch_mm: f64,
    pub width: usize,
    pub height: usize,
    /// Unit viewing direction.
    pub view: Vector3<f64>,
    /// Unit image +x direction, orthogonal to `view`.
    pub right: Vector3<f64>,
    pub image_origin: Vector3<f64>,
    pub projection: Projection,
}

impl Camera {
    /// Orthographic camera looking down −z at the origin.
    pub fn top_down(pitch_mm: f64, width: usize, height: usize) -> Self {
        Self {
            pitch_mm,
            width,
            height,
            view: -Vector3::z(),
            right: Vector3::x(),
            image_origin: Vector3::zeros(),
            projection: Projection::Orthographic,
        }
    }

    /// Image +y direction.
    pub fn down(&self) -> Vector3<f64> {
        self.view.cross(&self.right)
    }

    pub fn center_px(&self) -> [f64; 2] {
        [
            (self.width as f64 - 1.0) / 2.0,
            (self.height as f64 - 1.0) / 2.0,
        ]
    }

    /// Pixel coordinates of a world point, `None` behind a pinhole.
    pub fn project(&self, p: &Vector3<f64>) -> Option<[f64; 2]> {
        let on_plane = match self.projection {
            Projection::Orthographic => *p,
            Projection::Central { center } => {
                let w = p - center;
                let depth = w.dot(&self.view);
                if depth <= 0.0 {
                    return None;
                }
                center + w * ((self.image_origin - center).dot(&self.view) / depth)
            }
        };
        let q = on_plane - self.image_origin;
        let [cx, cy] = self.center_px();
        Some([
            cx + q.dot(&self.right) / self.pitch_mm,
            cy + q.dot(&self.down()) / self.pitch_mm,
        ])
    }

    pub(super) fn validate(&self) -> Result<(), SynthError> {
        if !(self.pitch_mm > 0.0 && self.pitch_mm.is_finite()) {
            return Err(SynthError::Scene(format!(
                "pixel pitch {} must be positive",
                self.pitch_mm
            )));
        }
        if self.width < 8 || self.height < 8 {
            return Err(SynthError::Scene(format!(
                "image {}x{} is too small",
                self.width, self.height
            )));
        }
        if (self.view.norm() - 1.0).abs() > 1e-9
            || (self.right.norm() - 1.0).abs() > 1e-9
            || self.view.dot(&self.right).abs() > 1e-9
        {
            return Err(SynthError::Scene("camera basis is not orthonormal".into()));
        }
        if let Projection::Central { center } = self.projection {
            if (self.image_origin - center).dot(&self.view) <= 0.0 {
                return Err(SynthError::Scene(
                    "image plane lies behind the pinhole".into(),
                ));
            }
        }
        Ok(())
    }
}
