//! Conic algebra and direct least-squares ellipse fitting.
//!
//! The fit is the constrained direct method (`4ac - b² = 1`) in the
//! numerically stable block form of Halíř and Flusser, applied to points that
//! are first centred and scaled to unit RMS radius.

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConicError {
    #[error("too few points for an ellipse fit: need {needed}, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("points are collinear or coincident")]
    Degenerate,
    #[error("conic is not a real ellipse")]
    NotAnEllipse,
    #[error("numerical failure: {0}")]
    Numerical(&'static str),
}

/// General conic `a x² + b xy + c y² + d x + e y + f = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Conic {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub f: f64,
}

impl Conic {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.a * x * x + self.b * x * y + self.c * y * y + self.d * x + self.e * y + self.f
    }

    /// Discriminant `4ac - b²`; positive for (real or imaginary) ellipses.
    pub fn ellipse_discriminant(&self) -> f64 {
        4.0 * self.a * self.c - self.b * self.b
    }

    /// Geometric parameters of the conic, if it is a real ellipse.
    pub fn to_ellipse(&self) -> Result<Ellipse, ConicError> {
        let det = self.ellipse_discriminant();
        let scale = self.a.abs().max(self.b.abs()).max(self.c.abs());
        if !(det > 1e-14 * scale * scale) {
            return Err(ConicError::NotAnEllipse);
        }
        let cx = (self.b * self.e - 2.0 * self.c * self.d) / det;
        let cy = (self.b * self.d - 2.0 * self.a * self.e) / det;
        let f0 = self.f + 0.5 * (self.d * cx + self.e * cy);

        let theta = 0.5 * self.b.atan2(self.a - self.c);
        let (s, c) = theta.sin_cos();
        let along = self.a * c * c + self.b * s * c + self.c * s * s;
        let across = self.a * s * s - self.b * s * c + self.c * c * c;
        let r_along = -f0 / along;
        let r_across = -f0 / across;
        if !(r_along > 0.0 && r_across > 0.0) || !r_along.is_finite() || !r_across.is_finite() {
            return Err(ConicError::NotAnEllipse);
        }
        let (r_along, r_across) = (r_along.sqrt(), r_across.sqrt());
        let (semi_major, semi_minor, angle) = if r_along >= r_across {
            (r_along, r_across, theta)
        } else {
            (r_across, r_along, theta + std::f64::consts::FRAC_PI_2)
        };
        Ok(Ellipse {
            center: [cx, cy],
            semi_major,
            semi_minor,
            angle: normalize_angle(angle),
        })
    }
}

/// Ellipse in geometric form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ellipse {
    pub center: [f64; 2],
    pub semi_major: f64,
    pub semi_minor: f64,
    /// Direction of the major axis from +x, radians in (−π/2, π/2].
    pub angle: f64,
}

impl Ellipse {
    pub fn major_axis(&self) -> f64 {
        2.0 * self.semi_major
    }

    pub fn minor_axis(&self) -> f64 {
        2.0 * self.semi_minor
    }

    /// Point at eccentric anomaly `t`.
    pub fn point(&self, t: f64) -> [f64; 2] {
        let (s, c) = self.angle.sin_cos();
        let (x, y) = (self.semi_major * t.cos(), self.semi_minor * t.sin());
        [
            self.center[0] + x * c - y * s,
            self.center[1] + x * s + y * c,
        ]
    }

    pub fn sample(&self, n: usize) -> Vec<[f64; 2]> {
        (0..n)
            .map(|i| self.point(std::f64::consts::TAU * i as f64 / n as f64))
            .collect()
    }

    /// First-order signed distance to the boundary (negative inside).
    pub fn signed_distance(&self, x: f64, y: f64) -> f64 {
        let (s, c) = self.angle.sin_cos();
        let (dx, dy) = (x - self.center[0], y - self.center[1]);
        let u = dx * c + dy * s;
        let v = -dx * s + dy * c;
        let (a2, b2) = (self.semi_major.powi(2), self.semi_minor.powi(2));
        let g = u * u / a2 + v * v / b2 - 1.0;
        let grad = 2.0 * ((u / a2).powi(2) + (v / b2).powi(2)).sqrt();
        if grad < 1e-12 {
            return -self.semi_minor;
        }
        g / grad
    }

    /// Axis-aligned bounding box `[xmin, ymin, xmax, ymax]`.
    pub fn bounding_box(&self) -> [f64; 4] {
        let (s, c) = self.angle.sin_cos();
        let hx = ((self.semi_major * c).powi(2) + (self.semi_minor * s).powi(2)).sqrt();
        let hy = ((self.semi_major * s).powi(2) + (self.semi_minor * c).powi(2)).sqrt();
        [
            self.center[0] - hx,
            self.center[1] - hy,
            self.center[0] + hx,
            self.center[1] + hy,
        ]
    }
}

fn normalize_angle(mut angle: f64) -> f64 {
    use std::f64::consts::PI;
    while angle > PI / 2.0 {
        angle -= PI;
    }
    while angle <= -PI / 2.0 {
        angle += PI;
    }
    angle
}

/// Direct least-squares ellipse fit.
///
/// Requires at least six points that are not all collinear.
pub fn fit_ellipse(points: &[[f64; 2]]) -> Result<Ellipse, ConicError> {
    if points.len() < 6 {
        return Err(ConicError::TooFewPoints {
            needed: 6,
            got: points.len(),
        });
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p[0]).sum::<f64>() / n;
    let my = points.iter().map(|p| p[1]).sum::<f64>() / n;

    // Spread check on the 2x2 scatter: collinear sets have a null direction.
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for p in points {
        let (dx, dy) = (p[0] - mx, p[1] - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let tr = sxx + syy;
    let disc = ((sxx - syy).powi(2) + 4.0 * sxy * sxy).sqrt();
    let min_eig = 0.5 * (tr - disc);
    if !(tr > 0.0) || min_eig <= 1e-12 * tr {
        return Err(ConicError::Degenerate);
    }
    let scale = (2.0 * n / tr).sqrt();

    let mut s1 = Matrix3::<f64>::zeros();
    let mut s2 = Matrix3::<f64>::zeros();
    let mut s3 = Matrix3::<f64>::zeros();
    for p in points {
        let x = (p[0] - mx) * scale;
        let y = (p[1] - my) * scale;
        let quad = Vector3::new(x * x, x * y, y * y);
        let lin = Vector3::new(x, y, 1.0);
        s1 += quad * quad.transpose();
        s2 += quad * lin.transpose();
        s3 += lin * lin.transpose();
    }
    let s3_inv = s3.try_inverse().ok_or(ConicError::Degenerate)?;
    let t = -s3_inv * s2.transpose();
    let m = s1 + s2 * t;
    // Premultiply by the inverse of the constraint block [[0,0,2],[0,-1,0],[2,0,0]].
    let reduced = Matrix3::from_rows(&[
        (m.row(2) * 0.5).into_owned(),
        (-m.row(1)).into_owned(),
        (m.row(0) * 0.5).into_owned(),
    ]);

    let eigenvalues = reduced.complex_eigenvalues();
    let mut best: Option<(f64, Vector3<f64>)> = None;
    for ev in eigenvalues.iter() {
        if ev.im.abs() > 1e-9 * (1.0 + ev.re.abs()) {
            continue;
        }
        let shifted = reduced - Matrix3::identity() * ev.re;
        let svd = shifted.svd(false, true);
        let v_t = svd.v_t.ok_or(ConicError::Numerical("svd failed"))?;
        let (imin, _) =
            svd.singular_values
                .iter()
                .enumerate()
                .fold(
                    (0, f64::INFINITY),
                    |acc, (i, &s)| if s < acc.1 { (i, s) } else { acc },
                );
        let v: Vector3<f64> = v_t.row(imin).transpose();
        let cond = 4.0 * v[0] * v[2] - v[1] * v[1];
        if cond > 0.0 && best.as_ref().is_none_or(|(c, _)| cond > *c) {
            best = Some((cond, v));
        }
    }
    let (_, quad) = best.ok_or(ConicError::NotAnEllipse)?;
    let lin = t * quad;
    let normalized = Conic {
        a: quad[0],
        b: quad[1],
        c: quad[2],
        d: lin[0],
        e: lin[1],
        f: lin[2],
    };
    let e = normalized.to_ellipse()?;
    Ok(Ellipse {
        center: [e.center[0] / scale + mx, e.center[1] / scale + my],
        semi_major: e.semi_major / scale,
        semi_minor: e.semi_minor / scale,
        angle: e.angle,
    })
}
