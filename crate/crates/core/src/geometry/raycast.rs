//! Exact cone/surface intersection used as the reference for the closed forms.
//!
//! The geometric apex of the cone sits at `tip + b·axis`, so that a
//! perpendicular plane at axial distance `d` from the tip produces a circular
//! spot of radius `(d − b)/k`.

use nalgebra::Vector3;

use super::{ConeModel, GeometryError, MetricEllipse};
use crate::conic::{fit_ellipse, Conic, Ellipse};

pub const DEFAULT_MANTLE_RAYS: usize = 256;
const MIN_MANTLE_RAYS: usize = 64;

/// Position of the fiber tip and the unit direction of the cone axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConePose {
    pub tip: Vector3<f64>,
    pub axis: Vector3<f64>,
}

impl ConePose {
    pub fn new(tip: Vector3<f64>, axis: Vector3<f64>) -> Result<Self, GeometryError> {
        let n = axis.norm();
        if !(n > 0.0 && n.is_finite()) {
            return Err(GeometryError::Axis);
        }
        Ok(Self {
            tip,
            axis: axis / n,
        })
    }

    pub fn apex(&self, cone: &ConeModel) -> Vector3<f64> {
        self.tip + self.axis * cone.b()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Surface {
    Plane {
        point: Vector3<f64>,
        normal: Vector3<f64>,
    },
    Sphere {
        center: Vector3<f64>,
        radius: f64,
    },
}

impl Surface {
    pub fn plane(point: Vector3<f64>, normal: Vector3<f64>) -> Result<Self, GeometryError> {
        let n = normal.norm();
        if !(n > 0.0 && n.is_finite()) {
            return Err(GeometryError::Axis);
        }
        Ok(Surface::Plane {
            point,
            normal: normal / n,
        })
    }

    pub fn sphere(center: Vector3<f64>, radius: f64) -> Result<Self, GeometryError> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(GeometryError::SphereView(format!(
                "radius {radius} must be positive"
            )));
        }
        Ok(Surface::Sphere { center, radius })
    }

    /// Unit normal at a point of the surface.
    pub fn normal_at(&self, p: &Vector3<f64>) -> Vector3<f64> {
        match *self {
            Surface::Plane { normal, .. } => normal,
            Surface::Sphere { center, radius } => (p - center) / radius,
        }
    }

    /// Smallest ray parameter `t ≥ t_min` with `origin + t·dir` on the surface.
    pub fn intersect(&self, origin: &Vector3<f64>, dir: &Vector3<f64>, t_min: f64) -> Option<f64> {
        match *self {
            Surface::Plane { point, normal } => {
                let denom = normal.dot(dir);
                if denom.abs() < 1e-15 {
                    return None;
                }
                let t = normal.dot(&(point - origin)) / denom;
                (t >= t_min).then_some(t)
            }
            Surface::Sphere { center, radius } => {
                let oc = origin - center;
                let a = dir.dot(dir);
                let half_b = oc.dot(dir);
                let c = oc.dot(&oc) - radius * radius;
                let disc = half_b * half_b - a * c;
                if disc < 0.0 {
                    return None;
                }
                let sq = disc.sqrt();
                // Stable pair of roots.
                let q = if half_b >= 0.0 {
                    -(half_b + sq)
                } else {
                    -half_b + sq
                };
                let (mut t0, mut t1) = if q != 0.0 { (q / a, c / q) } else { (0.0, 0.0) };
                if t0 > t1 {
                    std::mem::swap(&mut t0, &mut t1);
                }
                [t0, t1].into_iter().find(|&t| t >= t_min)
            }
        }
    }
}

/// Footprint of the cone on a surface.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    /// Semi-axes of the spot in the local tangent plane.
    pub ellipse: MetricEllipse,
    /// Axial distance from the tip to the surface.
    pub distance: f64,
    /// Where the cone axis meets the surface.
    pub axis_hit: Vector3<f64>,
    /// Tangent-plane basis at `axis_hit` used for `spot`.
    pub tangent_basis: [Vector3<f64>; 2],
    /// Spot ellipse in tangent-plane coordinates centred on `axis_hit`.
    pub spot: Ellipse,
    /// Mantle/surface intersection points, one per ray.
    pub points: Vec<Vector3<f64>>,
}

fn orthonormal_pair(n: &Vector3<f64>) -> [Vector3<f64>; 2] {
    let helper = if n.x.abs() < 0.9 {
        Vector3::x()
    } else {
        Vector3::y()
    };
    let u = n.cross(&helper).normalize();
    let v = n.cross(&u);
    [u, v]
}

/// Cast `samples` rays around the cone mantle and measure the footprint.
///
/// For planes the ellipse comes from the exact cone/plane conic; for spheres
/// the intersection curve is projected onto the tangent plane at the axis hit
/// and fitted by direct least squares.
pub fn raycast_oracle(
    pose: &ConePose,
    cone: &ConeModel,
    surface: &Surface,
    samples: usize,
) -> Result<OracleResult, GeometryError> {
    if samples < MIN_MANTLE_RAYS {
        return Err(GeometryError::TooFewRays {
            needed: MIN_MANTLE_RAYS,
            got: samples,
        });
    }
    let axis = pose.axis;
    let distance =
        surface
            .intersect(&pose.tip, &axis, 0.0)
            .ok_or(GeometryError::NoIntersection(
                "cone axis misses the surface",
            ))?;
    let axis_hit = pose.tip + axis * distance;
    if distance - cone.b() <= 0.0 {
        return Err(GeometryError::NoIntersection(
            "cone apex lies beyond the surface",
        ));
    }

    let apex = pose.apex(cone);
    let (sin_a, cos_a) = cone.half_angle().sin_cos();
    let [mu, mv] = orthonormal_pair(&axis);
    let mut points = Vec::with_capacity(samples);
    for i in 0..samples {
        let phi = std::f64::consts::TAU * i as f64 / samples as f64;
        let dir = axis * cos_a + (mu * phi.cos() + mv * phi.sin()) * sin_a;
        let t = surface
            .intersect(&apex, &dir, 0.0)
            .filter(|&t| (apex + dir * t - pose.tip).dot(&axis) >= -1e-12)
            .ok_or(GeometryError::NoIntersection(
                "a mantle ray misses the surface",
            ))?;
        points.push(apex + dir * t);
    }

    let normal = surface.normal_at(&axis_hit);
    let tangent_basis = orthonormal_pair(&normal);
    let [tu, tv] = tangent_basis;

    let spot = match *surface {
        Surface::Plane { normal, .. } => {
            if normal.dot(&axis).abs() <= sin_a {
                return Err(GeometryError::NoIntersection("open conic section"));
            }
            plane_section(&apex, &axis, cos_a, &axis_hit, &tu, &tv)
        }
        Surface::Sphere { .. } => {
            let projected: Vec<[f64; 2]> = points
                .iter()
                .map(|p| {
                    let w = p - axis_hit;
                    [w.dot(&tu), w.dot(&tv)]
                })
                .collect();
            fit_ellipse(&projected)
        }
    }
    .map_err(|_| GeometryError::NoIntersection("degenerate footprint"))?;

    Ok(OracleResult {
        ellipse: MetricEllipse {
            e1: spot.semi_minor,
            e2: spot.semi_major,
        },
        distance,
        axis_hit,
        tangent_basis,
        spot,
        points,
    })
}

/// Exact conic of the cone `((X−A)·a)² = cos²α·|X−A|²` restricted to the
/// plane `X = P + x·u + y·v`.
fn plane_section(
    apex: &Vector3<f64>,
    axis: &Vector3<f64>,
    cos_a: f64,
    origin: &Vector3<f64>,
    u: &Vector3<f64>,
    v: &Vector3<f64>,
) -> Result<Ellipse, crate::conic::ConicError> {
    let w = origin - apex;
    let (au, av, aw) = (axis.dot(u), axis.dot(v), axis.dot(&w));
    let (wu, wv, ww) = (w.dot(u), w.dot(v), w.dot(&w));
    let c2 = cos_a * cos_a;
    Conic {
        a: au * au - c2,
        b: 2.0 * au * av,
        c: av * av - c2,
        d: 2.0 * (aw * au - c2 * wu),
        e: 2.0 * (aw * av - c2 * wv),
        f: aw * aw - c2 * ww,
    }
    .to_ellipse()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{distance_on_plane, distance_on_sphere};
    use approx::assert_abs_diff_eq;

    fn tilted_plane(d: f64, tilt: f64) -> (ConePose, Surface) {
        let pose =
            ConePose::new(Vector3::new(0.3, -0.2, 1.0), Vector3::new(0.0, 0.0, -1.0)).unwrap();
        let hit = pose.tip + pose.axis * d;
        let normal = Vector3::new(tilt.sin(), 0.0, tilt.cos());
        (pose, Surface::plane(hit, normal).unwrap())
    }

    /// Semi-minor axis of a cone section at apex distance `h` along the axis
    /// and tilt `phi` between axis and plane normal.
    fn section_semi_minor(h: f64, half_angle: f64, phi: f64) -> f64 {
        h * phi.cos() * half_angle.sin() / (phi.cos().powi(2) - half_angle.sin().powi(2)).sqrt()
    }

    #[test]
    fn perpendicular_plane_gives_circle() {
        let cone = ConeModel::from_angle(1.0, 0.0).unwrap();
        let (pose, plane) = tilted_plane(3.0, 0.0);
        let res = raycast_oracle(&pose, &cone, &plane, 256).unwrap();
        let expected = 3.0 * 0.5f64.tan();
        assert_abs_diff_eq!(res.ellipse.e1, expected, epsilon = 1e-12);
        assert_abs_diff_eq!(res.ellipse.e2, expected, epsilon = 1e-12);
        assert_abs_diff_eq!(res.distance, 3.0, epsilon = 1e-12);
    }

    #[test]
    fn perpendicular_plane_with_intercept_matches_closed_form() {
        let cone = ConeModel::from_slope(2.0, 0.1).unwrap();
        let (pose, plane) = tilted_plane(2.1, 0.0);
        let res = raycast_oracle(&pose, &cone, &plane, 128).unwrap();
        assert_abs_diff_eq!(res.ellipse.e1, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            distance_on_plane(&cone, res.ellipse.e1),
            res.distance,
            epsilon = 1e-9
        );
    }

    #[test]
    fn oblique_section_follows_cone_section_formula() {
        for (theta_deg, tilt_deg) in [(60.0, 20.0), (30.0, 45.0), (100.0, 30.0)] {
            let cone = ConeModel::from_angle(f64::to_radians(theta_deg), -0.4).unwrap();
            let (pose, plane) = tilted_plane(2.5, f64::to_radians(tilt_deg));
            let res = raycast_oracle(&pose, &cone, &plane, 256).unwrap();
            let h = res.distance - cone.b();
            let expected = section_semi_minor(h, cone.half_angle(), f64::to_radians(tilt_deg));
            assert_abs_diff_eq!(res.ellipse.e1, expected, epsilon = 1e-9);
            // The points themselves lie on the fitted section.
            let [u, v] = res.tangent_basis;
            for p in &res.points {
                let w = p - res.axis_hit;
                assert!(res.spot.signed_distance(w.dot(&u), w.dot(&v)).abs() < 1e-8);
            }
            // Tilt stretches the minor axis beyond the perpendicular value.
            assert!(res.ellipse.e1 > h / cone.k());
        }
    }

    #[test]
    fn sphere_normal_incidence_is_exact() {
        let r = 11.25;
        let cone = ConeModel::from_angle(std::f64::consts::FRAC_PI_3, 0.0).unwrap();
        let center = Vector3::zeros();
        let sphere = Surface::sphere(center, r).unwrap();
        // Tip inside the eye, pointing outward along a radius.
        let axis = Vector3::new(0.2, -0.1, 1.0).normalize();
        let pose = ConePose::new(center + axis * (r - 1.5), axis).unwrap();
        let res = raycast_oracle(&pose, &cone, &sphere, 256).unwrap();
        assert_abs_diff_eq!(res.distance, 1.5, epsilon = 1e-12);
        assert_abs_diff_eq!(res.ellipse.e1, res.ellipse.e2, epsilon = 1e-9);
        let model = distance_on_sphere(&cone, r, res.ellipse.e1).unwrap();
        assert_abs_diff_eq!(model, res.distance, epsilon = 1e-9);
    }

    #[test]
    fn errors() {
        let cone = ConeModel::from_angle(1.0, 0.0).unwrap();
        let (pose, plane) = tilted_plane(1.0, 0.0);
        assert!(matches!(
            raycast_oracle(&pose, &cone, &plane, 10),
            Err(GeometryError::TooFewRays { .. })
        ));
        // Tilt beyond 90° − θ/2 opens the section.
        let (pose, plane) = tilted_plane(1.0, f64::to_radians(70.0));
        assert!(matches!(
            raycast_oracle(&pose, &cone, &plane, 64),
            Err(GeometryError::NoIntersection(_))
        ));
        let away = ConePose::new(pose.tip, -pose.axis).unwrap();
        let (_, plane) = tilted_plane(1.0, 0.0);
        assert!(raycast_oracle(&away, &cone, &plane, 64).is_err());
    }
}
