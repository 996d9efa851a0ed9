//! Runtime distance estimation and speed/error analysis.

use std::io::{Read, Write};

use thiserror::Error;

use crate::calibrate::CalibrationFit;
use crate::detect::EllipseObservation;
use crate::geometry::{
    distance_from_image_plane, distance_from_image_sphere, ConeModel, GeometryError, PixelScale,
    SphereViewGeometry, Surface,
};
use crate::synth::{interpolate_pose, TrajectorySample};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimateError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("need at least {needed} trajectory samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("time is not strictly increasing at sample {index}")]
    NonMonotonicTime { index: usize },
    #[error("no records carry an estimate, a reference distance and a speed")]
    Empty,
    #[error("trajectory: {0}")]
    Trajectory(String),
    #[error("csv: {0}")]
    Csv(String),
}

/// Surface the spot lies on, as needed by the distance model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SurfaceModel {
    Plane,
    /// Sphere view geometry plus the pixel scale the fit was made with.
    Sphere {
        geom: SphereViewGeometry,
        scale: PixelScale,
    },
}

/// Distance estimate for one observation, mm.
pub fn estimate_distance(
    obs: &EllipseObservation,
    fit: &CalibrationFit,
    surface: &SurfaceModel,
) -> Result<f64, EstimateError> {
    estimate_from_minor_axis(obs.a_min, fit, surface)
}

pub fn estimate_from_minor_axis(
    a_min: f64,
    fit: &CalibrationFit,
    surface: &SurfaceModel,
) -> Result<f64, EstimateError> {
    if !(a_min >= 0.0 && a_min.is_finite()) {
        return Err(GeometryError::MinorAxis(a_min).into());
    }
    match surface {
        SurfaceModel::Plane => {
            // With a unit scale the cone slope is the fitted δk itself.
            let cone = ConeModel::from_slope(fit.delta_k, fit.b)?;
            Ok(distance_from_image_plane(
                &cone,
                &PixelScale::new(1.0)?,
                a_min,
            ))
        }
        SurfaceModel::Sphere { geom, scale } => {
            let cone = fit.cone(scale)?;
            Ok(distance_from_image_sphere(&cone, scale, geom, a_min)?)
        }
    }
}

/// Tip speed (mm/s) at each sample: central differences of position, one-sided at the ends.
pub fn tip_speed(trajectory: &[TrajectorySample]) -> Result<Vec<f64>, EstimateError> {
    let n = trajectory.len();
    if n < 2 {
        return Err(EstimateError::TooFewSamples { needed: 2, got: n });
    }
    for (i, w) in trajectory.windows(2).enumerate() {
        if !(w[1].t > w[0].t) {
            return Err(EstimateError::NonMonotonicTime { index: i + 1 });
        }
    }
    Ok((0..n)
        .map(|i| {
            let (a, b) = (
                trajectory[i.saturating_sub(1)],
                trajectory[(i + 1).min(n - 1)],
            );
            (b.tip - a.tip).norm() / (b.t - a.t)
        })
        .collect())
}

/// Speed at an arbitrary time, linearly interpolated from [`tip_speed`].
pub fn speed_at(trajectory: &[TrajectorySample], speeds: &[f64], t: f64) -> f64 {
    let i = trajectory.partition_point(|s| s.t <= t);
    if i == 0 {
        speeds[0]
    } else if i >= trajectory.len() {
        speeds[speeds.len() - 1]
    } else {
        let (a, b) = (&trajectory[i - 1], &trajectory[i]);
        let w = (t - a.t) / (b.t - a.t);
        speeds[i - 1] + w * (speeds[i] - speeds[i - 1])
    }
}

/// One frame of a tracked sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimationRecord {
    pub frame: usize,
    pub t: f64,
    pub e1_px: Option<f64>,
    pub d_est: Option<f64>,
    pub d_true: Option<f64>,
    pub speed: Option<f64>,
}

impl EstimationRecord {
    pub fn abs_error(&self) -> Option<f64> {
        Some((self.d_est? - self.d_true?).abs())
    }
}

/// Join per-frame observations with a trajectory. The reference distance is
/// measured along the tip axis to `truth_surface` when given.
pub fn records_from_trajectory(
    observations: &[(usize, Option<EllipseObservation>)],
    frame_times: &[f64],
    trajectory: &[TrajectorySample],
    fit: &CalibrationFit,
    surface: &SurfaceModel,
    truth_surface: Option<&Surface>,
) -> Result<Vec<EstimationRecord>, EstimateError> {
    let speeds = tip_speed(trajectory)?;
    observations
        .iter()
        .map(|&(frame, obs)| {
            let t = *frame_times.get(frame).ok_or_else(|| {
                EstimateError::Trajectory(format!("no timestamp for frame {frame}"))
            })?;
            let d_est = obs
                .map(|o| estimate_distance(&o, fit, surface))
                .transpose()?;
            let d_true = match truth_surface {
                Some(s) => {
                    let pose = interpolate_pose(trajectory, t)
                        .map_err(|e| EstimateError::Trajectory(e.to_string()))?;
                    s.intersect(&pose.tip, &pose.axis, 0.0)
                }
                None => None,
            };
            Ok(EstimationRecord {
                frame,
                t,
                e1_px: obs.map(|o| o.a_min),
                d_est,
                d_true,
                speed: Some(speed_at(trajectory, &speeds, t)),
            })
        })
        .collect()
}

pub const RECORDS_HEADER: &str = "frame,t_s,e1_px,d_est_mm,d_true_mm,speed_mm_s";

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

pub fn write_records_csv<W: Write>(
    out: W,
    records: &[EstimationRecord],
) -> Result<(), EstimateError> {
    let csv_err = |e: csv::Error| EstimateError::Csv(e.to_string());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RECORDS_HEADER.split(',')).map_err(csv_err)?;
    for r in records {
        w.write_record([
            r.frame.to_string(),
            format!("{:.6}", r.t),
            opt(r.e1_px),
            opt(r.d_est),
            opt(r.d_true),
            opt(r.speed),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| EstimateError::Csv(e.to_string()))
}

pub fn read_records_csv<R: Read>(input: R) -> Result<Vec<EstimationRecord>, EstimateError> {
    let csv_err = |e: csv::Error| EstimateError::Csv(e.to_string());
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let header = r
        .headers()
        .map_err(csv_err)?
        .iter()
        .collect::<Vec<_>>()
        .join(",");
    if header != RECORDS_HEADER {
        return Err(EstimateError::Csv(format!(
            "expected header `{RECORDS_HEADER}`, found `{header}`"
        )));
    }
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        let field = |i: usize| rec.get(i).unwrap_or("");
        let bad = |i: usize| EstimateError::Csv(format!("bad value {:?}", field(i)));
        let num = |i: usize| -> Result<Option<f64>, EstimateError> {
            match field(i) {
                "" => Ok(None),
                s => s.parse().map(Some).map_err(|_| bad(i)),
            }
        };
        out.push(EstimationRecord {
            frame: field(0).parse().map_err(|_| bad(0))?,
            t: num(1)?.ok_or_else(|| bad(1))?,
            e1_px: num(2)?,
            d_est: num(3)?,
            d_true: num(4)?,
            speed: num(5)?,
        });
    }
    Ok(out)
}

pub const SPEED_BIN_WIDTH: f64 = 0.25;
pub const ERROR_BOUND_MM: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedBin {
    /// Lower speed edge, mm/s.
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    /// Zero when the bin is empty.
    pub mean_abs_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpeedErrorReport {
    pub bins: Vec<SpeedBin>,
    /// Spearman rank correlation between speed and |error|; 0 when undefined.
    pub spearman: f64,
    pub correlation_defined: bool,
    /// Speed up to which every non-empty bin stays within [`ERROR_BOUND_MM`].
    pub threshold_speed: f64,
    pub max_speed: f64,
    pub n: usize,
}

impl SpeedErrorReport {
    /// Consecutive non-empty bins whose mean error drops, as `(bin index, drop)`.
    pub fn inversions(&self) -> Vec<(usize, f64)> {
        let filled: Vec<(usize, f64)> = self
            .bins
            .iter()
            .enumerate()
            .filter(|(_, b)| b.count > 0)
            .map(|(i, b)| (i, b.mean_abs_error))
            .collect();
        filled
            .windows(2)
            .filter(|w| w[1].1 < w[0].1)
            .map(|w| (w[1].0, w[0].1 - w[1].1))
            .collect()
    }

    /// Non-decreasing up to `max_speed`, allowing `allowed` drops of at most `tol`.
    pub fn is_monotone_within(&self, max_speed: f64, allowed: usize, tol: f64) -> bool {
        let inv: Vec<_> = self
            .inversions()
            .into_iter()
            .filter(|&(i, _)| self.bins[i].lo < max_speed)
            .collect();
        inv.len() <= allowed && inv.iter().all(|&(_, d)| d <= tol)
    }
}

/// Average ranks (1-based) with ties sharing their mean rank.
pub fn ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}

/// Spearman correlation, `None` when either variable has no rank variance.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len();
    if n != y.len() || n < 2 {
        return None;
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let m = (n as f64 + 1.0) / 2.0;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - m) * (b - m);
        sxx += (a - m) * (a - m);
        syy += (b - m) * (b - m);
    }
    (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
}

/// Bin |error| by tip speed and correlate the two.
pub fn speed_error_analysis(
    records: &[EstimationRecord],
) -> Result<SpeedErrorReport, EstimateError> {
    let pairs: Vec<(f64, f64)> = records
        .iter()
        .filter_map(|r| Some((r.speed?, r.abs_error()?)))
        .filter(|(s, e)| s.is_finite() && e.is_finite())
        .collect();
    if pairs.is_empty() {
        return Err(EstimateError::Empty);
    }
    let max_speed = pairs.iter().map(|p| p.0).fold(0.0, f64::max);
    let nbins = ((max_speed / SPEED_BIN_WIDTH).floor() as usize) + 1;
    let mut sums = vec![(0usize, 0.0f64); nbins];
    for &(s, e) in &pairs {
        let i = ((s.max(0.0) / SPEED_BIN_WIDTH).floor() as usize).min(nbins - 1);
        sums[i].0 += 1;
        sums[i].1 += e;
    }
    let bins: Vec<SpeedBin> = sums
        .iter()
        .enumerate()
        .map(|(i, &(count, sum))| SpeedBin {
            lo: i as f64 * SPEED_BIN_WIDTH,
            hi: (i + 1) as f64 * SPEED_BIN_WIDTH,
            count,
            mean_abs_error: if count > 0 { sum / count as f64 } else { 0.0 },
        })
        .collect();

    let mut threshold_speed = 0.0;
    for b in &bins {
        if b.count == 0 {
            continue;
        }
        if b.mean_abs_error > ERROR_BOUND_MM {
            break;
        }
        threshold_speed = b.hi.min(max_speed);
    }

    let (speeds, errors): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
    let rho = spearman(&speeds, &errors);
    Ok(SpeedErrorReport {
        bins,
        spearman: rho.unwrap_or(0.0),
        correlation_defined: rho.is_some(),
        threshold_speed,
        max_speed,
        n: pairs.len(),
    })
}

pub const BINS_HEADER: &str = "speed_lo_mm_s,speed_hi_mm_s,count,mean_abs_error_mm";

pub fn write_bins_csv<W: Write>(out: W, report: &SpeedErrorReport) -> Result<(), EstimateError> {
    let csv_err = |e: csv::Error| EstimateError::Csv(e.to_string());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(BINS_HEADER.split(',')).map_err(csv_err)?;
    for b in &report.bins {
        w.write_record([
            format!("{:.6}", b.lo),
            format!("{:.6}", b.hi),
            b.count.to_string(),
            format!("{:.6}", b.mean_abs_error),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| EstimateError::Csv(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::Vector3;

    fn fit(delta_k: f64, b: f64) -> CalibrationFit {
        CalibrationFit {
            delta_k,
            b,
            r2: 1.0,
            rmse: 0.0,
            n: 2,
        }
    }

    fn obs(a_min: f64) -> EllipseObservation {
        EllipseObservation {
            frame: 0,
            a_min,
            a_maj: a_min,
            center: [0.0, 0.0],
            angle: 0.0,
        }
    }

    #[test]
    fn plane_estimates() {
        let f = fit(0.1496, -6.791);
        assert_abs_diff_eq!(
            estimate_distance(&obs(60.0), &f, &SurfaceModel::Plane).unwrap(),
            2.185,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            estimate_distance(&obs(0.0), &f, &SurfaceModel::Plane).unwrap(),
            -6.791,
            epsilon = 1e-12
        );
        assert!(estimate_distance(&obs(f64::NAN), &f, &SurfaceModel::Plane).is_err());
    }

    #[test]
    fn sphere_estimate_matches_hand_formula() {
        let f = fit(0.1321, -5.117);
        let scale = PixelScale::from_pixel_pitch(0.02).unwrap();
        let geom = SphereViewGeometry::with_offset(11.25, 5.531).unwrap();
        let d = estimate_distance(&obs(60.0), &f, &SurfaceModel::Sphere { geom, scale }).unwrap();
        let (r, c, e) = (11.25f64, 5.531f64, 60.0f64);
        let cosf = c.hypot((r * r - c * c).sqrt()).recip() * (r * r - c * c).sqrt();
        let e1 = 0.01 * e * cosf;
        let want = 13.21 * e1 - 5.117 + r - (r * r - e1 * e1).sqrt();
        assert_abs_diff_eq!(d, want, epsilon = 1e-12);
    }

    #[test]
    fn plane_and_sphere_agree_without_curvature() {
        let f = fit(0.1321, -5.117);
        let scale = PixelScale::from_pixel_pitch(0.02).unwrap();
        let geom = SphereViewGeometry::with_offset(1e5, 0.0).unwrap();
        for e in [20.0, 60.0, 100.0] {
            let p = estimate_distance(&obs(e), &f, &SurfaceModel::Plane).unwrap();
            let s = estimate_distance(&obs(e), &f, &SurfaceModel::Sphere { geom, scale }).unwrap();
            assert!((p - s).abs() <= 1e-3);
        }
    }

    fn traj(f: impl Fn(f64) -> Vector3<f64>, dt: f64, n: usize) -> Vec<TrajectorySample> {
        (0..n)
            .map(|i| {
                let t = i as f64 * dt;
                TrajectorySample {
                    t,
                    tip: f(t),
                    axis: Vector3::new(0.0, 0.0, -1.0),
                }
            })
            .collect()
    }

    #[test]
    fn speeds() {
        let lin = traj(|t| Vector3::new(1.5 * t, 0.0, 2.0), 0.01, 50);
        assert!(tip_speed(&lin)
            .unwrap()
            .iter()
            .all(|v| (v - 1.5).abs() < 1e-9));
        let still = traj(|_| Vector3::new(1.0, 2.0, 3.0), 0.01, 10);
        assert!(tip_speed(&still).unwrap().iter().all(|&v| v == 0.0));
        let (radius, w, dt) = (5.0, 0.3, 0.01);
        let arc = traj(
            |t| Vector3::new(radius * (w * t).cos(), radius * (w * t).sin(), 0.0),
            dt,
            100,
        );
        let s = tip_speed(&arc).unwrap();
        // Chord over 2Δt: 2R·sin(ωΔt)/(2Δt) ≈ Rω(1 − (ωΔt)²/6).
        for v in &s[1..99] {
            assert!((v - radius * w).abs() <= radius * w * (w * dt).powi(2));
        }
        assert!(matches!(
            tip_speed(&lin[..1]),
            Err(EstimateError::TooFewSamples { .. })
        ));
        let mut bad = lin.clone();
        bad[3].t = bad[2].t;
        assert_eq!(
            tip_speed(&bad),
            Err(EstimateError::NonMonotonicTime { index: 3 })
        );
    }

    #[test]
    fn ranks_with_ties() {
        assert_eq!(ranks(&[10.0, 20.0, 10.0, 30.0]), vec![1.5, 3.0, 1.5, 4.0]);
        assert_abs_diff_eq!(
            spearman(&[1.0, 2.0, 3.0], &[1.0, 4.0, 9.0]).unwrap(),
            1.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap(),
            -1.0,
            epsilon = 1e-15
        );
        assert_eq!(spearman(&[1.0, 2.0], &[5.0, 5.0]), None);
    }

    fn rec(speed: f64, err: f64) -> EstimationRecord {
        EstimationRecord {
            frame: 0,
            t: 0.0,
            e1_px: Some(1.0),
            d_est: Some(1.0 + err),
            d_true: Some(1.0),
            speed: Some(speed),
        }
    }

    #[test]
    fn zero_error_analysis() {
        let r: Vec<_> = (0..20).map(|i| rec(i as f64 * 0.1, 0.0)).collect();
        let a = speed_error_analysis(&r).unwrap();
        assert_eq!(a.spearman, 0.0);
        assert!(!a.correlation_defined);
        assert_abs_diff_eq!(a.threshold_speed, 1.9, epsilon = 1e-12);
        assert_eq!(a.max_speed, a.threshold_speed);
    }

    #[test]
    fn growing_error_analysis() {
        let r: Vec<_> = (0..300)
            .map(|i| {
                let s = i as f64 * 0.01;
                rec(s, 0.3 * s)
            })
            .collect();
        let a = speed_error_analysis(&r).unwrap();
        assert!(a.spearman > 0.99);
        assert_eq!(a.bins.len(), 12);
        // Bins up to [1.5, 1.75) stay below 0.5 mm on average.
        assert_abs_diff_eq!(a.threshold_speed, 1.75, epsilon = 1e-12);
        assert!(a.inversions().is_empty());
        assert!(a.is_monotone_within(3.0, 0, 0.0));
        assert_eq!(speed_error_analysis(&[]), Err(EstimateError::Empty));
    }

    #[test]
    fn inversion_tolerance() {
        let mut r = vec![rec(0.1, 0.1), rec(0.3, 0.2), rec(0.6, 0.19), rec(0.8, 0.3)];
        let a = speed_error_analysis(&r).unwrap();
        assert_eq!(a.inversions().len(), 1);
        assert!(a.is_monotone_within(3.0, 1, 0.02));
        r[2] = rec(0.6, 0.1);
        assert!(!speed_error_analysis(&r)
            .unwrap()
            .is_monotone_within(3.0, 1, 0.02));
    }

    #[test]
    fn records_csv_round_trip() {
        let r = vec![
            rec(0.5, 0.25),
            EstimationRecord {
                frame: 1,
                t: 0.1,
                e1_px: None,
                d_est: None,
                d_true: Some(2.0),
                speed: Some(0.5),
            },
        ];
        let mut buf = Vec::new();
        write_records_csv(&mut buf, &r).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("frame,t_s,e1_px,d_est_mm,d_true_mm,speed_mm_s\n0,0.000000,1.000000,1.250000,1.000000,0.500000\n"));
        assert!(text.ends_with("1,0.100000,,,2.000000,0.500000\n"));
        assert_eq!(read_records_csv(buf.as_slice()).unwrap(), r);
    }

    #[test]
    fn joins_trajectory() {
        let t = traj(|t| Vector3::new(t, 0.0, 3.0), 0.01, 101);
        let plane = Surface::plane(Vector3::zeros(), Vector3::z()).unwrap();
        let o = [(0, Some(obs(60.0))), (1, None)];
        let recs = records_from_trajectory(
            &o,
            &[0.2, 0.5],
            &t,
            &fit(0.1496, -6.791),
            &SurfaceModel::Plane,
            Some(&plane),
        )
        .unwrap();
        assert_abs_diff_eq!(recs[0].d_true.unwrap(), 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(recs[1].speed.unwrap(), 1.0, epsilon = 1e-9);
        assert!(recs[1].d_est.is_none());
    }
}
