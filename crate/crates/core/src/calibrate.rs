//! Least-squares calibration of the image-to-distance model.
//!
//! The plane model `d = δk·e1′ + b` is fit by ordinary least squares of the
//! reference distance on the detected minor axis. For a spot on the sphere the
//! lateral offset `c` is recovered numerically, given a plane fit.

use std::io::{Read, Write};

use thiserror::Error;

use crate::geometry::{
    distance_from_image_sphere, ConeModel, GeometryError, PixelScale, SphereViewGeometry,
};
use crate::kv::{self, KvError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CalibrationError {
    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("all samples share the same minor axis; the slope is undetermined")]
    ZeroVarianceAbscissa,
    #[error("length mismatch: {predicted} predictions for {truth} reference values")]
    LengthMismatch { predicted: usize, truth: usize },
    #[error("invalid sample {index}: {msg}")]
    InvalidSample { index: usize, msg: String },
    #[error("offset search failed: {0}")]
    Bracket(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("csv: {0}")]
    Csv(String),
    #[error("fit report: {0}")]
    Report(#[from] KvError),
}

/// One calibration pair: detected minor axis and reference distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceSample {
    pub e1_px: f64,
    pub d_r: f64,
}

impl DistanceSample {
    pub fn new(e1_px: f64, d_r: f64) -> Self {
        Self { e1_px, d_r }
    }
}

/// How the residual sum of squares is normalised in the RMSE.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RmseDivisor {
    #[default]
    N,
    /// `n − 2`: unbiased for a two-parameter fit.
    NMinus2,
}

impl RmseDivisor {
    fn divisor(self, n: usize) -> f64 {
        match self {
            RmseDivisor::N => n as f64,
            RmseDivisor::NMinus2 => n.saturating_sub(2).max(1) as f64,
        }
    }
}

impl std::str::FromStr for RmseDivisor {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "n" => Ok(RmseDivisor::N),
            "n-2" => Ok(RmseDivisor::NMinus2),
            _ => Err(format!("expected `n` or `n-2`, found {s:?}")),
        }
    }
}

impl std::fmt::Display for RmseDivisor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RmseDivisor::N => "n",
            RmseDivisor::NMinus2 => "n-2",
        })
    }
}

/// Fitted plane model with goodness of fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationFit {
    /// mm per px.
    pub delta_k: f64,
    /// mm.
    pub b: f64,
    pub r2: f64,
    /// mm.
    pub rmse: f64,
    pub n: usize,
}

impl CalibrationFit {
    pub fn predict(&self, e1_px: f64) -> f64 {
        self.delta_k * e1_px + self.b
    }

    /// Cone model implied by the fit for a given pixel scale.
    pub fn cone(&self, scale: &PixelScale) -> Result<ConeModel, GeometryError> {
        ConeModel::from_slope(self.delta_k / scale.delta(), self.b)
    }

    pub fn to_report(&self) -> String {
        kv::format(&[
            ("delta_k", format!("{:.6}", self.delta_k)),
            ("b", format!("{:.6}", self.b)),
            ("r2", format!("{:.6}", self.r2)),
            ("rmse", format!("{:.6}", self.rmse)),
            ("n", self.n.to_string()),
        ])
    }

    /// Read the fields written by [`CalibrationFit::to_report`]; other keys are ignored.
    pub fn from_report(text: &str) -> Result<Self, CalibrationError> {
        let map = kv::parse(text)?;
        Ok(Self {
            delta_k: kv::get(&map, "delta_k")?,
            b: kv::get(&map, "b")?,
            r2: kv::get(&map, "r2")?,
            rmse: kv::get(&map, "rmse")?,
            n: kv::get(&map, "n")?,
        })
    }
}

/// Error statistics of predictions against reference values (mm).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Goodness {
    pub r2: f64,
    pub rmse: f64,
    pub mean_abs: f64,
    pub max_abs: f64,
    /// Of the signed error about its mean, divisor n.
    pub std_dev: f64,
}

fn check_samples(samples: &[DistanceSample]) -> Result<(), CalibrationError> {
    for (index, s) in samples.iter().enumerate() {
        if !(s.e1_px >= 0.0 && s.e1_px.is_finite()) {
            return Err(CalibrationError::InvalidSample {
                index,
                msg: format!("minor axis {} px", s.e1_px),
            });
        }
        if !s.d_r.is_finite() {
            return Err(CalibrationError::InvalidSample {
                index,
                msg: format!("distance {}", s.d_r),
            });
        }
    }
    Ok(())
}

fn r2_of(ss_res: f64, ss_tot: f64) -> f64 {
    if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else if ss_res == 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Ordinary least squares of `d_r` on `e1_px`, RMSE with divisor `n`.
pub fn fit_plane_model(samples: &[DistanceSample]) -> Result<CalibrationFit, CalibrationError> {
    fit_plane_model_with(samples, RmseDivisor::N)
}

pub fn fit_plane_model_with(
    samples: &[DistanceSample],
    divisor: RmseDivisor,
) -> Result<CalibrationFit, CalibrationError> {
    let n = samples.len();
    if n < 2 {
        return Err(CalibrationError::InsufficientSamples { needed: 2, got: n });
    }
    check_samples(samples)?;
    let nf = n as f64;
    let mx = samples.iter().map(|s| s.e1_px).sum::<f64>() / nf;
    let my = samples.iter().map(|s| s.d_r).sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for s in samples {
        let (dx, dy) = (s.e1_px - mx, s.d_r - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if !(sxx > 0.0) {
        return Err(CalibrationError::ZeroVarianceAbscissa);
    }
    let delta_k = sxy / sxx;
    let b = my - delta_k * mx;
    let ss_res: f64 = samples
        .iter()
        .map(|s| {
            let e = s.d_r - (delta_k * s.e1_px + b);
            e * e
        })
        .sum();
    Ok(CalibrationFit {
        delta_k,
        b,
        r2: r2_of(ss_res, syy),
        rmse: (ss_res / divisor.divisor(n)).sqrt(),
        n,
    })
}

/// Single fit over the union of several trials.
pub fn fit_pooled(
    trials: &[&[DistanceSample]],
    divisor: RmseDivisor,
) -> Result<CalibrationFit, CalibrationError> {
    let pooled: Vec<DistanceSample> = trials.iter().flat_map(|t| t.iter().copied()).collect();
    fit_plane_model_with(&pooled, divisor)
}

pub fn goodness_metrics(predicted: &[f64], truth: &[f64]) -> Result<Goodness, CalibrationError> {
    if predicted.len() != truth.len() {
        return Err(CalibrationError::LengthMismatch {
            predicted: predicted.len(),
            truth: truth.len(),
        });
    }
    let n = predicted.len();
    if n == 0 {
        return Err(CalibrationError::InsufficientSamples { needed: 1, got: 0 });
    }
    let nf = n as f64;
    let mean_truth = truth.iter().sum::<f64>() / nf;
    let (mut ss_res, mut ss_tot, mut sum_abs, mut max_abs, mut sum_err) =
        (0.0, 0.0, 0.0, 0.0f64, 0.0);
    for (&p, &t) in predicted.iter().zip(truth) {
        let e = p - t;
        ss_res += e * e;
        ss_tot += (t - mean_truth) * (t - mean_truth);
        sum_abs += e.abs();
        max_abs = max_abs.max(e.abs());
        sum_err += e;
    }
    let mean_err = sum_err / nf;
    let var = predicted
        .iter()
        .zip(truth)
        .map(|(&p, &t)| (p - t - mean_err).powi(2))
        .sum::<f64>()
        / nf;
    Ok(Goodness {
        r2: r2_of(ss_res, ss_tot),
        rmse: (ss_res / nf).sqrt(),
        mean_abs: sum_abs / nf,
        max_abs,
        std_dev: var.sqrt(),
    })
}

/// Recovered lateral offset and error statistics at the optimum (mm).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereFit {
    pub c: f64,
    pub std_dev: f64,
    pub mean_abs_error: f64,
    pub max_error: f64,
    pub rmse: f64,
    pub n: usize,
}

const OFFSET_SCAN_POINTS: usize = 64;
const OFFSET_TOLERANCE_MM: f64 = 1e-4;
const MAX_OFFSET_FRACTION: f64 = 0.95;

/// Minimise `f` on `[lo, hi]` to an interval width below `tol`.
pub fn golden_section<F: FnMut(f64) -> f64>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

fn sphere_predictions(
    samples: &[DistanceSample],
    cone: &ConeModel,
    scale: &PixelScale,
    r: f64,
    c: f64,
) -> Result<Vec<f64>, GeometryError> {
    let geom = SphereViewGeometry::with_offset(r, c)?;
    samples
        .iter()
        .map(|s| distance_from_image_sphere(cone, scale, &geom, s.e1_px))
        .collect()
}

/// Fit the lateral offset `c ∈ [0, 0.95 r]` minimising the squared residuals
/// of sphere-model predictions, given a plane fit and the pixel scale it was
/// made with.
pub fn fit_sphere_offset(
    samples: &[DistanceSample],
    fit: &CalibrationFit,
    r: f64,
    scale: &PixelScale,
) -> Result<SphereFit, CalibrationError> {
    if samples.is_empty() {
        return Err(CalibrationError::InsufficientSamples { needed: 1, got: 0 });
    }
    check_samples(samples)?;
    let cone = fit.cone(scale)?;
    SphereViewGeometry::with_offset(r, 0.0)?;
    let objective = |c: f64| -> Result<f64, CalibrationError> {
        let pred = sphere_predictions(samples, &cone, scale, r, c)?;
        let ss: f64 = pred
            .iter()
            .zip(samples)
            .map(|(p, s)| (p - s.d_r).powi(2))
            .sum();
        if ss.is_finite() {
            Ok(ss)
        } else {
            Err(CalibrationError::Bracket(format!(
                "objective is not finite at c = {c}"
            )))
        }
    };

    let hi = MAX_OFFSET_FRACTION * r;
    let step = hi / (OFFSET_SCAN_POINTS - 1) as f64;
    let mut best = (0usize, f64::INFINITY);
    for i in 0..OFFSET_SCAN_POINTS {
        let v = objective(i as f64 * step)?;
        if v < best.1 {
            best = (i, v);
        }
    }
    let lo_c = best.0.saturating_sub(1) as f64 * step;
    let hi_c = ((best.0 + 1).min(OFFSET_SCAN_POINTS - 1)) as f64 * step;
    let mut failure = None;
    let (c, _) = golden_section(
        |c| match objective(c) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                f64::INFINITY
            }
        },
        lo_c,
        hi_c,
        OFFSET_TOLERANCE_MM,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let c = c.clamp(0.0, hi);
    let pred = sphere_predictions(samples, &cone, scale, r, c)?;
    let truth: Vec<f64> = samples.iter().map(|s| s.d_r).collect();
    let g = goodness_metrics(&pred, &truth)?;
    Ok(SphereFit {
        c,
        std_dev: g.std_dev,
        mean_abs_error: g.mean_abs,
        max_error: g.max_abs,
        rmse: g.rmse,
        n: samples.len(),
    })
}

pub const SAMPLES_HEADER: &str = "e1_px,d_r_mm";
pub const RESIDUALS_HEADER: &str = "e1_px,d_r_mm,d_fit_mm,residual_mm";

pub fn write_samples_csv<W: Write>(
    out: W,
    samples: &[DistanceSample],
) -> Result<(), CalibrationError> {
    let csv_err = |e: csv::Error| CalibrationError::Csv(e.to_string());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SAMPLES_HEADER.split(',')).map_err(csv_err)?;
    for s in samples {
        w.write_record([format!("{:.6}", s.e1_px), format!("{:.6}", s.d_r)])
            .map_err(csv_err)?;
    }
    w.flush().map_err(|e| CalibrationError::Csv(e.to_string()))
}

pub fn read_samples_csv<R: Read>(input: R) -> Result<Vec<DistanceSample>, CalibrationError> {
    let csv_err = |e: csv::Error| CalibrationError::Csv(e.to_string());
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let header = r
        .headers()
        .map_err(csv_err)?
        .iter()
        .collect::<Vec<_>>()
        .join(",");
    if header != SAMPLES_HEADER {
        return Err(CalibrationError::Csv(format!(
            "expected header `{SAMPLES_HEADER}`, found `{header}`"
        )));
    }
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let num = |j: usize| {
            rec.get(j).unwrap_or("").parse::<f64>().map_err(|_| {
                CalibrationError::Csv(format!(
                    "row {}: bad number {:?}",
                    i + 1,
                    rec.get(j).unwrap_or("")
                ))
            })
        };
        out.push(DistanceSample::new(num(0)?, num(1)?));
    }
    Ok(out)
}

pub fn write_residuals_csv<W: Write>(
    out: W,
    samples: &[DistanceSample],
    fit: &CalibrationFit,
) -> Result<(), CalibrationError> {
    let csv_err = |e: csv::Error| CalibrationError::Csv(e.to_string());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RESIDUALS_HEADER.split(','))
        .map_err(csv_err)?;
    for s in samples {
        let d = fit.predict(s.e1_px);
        w.write_record([
            format!("{:.6}", s.e1_px),
            format!("{:.6}", s.d_r),
            format!("{:.6}", d),
            format!("{:.6}", d - s.d_r),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| CalibrationError::Csv(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::{DMatrix, DVector};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn line(k: f64, b: f64, xs: impl Iterator<Item = f64>) -> Vec<DistanceSample> {
        xs.map(|x| DistanceSample::new(x, k * x + b)).collect()
    }

    /// QR least squares on the design matrix `[e, 1]`.
    fn qr_oracle(samples: &[DistanceSample]) -> (f64, f64) {
        let n = samples.len();
        let a = DMatrix::from_fn(n, 2, |i, j| if j == 0 { samples[i].e1_px } else { 1.0 });
        let y = DVector::from_iterator(n, samples.iter().map(|s| s.d_r));
        let qr = a.qr();
        let qty = qr.q().transpose() * y;
        let sol = qr.r().solve_upper_triangular(&qty).unwrap();
        (sol[0], sol[1])
    }

    #[test]
    fn exact_line() {
        let s = line(0.1496, -6.791, (40..=90).map(f64::from));
        let fit = fit_plane_model(&s).unwrap();
        assert_abs_diff_eq!(fit.delta_k, 0.1496, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.b, -6.791, epsilon = 1e-10);
        assert_abs_diff_eq!(fit.r2, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.rmse, 0.0, epsilon = 1e-10);
        assert_eq!(fit.n, 51);
    }

    #[test]
    fn two_samples() {
        let fit = fit_plane_model(&[
            DistanceSample::new(50.0, 1.0),
            DistanceSample::new(60.0, 2.5),
        ])
        .unwrap();
        assert_abs_diff_eq!(fit.delta_k, 0.15, epsilon = 1e-14);
        assert_eq!(fit.r2, 1.0);
    }

    #[test]
    fn noisy_line_matches_qr() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let noise = Normal::new(0.0, 0.05).unwrap();
        let s: Vec<_> = (0..100)
            .map(|_| {
                let e: f64 = rng.random_range(40.0..90.0);
                DistanceSample::new(e, 0.1496 * e - 6.791 + noise.sample(&mut rng))
            })
            .collect();
        let fit = fit_plane_model(&s).unwrap();
        let (k, b) = qr_oracle(&s);
        assert_abs_diff_eq!(fit.delta_k, k, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.b, b, epsilon = 1e-12);
    }

    #[test]
    fn errors() {
        assert_eq!(
            fit_plane_model(&[DistanceSample::new(1.0, 1.0)]),
            Err(CalibrationError::InsufficientSamples { needed: 2, got: 1 })
        );
        assert_eq!(
            fit_plane_model(&[DistanceSample::new(1.0, 1.0), DistanceSample::new(1.0, 2.0)]),
            Err(CalibrationError::ZeroVarianceAbscissa)
        );
        assert!(matches!(
            fit_plane_model(&[
                DistanceSample::new(-1.0, 1.0),
                DistanceSample::new(1.0, 2.0)
            ]),
            Err(CalibrationError::InvalidSample { index: 0, .. })
        ));
        assert!(matches!(
            goodness_metrics(&[1.0], &[1.0, 2.0]),
            Err(CalibrationError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn rmse_divisor() {
        let s = [
            DistanceSample::new(0.0, 0.0),
            DistanceSample::new(1.0, 1.0),
            DistanceSample::new(2.0, 0.0),
            DistanceSample::new(3.0, 1.0),
        ];
        let a = fit_plane_model_with(&s, RmseDivisor::N).unwrap();
        let b = fit_plane_model_with(&s, RmseDivisor::NMinus2).unwrap();
        assert_abs_diff_eq!(b.rmse, a.rmse * 2f64.sqrt(), epsilon = 1e-14);
        assert_eq!("n-2".parse::<RmseDivisor>().unwrap(), RmseDivisor::NMinus2);
    }

    #[test]
    fn pooled_is_not_coefficient_average() {
        let t1 = line(0.15, -6.8, (40..60).map(f64::from));
        let t2 = line(0.12, -5.0, (45..65).map(f64::from));
        let pooled = fit_pooled(&[&t1, &t2], RmseDivisor::N).unwrap();
        assert_eq!(pooled.n, 40);
        assert!(pooled.r2 < 1.0);
        assert!((pooled.delta_k - 0.135).abs() > 1e-3);
    }

    #[test]
    fn goodness_cases() {
        let t = [1.0, 2.0, 3.0];
        let g = goodness_metrics(&t, &t).unwrap();
        assert_eq!(
            (g.rmse, g.mean_abs, g.max_abs, g.std_dev, g.r2),
            (0.0, 0.0, 0.0, 0.0, 1.0)
        );
        let p: Vec<f64> = t.iter().map(|v| v + 0.1).collect();
        let g = goodness_metrics(&p, &t).unwrap();
        assert_abs_diff_eq!(g.mean_abs, 0.1, epsilon = 1e-12);
        assert_abs_diff_eq!(g.max_abs, 0.1, epsilon = 1e-12);
        assert_abs_diff_eq!(g.std_dev, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn golden_section_quadratic() {
        let (x, fx) = golden_section(|x| (x - 1.3).powi(2) + 2.0, 0.0, 5.0, 1e-8);
        assert_abs_diff_eq!(x, 1.3, epsilon = 1e-7);
        assert_abs_diff_eq!(fx, 2.0, epsilon = 1e-12);
    }

    fn sphere_samples(c: f64, r: f64) -> (Vec<DistanceSample>, CalibrationFit, PixelScale) {
        let scale = PixelScale::from_pixel_pitch(0.02).unwrap();
        let cone = ConeModel::from_slope(13.21, -5.117).unwrap();
        let geom = SphereViewGeometry::with_offset(r, c).unwrap();
        let s: Vec<_> = (0..60)
            .map(|i| {
                let e = 40.0 + i as f64;
                DistanceSample::new(
                    e,
                    distance_from_image_sphere(&cone, &scale, &geom, e).unwrap(),
                )
            })
            .collect();
        let fit = CalibrationFit {
            delta_k: 13.21 * 0.01,
            b: -5.117,
            r2: 1.0,
            rmse: 0.0,
            n: 0,
        };
        (s, fit, scale)
    }

    #[test]
    fn recovers_sphere_offset() {
        for c in [0.0, 4.584, 5.531, 6.982] {
            let (s, fit, scale) = sphere_samples(c, 11.25);
            let sf = fit_sphere_offset(&s, &fit, 11.25, &scale).unwrap();
            assert!((sf.c - c).abs() < 0.05, "c {c} -> {}", sf.c);
            assert!(sf.max_error <= 0.05);
        }
    }

    #[test]
    fn zero_offset_reduces_to_plane_plus_sagitta() {
        let (s, fit, scale) = sphere_samples(0.0, 1e6);
        let sf = fit_sphere_offset(&s, &fit, 1e6, &scale).unwrap();
        let plane: Vec<f64> = s.iter().map(|x| fit.predict(x.e1_px)).collect();
        let truth: Vec<f64> = s.iter().map(|x| x.d_r).collect();
        let g = goodness_metrics(&plane, &truth).unwrap();
        assert!(g.max_abs < 1e-6);
        assert!(sf.max_error < 1e-3);
    }

    #[test]
    fn csv_and_report_round_trip() {
        let s = line(0.1496, -6.791, [50.0, 60.5].into_iter());
        let mut buf = Vec::new();
        write_samples_csv(&mut buf, &s).unwrap();
        assert_eq!(
            std::str::from_utf8(&buf).unwrap(),
            "e1_px,d_r_mm\n50.000000,0.689000\n60.500000,2.259800\n"
        );
        for (a, b) in read_samples_csv(buf.as_slice()).unwrap().iter().zip(&s) {
            assert_abs_diff_eq!(a.e1_px, b.e1_px, epsilon = 1e-6);
            assert_abs_diff_eq!(a.d_r, b.d_r, epsilon = 1e-6);
        }
        assert!(read_samples_csv("a,b\n1,2\n".as_bytes()).is_err());

        let fit = fit_plane_model(&s).unwrap();
        let back = CalibrationFit::from_report(&fit.to_report()).unwrap();
        assert_abs_diff_eq!(back.delta_k, fit.delta_k, epsilon = 1e-6);
        let mut res = Vec::new();
        write_residuals_csv(&mut res, &s, &fit).unwrap();
        assert!(std::str::from_utf8(&res)
            .unwrap()
            .starts_with("e1_px,d_r_mm,d_fit_mm,residual_mm\n"));
    }

    proptest! {
        #[test]
        fn intercept_shift(k in 0.05f64..0.3, b in -8.0f64..2.0, shift in -5.0f64..5.0, seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s: Vec<_> = (0..30).map(|_| {
                let e: f64 = rng.random_range(20.0..100.0);
                DistanceSample::new(e, k * e + b + rng.random_range(-0.1..0.1))
            }).collect();
            let shifted: Vec<_> = s.iter().map(|x| DistanceSample::new(x.e1_px, x.d_r + shift)).collect();
            let (a, c) = (fit_plane_model(&s).unwrap(), fit_plane_model(&shifted).unwrap());
            prop_assert!(((c.delta_k - a.delta_k) / a.delta_k).abs() <= 1e-9);
            prop_assert!((c.b - a.b - shift).abs() <= 1e-9 * (1.0 + a.b.abs()));
        }

        #[test]
        fn unit_covariance(scale in 0.1f64..10.0, seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s: Vec<_> = (0..30).map(|_| {
                let e: f64 = rng.random_range(20.0..100.0);
                DistanceSample::new(e, 0.13 * e - 5.0 + rng.random_range(-0.1..0.1))
            }).collect();
            let scaled: Vec<_> = s.iter().map(|x| DistanceSample::new(x.e1_px * scale, x.d_r)).collect();
            let (a, c) = (fit_plane_model(&s).unwrap(), fit_plane_model(&scaled).unwrap());
            prop_assert!(((c.delta_k * scale - a.delta_k) / a.delta_k).abs() <= 1e-9);
            for (x, y) in s.iter().zip(&scaled) {
                prop_assert!((a.predict(x.e1_px) - c.predict(y.e1_px)).abs() <= 1e-9);
            }
        }
    }
}
