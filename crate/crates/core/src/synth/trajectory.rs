use std::io::{Read, Write};

use nalgebra::Vector3;

use super::SynthError;
use crate::geometry::ConePose;

pub const TRAJECTORY_HEADER: &str = "t_s,x_mm,y_mm,z_mm,ax,ay,az";

/// Timestamped tip pose.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub tip: Vector3<f64>,
    pub axis: Vector3<f64>,
}

pub(super) fn validate(samples: &[TrajectorySample]) -> Result<(), SynthError> {
    if samples.is_empty() {
        return Err(SynthError::Trajectory("trajectory is empty".into()));
    }
    for (i, w) in samples.windows(2).enumerate() {
        if !(w[1].t > w[0].t) {
            return Err(SynthError::Trajectory(format!(
                "time is not strictly increasing at sample {} ({} -> {})",
                i + 1,
                w[0].t,
                w[1].t
            )));
        }
    }
    Ok(())
}

/// Pose at time `t`: linear in position, normalised-linear in axis. Times
/// outside the trajectory clamp to its ends.
pub fn interpolate_pose(samples: &[TrajectorySample], t: f64) -> Result<ConePose, SynthError> {
    let first = samples
        .first()
        .ok_or_else(|| SynthError::Trajectory("trajectory is empty".into()))?;
    let last = samples[samples.len() - 1];
    let (tip, axis) = if t <= first.t {
        (first.tip, first.axis)
    } else if t >= last.t {
        (last.tip, last.axis)
    } else {
        let hi = samples.partition_point(|s| s.t <= t);
        let (a, b) = (samples[hi - 1], samples[hi]);
        let u = (t - a.t) / (b.t - a.t);
        (a.tip.lerp(&b.tip, u), a.axis.lerp(&b.axis, u))
    };
    Ok(ConePose::new(tip, axis)?)
}

fn sample_times(duration: f64, rate: f64) -> impl Iterator<Item = f64> {
    let n = (duration * rate).round() as usize;
    (0..=n).map(move |i| i as f64 / rate)
}

/// Motionless tip for `duration` seconds sampled at `rate` Hz.
pub fn stationary(pose: &ConePose, duration: f64, rate: f64) -> Vec<TrajectorySample> {
    sample_times(duration, rate)
        .map(|t| TrajectorySample {
            t,
            tip: pose.tip,
            axis: pose.axis,
        })
        .collect()
}

/// Constant velocity `velocity` (mm/s) from `pose`.
pub fn straight_line(
    pose: &ConePose,
    velocity: Vector3<f64>,
    duration: f64,
    rate: f64,
) -> Vec<TrajectorySample> {
    sample_times(duration, rate)
        .map(|t| TrajectorySample {
            t,
            tip: pose.tip + velocity * t,
            axis: pose.axis,
        })
        .collect()
}

/// Tip on a circle of radius `radius` through the start pose, with speed
/// ramping linearly from 0 to `max_speed` over `duration`.
///
/// The circle spans `lateral` and the direction obtained by tilting the
/// second in-plane direction by `elevation` towards the cone axis, so the
/// tip-to-surface distance oscillates by `±radius·sin(elevation)`.
pub fn speed_ramp_circle(
    pose: &ConePose,
    lateral: Vector3<f64>,
    radius: f64,
    elevation: f64,
    max_speed: f64,
    duration: f64,
    rate: f64,
) -> Vec<TrajectorySample> {
    let axis = pose.axis;
    let e_a = (lateral - axis * lateral.dot(&axis)).normalize();
    let side = axis.cross(&e_a);
    let e_b = side * elevation.cos() + axis * elevation.sin();
    sample_times(duration, rate)
        .map(|t| {
            let phi = max_speed * t * t / (2.0 * duration * radius);
            let offset = e_a * (phi.cos() - 1.0) * radius + e_b * phi.sin() * radius;
            TrajectorySample {
                t,
                tip: pose.tip + offset,
                axis,
            }
        })
        .collect()
}

pub fn write_trajectory_csv<W: Write>(
    out: W,
    samples: &[TrajectorySample],
) -> Result<(), SynthError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRAJECTORY_HEADER.split(','))?;
    for s in samples {
        w.write_record([
            format!("{:.6}", s.t),
            format!("{:.9}", s.tip.x),
            format!("{:.9}", s.tip.y),
            format!("{:.9}", s.tip.z),
            format!("{:.9}", s.axis.x),
            format!("{:.9}", s.axis.y),
            format!("{:.9}", s.axis.z),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trajectory_csv<R: Read>(input: R) -> Result<Vec<TrajectorySample>, SynthError> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header.join(",") != TRAJECTORY_HEADER {
        return Err(SynthError::Trajectory(format!(
            "expected header `{TRAJECTORY_HEADER}`, found `{}`",
            header.join(",")
        )));
    }
    let mut out = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let v: Vec<f64> = rec
            .iter()
            .map(|f| f.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| SynthError::Trajectory(format!("row {}: {e}", line + 1)))?;
        if v.len() != 7 {
            return Err(SynthError::Trajectory(format!(
                "row {}: expected 7 fields",
                line + 1
            )));
        }
        out.push(TrajectorySample {
            t: v[0],
            tip: Vector3::new(v[1], v[2], v[3]),
            axis: Vector3::new(v[4], v[5], v[6]),
        });
    }
    validate(&out)?;
    Ok(out)
}
