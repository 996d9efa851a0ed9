//! Flat key=value experiment configuration.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use super::ExperimentError;
use crate::calibrate::RmseDivisor;
use crate::detect::TrackerConfig;
use crate::kv;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Render,
    Track,
    Calibrate,
    StaticEval,
    DynamicEval,
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "render" => Mode::Render,
            "track" => Mode::Track,
            "calibrate" => Mode::Calibrate,
            "static-eval" => Mode::StaticEval,
            "dynamic-eval" => Mode::DynamicEval,
            _ => return Err(format!("unknown mode {s:?}")),
        })
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Render => "render",
            Mode::Track => "track",
            Mode::Calibrate => "calibrate",
            Mode::StaticEval => "static-eval",
            Mode::DynamicEval => "dynamic-eval",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurfaceKind {
    Plane,
    Sphere,
}

impl FromStr for SurfaceKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "plane" => Ok(SurfaceKind::Plane),
            "sphere" => Ok(SurfaceKind::Sphere),
            _ => Err(format!("expected `plane` or `sphere`, found {s:?}")),
        }
    }
}

impl fmt::Display for SurfaceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SurfaceKind::Plane => "plane",
            SurfaceKind::Sphere => "sphere",
        })
    }
}

/// What `render` produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RenderKind {
    /// Static distance sweep.
    Sweep,
    /// Motion-blurred sequence along a trajectory.
    Sequence,
}

impl FromStr for RenderKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "sweep" => Ok(RenderKind::Sweep),
            "sequence" => Ok(RenderKind::Sequence),
            _ => Err(format!("expected `sweep` or `sequence`, found {s:?}")),
        }
    }
}

impl fmt::Display for RenderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RenderKind::Sweep => "sweep",
            RenderKind::Sequence => "sequence",
        })
    }
}

/// Full experiment description. Units: mm, s, px, degrees.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub surface: SurfaceKind,
    pub seed: Option<u64>,

    pub cone_k: f64,
    pub cone_b: f64,
    pub pitch_mm: f64,
    pub width: usize,
    pub height: usize,
    pub background: u8,
    pub spot_level: u8,
    pub noise_sigma: f64,
    pub salt_pepper: f64,
    pub tilt_deg: f64,

    pub sweep_start_mm: f64,
    pub sweep_end_mm: f64,
    pub sweep_step_mm: f64,
    pub trials: usize,
    pub sphere_radius_mm: f64,
    pub sphere_offsets_mm: Vec<f64>,

    pub tracker: TrackerConfig,
    pub rmse_divisor: RmseDivisor,
    pub max_loss_fraction: f64,
    pub allow_loss: bool,

    pub render_kind: RenderKind,
    pub frame_rate_hz: f64,
    pub exposure_s: f64,
    pub duration_s: f64,
    pub trajectory_rate_hz: f64,
    pub circle_radius_mm: f64,
    pub elevation_deg: f64,
    pub max_speed_mm_s: f64,
    pub start_distance_mm: f64,

    pub frames: Option<PathBuf>,
    pub samples: Option<PathBuf>,
    pub fit: Option<PathBuf>,
    pub trajectory: Option<PathBuf>,
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            mode: Mode::StaticEval,
            surface: SurfaceKind::Plane,
            seed: None,
            cone_k: 13.21,
            cone_b: -5.117,
            pitch_mm: 0.02,
            width: 640,
            height: 480,
            background: crate::synth::DEFAULT_BACKGROUND_LEVEL,
            spot_level: crate::synth::DEFAULT_SPOT_LEVEL,
            noise_sigma: 0.0,
            salt_pepper: 0.0,
            tilt_deg: 0.0,
            sweep_start_mm: 0.0,
            sweep_end_mm: 5.0,
            sweep_step_mm: 0.05,
            trials: 3,
            sphere_radius_mm: crate::geometry::DEFAULT_EYE_RADIUS_MM,
            sphere_offsets_mm: vec![4.584, 5.531, 6.982],
            tracker: TrackerConfig::with_patch_half(100),
            rmse_divisor: RmseDivisor::N,
            max_loss_fraction: 0.1,
            allow_loss: false,
            render_kind: RenderKind::Sweep,
            frame_rate_hz: 10.0,
            exposure_s: 0.05,
            duration_s: 30.0,
            trajectory_rate_hz: 200.0,
            circle_radius_mm: 2.0,
            elevation_deg: 30.0,
            max_speed_mm_s: 3.0,
            start_distance_mm: 2.5,
            frames: None,
            samples: None,
            fit: None,
            trajectory: None,
            out_dir: PathBuf::from("out"),
        }
    }
}

fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| x.parse::<f64>().map_err(|e| format!("{x:?}: {e}")))
        .collect()
}

fn parse_bool(s: &str) -> Result<bool, String> {
    match s {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(format!("expected true/false, found {s:?}")),
    }
}

fn opt_path(p: &Option<PathBuf>) -> String {
    p.as_ref()
        .map(|p| p.display().to_string())
        .unwrap_or_default()
}

impl ExperimentConfig {
    /// Parse a config file body on top of the defaults.
    pub fn from_text(text: &str) -> Result<Self, ExperimentError> {
        let mut cfg = Self::default();
        for (k, v) in kv::parse(text)? {
            cfg.set(&k, &v)?;
        }
        Ok(cfg)
    }

    /// Set one key from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ExperimentError> {
        fn p<T: FromStr>(key: &str, value: &str) -> Result<T, ExperimentError>
        where
            T::Err: fmt::Display,
        {
            value.parse().map_err(|e: T::Err| {
                ExperimentError::Config(format!("key `{key}`: cannot parse {value:?}: {e}"))
            })
        }
        fn w<T>(key: &str, r: Result<T, String>) -> Result<T, ExperimentError> {
            r.map_err(|e| ExperimentError::Config(format!("key `{key}`: {e}")))
        }
        let path = |v: &str| (!v.is_empty()).then(|| PathBuf::from(v));
        let t = &mut self.tracker;
        match key {
            "mode" => self.mode = w(key, value.parse())?,
            "surface" => self.surface = w(key, value.parse())?,
            "seed" => {
                self.seed = if value.is_empty() {
                    None
                } else {
                    Some(p(key, value)?)
                }
            }
            "cone_k" => self.cone_k = p(key, value)?,
            "cone_b_mm" => self.cone_b = p(key, value)?,
            "pitch_mm" => self.pitch_mm = p(key, value)?,
            "width_px" => self.width = p(key, value)?,
            "height_px" => self.height = p(key, value)?,
            "background_level" => self.background = p(key, value)?,
            "spot_level" => self.spot_level = p(key, value)?,
            "noise_sigma" => self.noise_sigma = p(key, value)?,
            "salt_pepper" => self.salt_pepper = p(key, value)?,
            "tilt_deg" => self.tilt_deg = p(key, value)?,
            "sweep_start_mm" => self.sweep_start_mm = p(key, value)?,
            "sweep_end_mm" => self.sweep_end_mm = p(key, value)?,
            "sweep_step_mm" => self.sweep_step_mm = p(key, value)?,
            "trials" => self.trials = p(key, value)?,
            "sphere_radius_mm" => self.sphere_radius_mm = p(key, value)?,
            "sphere_offsets_mm" => self.sphere_offsets_mm = w(key, parse_list(value))?,
            "patch_half_px" => t.patch_half = p(key, value)?,
            "threshold" => t.threshold = p(key, value)?,
            "min_component_px" => t.min_component = p(key, value)?,
            "max_minor_axis_px" => t.max_minor_axis = p(key, value)?,
            "median_kernel_px" => t.median_kernel = p(key, value)?,
            "gaussian_sigma_px" => t.gaussian_sigma = p(key, value)?,
            "rmse_divisor" => self.rmse_divisor = w(key, value.parse())?,
            "max_loss_fraction" => self.max_loss_fraction = p(key, value)?,
            "allow_loss" => self.allow_loss = w(key, parse_bool(value))?,
            "render_kind" => self.render_kind = w(key, value.parse())?,
            "frame_rate_hz" => self.frame_rate_hz = p(key, value)?,
            "exposure_s" => self.exposure_s = p(key, value)?,
            "duration_s" => self.duration_s = p(key, value)?,
            "trajectory_rate_hz" => self.trajectory_rate_hz = p(key, value)?,
            "circle_radius_mm" => self.circle_radius_mm = p(key, value)?,
            "elevation_deg" => self.elevation_deg = p(key, value)?,
            "max_speed_mm_s" => self.max_speed_mm_s = p(key, value)?,
            "start_distance_mm" => self.start_distance_mm = p(key, value)?,
            "frames" => self.frames = path(value),
            "samples" => self.samples = path(value),
            "fit" => self.fit = path(value),
            "trajectory" => self.trajectory = path(value),
            "out_dir" => self.out_dir = PathBuf::from(value),
            _ => return Err(ExperimentError::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// All keys in a fixed order, as accepted by [`ExperimentConfig::set`].
    pub fn to_pairs(&self) -> Vec<(&'static str, String)> {
        let t = &self.tracker;
        let list = self
            .sphere_offsets_mm
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join(",");
        vec![
            ("mode", self.mode.to_string()),
            ("surface", self.surface.to_string()),
            ("seed", self.seed.map(|s| s.to_string()).unwrap_or_default()),
            ("cone_k", self.cone_k.to_string()),
            ("cone_b_mm", self.cone_b.to_string()),
            ("pitch_mm", self.pitch_mm.to_string()),
            ("width_px", self.width.to_string()),
            ("height_px", self.height.to_string()),
            ("background_level", self.background.to_string()),
            ("spot_level", self.spot_level.to_string()),
            ("noise_sigma", self.noise_sigma.to_string()),
            ("salt_pepper", self.salt_pepper.to_string()),
            ("tilt_deg", self.tilt_deg.to_string()),
            ("sweep_start_mm", self.sweep_start_mm.to_string()),
            ("sweep_end_mm", self.sweep_end_mm.to_string()),
            ("sweep_step_mm", self.sweep_step_mm.to_string()),
            ("trials", self.trials.to_string()),
            ("sphere_radius_mm", self.sphere_radius_mm.to_string()),
            ("sphere_offsets_mm", list),
            ("patch_half_px", t.patch_half.to_string()),
            ("threshold", t.threshold.to_string()),
            ("min_component_px", t.min_component.to_string()),
            ("max_minor_axis_px", t.max_minor_axis.to_string()),
            ("median_kernel_px", t.median_kernel.to_string()),
            ("gaussian_sigma_px", t.gaussian_sigma.to_string()),
            ("rmse_divisor", self.rmse_divisor.to_string()),
            ("max_loss_fraction", self.max_loss_fraction.to_string()),
            ("allow_loss", self.allow_loss.to_string()),
            ("render_kind", self.render_kind.to_string()),
            ("frame_rate_hz", self.frame_rate_hz.to_string()),
            ("exposure_s", self.exposure_s.to_string()),
            ("duration_s", self.duration_s.to_string()),
            ("trajectory_rate_hz", self.trajectory_rate_hz.to_string()),
            ("circle_radius_mm", self.circle_radius_mm.to_string()),
            ("elevation_deg", self.elevation_deg.to_string()),
            ("max_speed_mm_s", self.max_speed_mm_s.to_string()),
            ("start_distance_mm", self.start_distance_mm.to_string()),
            ("frames", opt_path(&self.frames)),
            ("samples", opt_path(&self.samples)),
            ("fit", opt_path(&self.fit)),
            ("trajectory", opt_path(&self.trajectory)),
        ]
    }

    pub fn to_text(&self) -> String {
        kv::format(&self.to_pairs())
    }

    pub fn is_stochastic(&self) -> bool {
        self.noise_sigma > 0.0 || self.salt_pepper > 0.0
    }

    /// Seed used for noise; zero for noiseless configs without one.
    pub fn noise_seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn sweep_distances(&self) -> Vec<f64> {
        let n = ((self.sweep_end_mm - self.sweep_start_mm) / self.sweep_step_mm + 1e-9).floor()
            as usize;
        (0..=n)
            .map(|i| self.sweep_start_mm + i as f64 * self.sweep_step_mm)
            .collect()
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::Config(m));
        if self.is_stochastic() && self.seed.is_none() {
            return bad(
                "a seed is required when noise is enabled (set `seed` or pass --seed)".into(),
            );
        }
        if !(self.cone_k > 0.0) {
            return bad(format!("cone_k {} must be positive", self.cone_k));
        }
        if !(self.pitch_mm > 0.0) {
            return bad(format!("pitch_mm {} must be positive", self.pitch_mm));
        }
        if self.width < 16 || self.height < 16 {
            return bad(format!("image {}x{} is too small", self.width, self.height));
        }
        if !(self.sweep_step_mm > 0.0 && self.sweep_end_mm >= self.sweep_start_mm) {
            return bad(format!(
                "sweep {}..{} step {} is empty",
                self.sweep_start_mm, self.sweep_end_mm, self.sweep_step_mm
            ));
        }
        if self.sweep_distances().len() < 2 {
            return bad("the distance sweep needs at least two distances".into());
        }
        if self.trials == 0 {
            return bad("trials must be >= 1".into());
        }
        if !(0.0..=1.0).contains(&self.max_loss_fraction) {
            return bad(format!(
                "max_loss_fraction {} outside [0, 1]",
                self.max_loss_fraction
            ));
        }
        if self.surface == SurfaceKind::Sphere && self.sphere_offsets_mm.is_empty() {
            return bad("sphere_offsets_mm is empty".into());
        }
        self.tracker.validate()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let mut cfg = ExperimentConfig {
            seed: Some(42),
            sphere_offsets_mm: vec![1.5, 2.0],
            fit: Some(PathBuf::from("fit.txt")),
            ..ExperimentConfig::default()
        };
        cfg.tracker.patch_half = 60;
        let back = ExperimentConfig::from_text(&cfg.to_text()).unwrap();
        assert_eq!(
            back,
            ExperimentConfig {
                out_dir: back.out_dir.clone(),
                ..cfg.clone()
            }
        );
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            ExperimentConfig::from_text("nonsense=1"),
            Err(ExperimentError::Config(_))
        ));
        assert!(matches!(
            ExperimentConfig::from_text("trials=x"),
            Err(ExperimentError::Config(_))
        ));
        let cfg = ExperimentConfig {
            noise_sigma: 2.0,
            ..ExperimentConfig::default()
        };
        assert!(cfg.validate().is_err());
        assert!(ExperimentConfig {
            seed: Some(1),
            ..cfg
        }
        .validate()
        .is_ok());
    }

    #[test]
    fn sweep_grid() {
        let d = ExperimentConfig::default().sweep_distances();
        assert_eq!(d.len(), 101);
        assert!((d[100] - 5.0).abs() < 1e-12);
    }
}
