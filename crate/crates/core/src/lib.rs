//! Tip-to-surface distance estimation from the projection of a fiber spotlight
//! in a single microscope image.
//!
//! The crate is organised bottom-up:
//!
//! 1. [`geometry`]: closed-form spot-size/distance relations for planes and
//!    spheres, plus an exact ray-cast oracle used to validate them.
//! 2. [`conic`]: direct least-squares ellipse fitting and conic algebra.
//! 3. [`synth`]: a synthetic microscope renderer producing labelled frames,
//!    including sensor noise and sub-exposure motion blur.
//! 4. [`detect`]: spot tracking: patch cropping, filtering, thresholding,
//!    connected components and ellipse fitting.
//! 5. [`calibrate`]: least-squares fitting of the image-to-distance model.
//! 6. [`estimate`]: runtime estimation and speed/error analysis.
//! 7. [`experiment`]: reproducible static and dynamic experiments driven by a
//!    flat key=value configuration.
//!
//! Data-parallel loops (frame rendering, oracle sweeps) run on rayon when the
//! `parallel` feature is enabled and sequentially otherwise; see [`par`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibrate;
pub mod conic;
pub mod detect;
pub mod estimate;
pub mod experiment;
pub mod geometry;
pub mod image;
pub mod kv;
pub mod par;
pub mod synth;

pub use calibrate::{CalibrationFit, DistanceSample, SphereFit};
pub use detect::{EllipseObservation, TrackerConfig, TrackerState};
pub use estimate::EstimationRecord;
pub use geometry::{ConeModel, MetricEllipse, PixelScale, SphereViewGeometry};
pub use synth::{SceneSpec, TrajectorySample};
