//! LED-ring gaze estimation.
//!
//! A ring of LEDs around each HMD lens takes turns sensing infrared light
//! reflected off the eye. Each full cycle yields a capture vector with one
//! reading per sensing LED. A short dwell calibration maps capture vectors to
//! screen positions, and a kernel regressor (GPR over a distance measure, or
//! an RBF-weighted SVR baseline) estimates gaze for new captures. The
//! calibration grows online whenever the user corrects a failed selection.
//!
//! The crate ships a deterministic simulator standing in for the hardware,
//! so the whole pipeline can be exercised end to end:
//!
//! - [`geometry`]: frames, screen points, display geometry, calibration sets
//! - [`kernels`]: Minkowski, RBF, cosine, Manhattan and Canberra measures
//! - [`regress`]: GPR and SVR estimators, sigma grid search, augmentation
//! - [`calib`]: dwell scheduling, aggregation and rejection
//! - [`sigproc`]: capture schedules, exposure control, IIR smoothing
//! - [`sim`]: LED layouts, synthetic subjects, gaze scripts
//! - [`wire`]: serial framing for capture vectors
//! - [`eval`]: accuracy reports, sweeps, estimator comparison, selection tasks

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calib;
pub mod commands;
pub mod config;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod kernels;
pub mod linalg;
pub mod log;
pub mod regress;
pub mod session;
pub mod sigproc;
pub mod sim;
pub mod wire;

pub use error::{Error, Result};
pub use geometry::{
    angular_error, CalibrationEntry, CalibrationSet, DisplayGeometry, EstimatorKind, GazeEstimate, ScreenPoint,
    SensorFrame,
};
pub use kernels::MeasureSpec;
pub use regress::{GazeEstimator, GprModel, SvrModel};
