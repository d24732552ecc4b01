//! Gaze regression from a calibration set.
//!
//! Both estimators start from the similarity vector `k`, one comparison of
//! the incoming sensor vector against each stored calibration mean. The GPR
//! estimator then solves against the calibration covariance matrix; the SVR
//! estimator uses `k` directly as interpolation weights.

mod gpr;
mod search;
mod svr;

pub use gpr::{gpr_estimate, GprModel, JitterPolicy};
pub use search::{grid_search_sigma, grid_search_sigma_loo, log_grid, SigmaSearch, ValidationMethod};
pub use svr::{svr_estimate, SvrModel};

use crate::error::{Error, Result};
use crate::geometry::{CalibrationSet, EstimatorKind, GazeEstimate, ScreenPoint};
use crate::kernels::MeasureSpec;

/// Anything that maps a normalized sensor vector to a screen position.
pub trait GazeEstimator: Send + Sync {
    fn kind(&self) -> EstimatorKind;

    fn channel_count(&self) -> usize;

    fn estimate_point(&self, frame: &[f64]) -> Result<ScreenPoint>;

    fn estimate(&self, timestamp_us: u64, frame: &[f64]) -> Result<GazeEstimate> {
        Ok(GazeEstimate {
            timestamp_us,
            position: self.estimate_point(frame)?,
            method: self.kind(),
        })
    }
}

/// `k_p = measure(frame, mean_p)` for every calibration entry, in order.
pub fn similarity_vector(
    frame: &[f64],
    calibration: &CalibrationSet,
    measure: &MeasureSpec,
) -> Result<Vec<f64>> {
    Error::check_dim(calibration.channel_count(), frame.len())?;
    calibration
        .means()
        .map(|mean| measure.eval(frame, mean))
        .collect()
}

/// Returns `calibration` with `(frame, true_target)` appended.
pub fn augment(
    calibration: &CalibrationSet,
    frame: &[f64],
    true_target: ScreenPoint,
) -> Result<CalibrationSet> {
    let mut out = calibration.clone();
    out.push(frame.to_vec(), true_target)?;
    Ok(out)
}

/// A trained estimator of either kind that can keep learning.
#[derive(Debug, Clone)]
pub enum Model {
    Gpr(GprModel),
    Svr(SvrModel),
}

impl Model {
    pub fn calibration(&self) -> &CalibrationSet {
        match self {
            Model::Gpr(m) => m.calibration(),
            Model::Svr(m) => m.calibration(),
        }
    }

    pub fn augment(&mut self, frame: &[f64], true_target: ScreenPoint) -> Result<()> {
        match self {
            Model::Gpr(m) => m.augment(frame, true_target),
            Model::Svr(m) => m.augment(frame, true_target),
        }
    }
}

impl GazeEstimator for Model {
    fn kind(&self) -> EstimatorKind {
        match self {
            Model::Gpr(m) => m.kind(),
            Model::Svr(m) => m.kind(),
        }
    }

    fn channel_count(&self) -> usize {
        self.calibration().channel_count()
    }

    fn estimate_point(&self, frame: &[f64]) -> Result<ScreenPoint> {
        match self {
            Model::Gpr(m) => m.estimate_point(frame),
            Model::Svr(m) => m.estimate_point(frame),
        }
    }
}

/// Feeds an estimator trained on a subset of channels from full-width
/// sensor vectors.
pub struct ChannelSubset<E> {
    pub inner: E,
    pub channels: Vec<usize>,
    pub full_width: usize,
}

impl<E: GazeEstimator> GazeEstimator for ChannelSubset<E> {
    fn kind(&self) -> EstimatorKind {
        self.inner.kind()
    }

    fn channel_count(&self) -> usize {
        self.full_width
    }

    fn estimate_point(&self, frame: &[f64]) -> Result<ScreenPoint> {
        Error::check_dim(self.full_width, frame.len())?;
        let picked: Vec<f64> = self.channels.iter().map(|&c| frame[c]).collect();
        self.inner.estimate_point(&picked)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_point_set() -> CalibrationSet {
        let mut set = CalibrationSet::new(2);
        set.push(vec![0.0, 0.0], ScreenPoint::new(10.0, 10.0)).unwrap();
        set.push(vec![3.0, 4.0], ScreenPoint::new(90.0, 10.0)).unwrap();
        set
    }

    #[test]
    fn similarity_vector_hand_values() {
        let k = similarity_vector(&[1.0, 1.0], &two_point_set(), &MeasureSpec::euclidean()).unwrap();
        assert!((k[0] - 2f64.sqrt()).abs() < 1e-15);
        assert!((k[1] - 13f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn similarity_vector_zero_at_matching_entry() {
        let mut set = CalibrationSet::new(3);
        for p in 0..5 {
            let v = p as f64;
            set.push(vec![v, v * v, 1.0 - v], ScreenPoint::new(v, v)).unwrap();
        }
        let frame = set.entries()[3].mean.clone();
        let k = similarity_vector(&frame, &set, &MeasureSpec::euclidean()).unwrap();
        assert_eq!(k.len(), 5);
        assert_eq!(k[3], 0.0);
        assert!(k.iter().enumerate().all(|(i, &v)| i == 3 || v > 0.0));
    }

    #[test]
    fn similarity_vector_single_entry_and_mismatch() {
        let mut set = CalibrationSet::new(2);
        set.push(vec![0.5, 0.5], ScreenPoint::new(1.0, 2.0)).unwrap();
        let k = similarity_vector(&[0.0, 0.0], &set, &MeasureSpec::Manhattan).unwrap();
        assert_eq!(k, vec![1.0]);
        assert!(matches!(
            similarity_vector(&[0.0], &set, &MeasureSpec::Manhattan),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn augment_appends_one_entry() {
        let mut set = CalibrationSet::new(2);
        for i in 0..16 {
            set.push(vec![i as f64, 0.0], ScreenPoint::new(i as f64, 0.0)).unwrap();
        }
        let grown = augment(&set, &[0.1, 0.2], ScreenPoint::new(5.0, 5.0)).unwrap();
        assert_eq!(grown.len(), 17);
        assert_eq!(set.len(), 16);
        let mut many = set.clone();
        for i in 0..66 {
            many = augment(&many, &[0.01 * i as f64, 1.0], ScreenPoint::new(1.0, 1.0)).unwrap();
        }
        assert_eq!(many.len(), 82);
        assert!(augment(&set, &[0.1], ScreenPoint::default()).is_err());
    }
}
