use super::GazeEstimator;
use crate::error::{Error, Result};
use crate::geometry::{CalibrationSet, EstimatorKind, GazeEstimate, ScreenPoint};
use crate::kernels::{rbf, rbf_squared};

/// RBF-weighted regressor: `e = k^T U`, optionally divided by `sum(k)`.
#[derive(Debug, Clone)]
pub struct SvrModel {
    calibration: CalibrationSet,
    sigma: f64,
    normalize: bool,
    squared: bool,
}

impl SvrModel {
    /// Normalized weights, plain-norm RBF.
    pub fn new(calibration: CalibrationSet, sigma: f64) -> Result<Self> {
        Self::with_options(calibration, sigma, true, false)
    }

    pub fn with_options(
        calibration: CalibrationSet,
        sigma: f64,
        normalize: bool,
        squared: bool,
    ) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::arg(format!("svr sigma {sigma} must be > 0")));
        }
        if calibration.is_empty() {
            return Err(Error::arg("calibration set is empty"));
        }
        Ok(Self {
            calibration,
            sigma,
            normalize,
            squared,
        })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn normalize(&self) -> bool {
        self.normalize
    }

    pub fn calibration(&self) -> &CalibrationSet {
        &self.calibration
    }

    pub fn augment(&mut self, frame: &[f64], true_target: ScreenPoint) -> Result<()> {
        self.calibration = super::augment(&self.calibration, frame, true_target)?;
        Ok(())
    }

    fn kernel(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        if self.squared {
            rbf_squared(a, b, self.sigma)
        } else {
            rbf(a, b, self.sigma)
        }
    }
}

impl GazeEstimator for SvrModel {
    fn kind(&self) -> EstimatorKind {
        EstimatorKind::Svr
    }

    fn channel_count(&self) -> usize {
        self.calibration.channel_count()
    }

    fn estimate_point(&self, frame: &[f64]) -> Result<ScreenPoint> {
        Error::check_dim(self.calibration.channel_count(), frame.len())?;
        let (mut sx, mut sy, mut sk) = (0.0, 0.0, 0.0);
        for e in self.calibration.entries() {
            let k = self.kernel(frame, &e.mean)?;
            sx += k * e.target.x;
            sy += k * e.target.y;
            sk += k;
        }
        if !self.normalize {
            return Ok(ScreenPoint::new(sx, sy));
        }
        if !(sk > f64::MIN_POSITIVE) {
            return Err(Error::Estimation(format!(
                "rbf weights vanish (sum {sk:e}) at sigma {}",
                self.sigma
            )));
        }
        Ok(ScreenPoint::new(sx / sk, sy / sk))
    }
}

pub fn svr_estimate(model: &SvrModel, frame: &[f64], timestamp_us: u64) -> Result<GazeEstimate> {
    model.estimate(timestamp_us, frame)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set() -> CalibrationSet {
        let mut set = CalibrationSet::new(2);
        set.push(vec![0.0, 0.0], ScreenPoint::new(100.0, 100.0)).unwrap();
        set.push(vec![1.0, 0.0], ScreenPoint::new(300.0, 100.0)).unwrap();
        set.push(vec![0.0, 1.0], ScreenPoint::new(100.0, 300.0)).unwrap();
        set
    }

    #[test]
    fn dominant_weight_limit() {
        // Off-target distance is 1, exp(-1 / (2 s^2)) < 1e-12 for s = 0.1.
        let model = SvrModel::new(set(), 0.1).unwrap();
        let est = model.estimate_point(&[1.0, 0.0]).unwrap();
        assert!(est.distance(&ScreenPoint::new(300.0, 100.0)) < 1e-6);
    }

    #[test]
    fn equidistant_frame_gives_midpoint() {
        let mut two = CalibrationSet::new(2);
        two.push(vec![0.0, 0.0], ScreenPoint::new(100.0, 40.0)).unwrap();
        two.push(vec![1.0, 1.0], ScreenPoint::new(300.0, 80.0)).unwrap();
        let model = SvrModel::new(two, 0.4).unwrap();
        let est = model.estimate_point(&[1.0, 0.0]).unwrap();
        assert!(est.distance(&ScreenPoint::new(200.0, 60.0)) < 1e-9);
    }

    #[test]
    fn unnormalized_wide_sigma_sums_targets() {
        let model = SvrModel::with_options(set(), 1e8, false, false).unwrap();
        let est = model.estimate_point(&[0.3, 0.3]).unwrap();
        assert!(est.distance(&ScreenPoint::new(500.0, 500.0)) < 1e-9);
    }

    #[test]
    fn vanishing_weights_fail_when_normalizing() {
        let model = SvrModel::new(set(), 1e-3).unwrap();
        assert!(matches!(
            model.estimate_point(&[50.0, 50.0]),
            Err(Error::Estimation(_))
        ));
        assert!(SvrModel::new(set(), -1.0).is_err());
    }

    proptest::proptest! {
        #[test]
        fn normalized_output_in_bounding_box(
            x in -1.0..2.0f64, y in -1.0..2.0f64, sigma in 0.2..5.0f64,
        ) {
            let model = SvrModel::new(set(), sigma).unwrap();
            let e = model.estimate_point(&[x, y]).unwrap();
            // Convex hull is the triangle (100,100), (300,100), (100,300).
            proptest::prop_assert!(e.x >= 100.0 - 1e-9 && e.y >= 100.0 - 1e-9);
            proptest::prop_assert!(e.x + e.y <= 400.0 + 1e-9);
        }
    }
}
