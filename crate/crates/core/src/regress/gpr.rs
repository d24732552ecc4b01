use serde::{Deserialize, Serialize};

use super::{similarity_vector, GazeEstimator};
use crate::error::{Error, Result};
use crate::geometry::{CalibrationSet, EstimatorKind, GazeEstimate, ScreenPoint};
use crate::kernels::MeasureSpec;
use crate::linalg::{Lu, SquareMatrix};

/// Diagonal loading for the calibration covariance matrix.
///
/// The jitter is `relative * mean|C|` (or `relative` alone when `C` is all
/// zeros). When the factorization hits a singular pivot the relative factor
/// is raised tenfold, up to `max_relative`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JitterPolicy {
    pub relative: f64,
    pub max_relative: f64,
}

impl Default for JitterPolicy {
    fn default() -> Self {
        Self {
            relative: 1e-8,
            max_relative: 1e-2,
        }
    }
}

impl JitterPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.relative > 0.0) || !(self.max_relative >= self.relative) {
            return Err(Error::arg("jitter must satisfy 0 < relative <= max_relative"));
        }
        Ok(())
    }
}

/// Gaussian-process style regressor: `e = k^T (C + jitter I)^-1 U`.
///
/// `C` holds the chosen measure between every pair of calibration means and
/// is generally not positive definite when the measure is a distance.
#[derive(Debug, Clone)]
pub struct GprModel {
    calibration: CalibrationSet,
    measure: MeasureSpec,
    policy: JitterPolicy,
    jitter: f64,
    lu: Lu,
    // (C + jitter I)^-T U, one column per screen axis.
    weights_x: Vec<f64>,
    weights_y: Vec<f64>,
}

impl GprModel {
    pub fn new(calibration: CalibrationSet, measure: MeasureSpec) -> Result<Self> {
        Self::with_jitter(calibration, measure, JitterPolicy::default())
    }

    pub fn with_jitter(
        calibration: CalibrationSet,
        measure: MeasureSpec,
        policy: JitterPolicy,
    ) -> Result<Self> {
        policy.validate()?;
        measure.validate(calibration.channel_count())?;
        if calibration.is_empty() {
            return Err(Error::arg("calibration set is empty"));
        }
        let (lu, jitter) = factorize(&calibration, &measure, &policy)?;
        let ux: Vec<f64> = calibration.targets().map(|t| t.x).collect();
        let uy: Vec<f64> = calibration.targets().map(|t| t.y).collect();
        let weights_x = lu.solve_transpose(&ux)?;
        let weights_y = lu.solve_transpose(&uy)?;
        Ok(Self {
            calibration,
            measure,
            policy,
            jitter,
            lu,
            weights_x,
            weights_y,
        })
    }

    pub fn calibration(&self) -> &CalibrationSet {
        &self.calibration
    }

    pub fn measure(&self) -> &MeasureSpec {
        &self.measure
    }

    /// Absolute jitter that ended up on the diagonal.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// Solves `(C + jitter I) z = k` for an explicit similarity vector.
    pub fn solve(&self, k: &[f64]) -> Result<Vec<f64>> {
        self.lu.solve(k)
    }

    /// Appends a calibration entry and refactorizes.
    pub fn augment(&mut self, frame: &[f64], true_target: ScreenPoint) -> Result<()> {
        let grown = super::augment(&self.calibration, frame, true_target)?;
        *self = Self::with_jitter(grown, self.measure.clone(), self.policy)?;
        Ok(())
    }

    pub fn into_calibration(self) -> CalibrationSet {
        self.calibration
    }
}

fn factorize(
    calibration: &CalibrationSet,
    measure: &MeasureSpec,
    policy: &JitterPolicy,
) -> Result<(Lu, f64)> {
    let means: Vec<&[f64]> = calibration.means().collect();
    let n = means.len();
    let mut c = SquareMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            c.set(i, j, measure.eval(means[i], means[j])?);
        }
    }
    let scale = match c.mean_abs() {
        s if s > 0.0 && s.is_finite() => s,
        _ => 1.0,
    };
    let mut relative = policy.relative;
    loop {
        let jitter = relative * scale;
        let mut a = c.clone();
        a.add_diagonal(jitter);
        match Lu::factor(&a) {
            Ok(lu) => return Ok((lu, jitter)),
            Err(e) => {
                if relative * 10.0 > policy.max_relative * (1.0 + 1e-9) {
                    return Err(Error::Estimation(format!(
                        "covariance matrix singular after jitter escalation to {relative:e}: {e}"
                    )));
                }
                log::debug!("gpr factorization failed at jitter {relative:e}, escalating");
                relative *= 10.0;
            }
        }
    }
}

impl GazeEstimator for GprModel {
    fn kind(&self) -> EstimatorKind {
        EstimatorKind::Gpr
    }

    fn channel_count(&self) -> usize {
        self.calibration.channel_count()
    }

    fn estimate_point(&self, frame: &[f64]) -> Result<ScreenPoint> {
        let k = similarity_vector(frame, &self.calibration, &self.measure)?;
        // k^T (C + jI)^-1 U  ==  k . ((C + jI)^-T U)
        let x: f64 = k.iter().zip(&self.weights_x).map(|(a, b)| a * b).sum();
        let y: f64 = k.iter().zip(&self.weights_y).map(|(a, b)| a * b).sum();
        if !(x.is_finite() && y.is_finite()) {
            return Err(Error::Estimation("non-finite gpr estimate".into()));
        }
        Ok(ScreenPoint::new(x, y))
    }
}

pub fn gpr_estimate(model: &GprModel, frame: &[f64], timestamp_us: u64) -> Result<GazeEstimate> {
    model.estimate(timestamp_us, frame)
}
