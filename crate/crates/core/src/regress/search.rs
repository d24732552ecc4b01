use serde::{Deserialize, Serialize};

use super::{GazeEstimator, SvrModel};
use crate::error::{Error, Result};
use crate::geometry::{CalibrationSet, ScreenPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValidationMethod {
    HeldOut,
    LeaveOneOut,
}

/// Outcome of a sigma grid search: the winner plus the mean pixel error of
/// every candidate (infinite where the estimator failed).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaSearch {
    pub sigma: f64,
    pub method: ValidationMethod,
    pub candidates: Vec<(f64, f64)>,
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::arg("sigma grid is empty"));
    }
    if grid.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
        return Err(Error::arg("sigma grid values must be positive"));
    }
    Ok(())
}

// Lowest error wins; equal errors go to the smaller sigma.
fn pick(candidates: &[(f64, f64)]) -> f64 {
    candidates
        .iter()
        .copied()
        .reduce(|best, cur| {
            if cur.1 < best.1 || (cur.1 == best.1 && cur.0 < best.0) {
                cur
            } else {
                best
            }
        })
        .map(|(s, _)| s)
        .expect("grid checked non-empty")
}

/// Picks the sigma whose normalized SVR estimator has the lowest mean error
/// over `validation`. Mean pixel error ranks candidates identically to mean
/// angular error under a flat pixel-to-degree scale.
pub fn grid_search_sigma(
    calibration: &CalibrationSet,
    validation: &[(Vec<f64>, ScreenPoint)],
    grid: &[f64],
) -> Result<SigmaSearch> {
    check_grid(grid)?;
    if validation.is_empty() {
        return Err(Error::arg("validation set is empty"));
    }
    for (frame, _) in validation {
        Error::check_dim(calibration.channel_count(), frame.len())?;
    }
    let mut candidates = Vec::with_capacity(grid.len());
    for &sigma in grid {
        let model = SvrModel::new(calibration.clone(), sigma)?;
        let mut total = 0.0;
        for (frame, target) in validation {
            total += match model.estimate_point(frame) {
                Ok(e) => e.distance(target),
                Err(Error::Estimation(_)) => f64::INFINITY,
                Err(e) => return Err(e),
            };
        }
        candidates.push((sigma, total / validation.len() as f64));
    }
    Ok(SigmaSearch {
        sigma: pick(&candidates),
        method: ValidationMethod::HeldOut,
        candidates,
    })
}

/// Leave-one-out variant: each calibration entry is predicted from the
/// others. Needs at least two entries.
pub fn grid_search_sigma_loo(calibration: &CalibrationSet, grid: &[f64]) -> Result<SigmaSearch> {
    check_grid(grid)?;
    let entries = calibration.entries();
    let p = entries.len();
    if p < 2 {
        return Err(Error::arg("leave-one-out needs at least two calibration entries"));
    }
    let mut dist = vec![0.0; p * p];
    for i in 0..p {
        for j in (i + 1)..p {
            let d = crate::kernels::minkowski_unweighted(&entries[i].mean, &entries[j].mean, 2.0)?;
            dist[i * p + j] = d;
            dist[j * p + i] = d;
        }
    }
    let mut candidates = Vec::with_capacity(grid.len());
    for &sigma in grid {
        let denom = 2.0 * sigma * sigma;
        let mut total = 0.0;
        for i in 0..p {
            let (mut sx, mut sy, mut sk) = (0.0, 0.0, 0.0);
            for (j, e) in entries.iter().enumerate() {
                if j == i {
                    continue;
                }
                let k = (-dist[i * p + j] / denom).exp();
                sx += k * e.target.x;
                sy += k * e.target.y;
                sk += k;
            }
            total += if sk > f64::MIN_POSITIVE {
                ScreenPoint::new(sx / sk, sy / sk).distance(&entries[i].target)
            } else {
                f64::INFINITY
            };
        }
        candidates.push((sigma, total / p as f64));
    }
    Ok(SigmaSearch {
        sigma: pick(&candidates),
        method: ValidationMethod::LeaveOneOut,
        candidates,
    })
}

/// `count` log-spaced values from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..count)
                .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_set() -> CalibrationSet {
        let mut set = CalibrationSet::new(1);
        for i in 0..6 {
            let v = i as f64 / 5.0;
            set.push(vec![v], ScreenPoint::new(100.0 * v, 0.0)).unwrap();
        }
        set
    }

    #[test]
    fn single_candidate_wins() {
        let val = vec![(vec![0.5], ScreenPoint::new(50.0, 0.0))];
        let r = grid_search_sigma(&line_set(), &val, &[0.3]).unwrap();
        assert_eq!(r.sigma, 0.3);
        assert_eq!(r.method, ValidationMethod::HeldOut);
    }

    #[test]
    fn ties_go_to_smaller_sigma() {
        // Frame sits exactly on the midpoint of a symmetric set; every sigma
        // gives the exact answer.
        let mut set = CalibrationSet::new(1);
        set.push(vec![0.0], ScreenPoint::new(0.0, 0.0)).unwrap();
        set.push(vec![1.0], ScreenPoint::new(100.0, 0.0)).unwrap();
        let val = vec![(vec![0.5], ScreenPoint::new(50.0, 0.0))];
        let r = grid_search_sigma(&set, &val, &[0.9, 0.2, 0.5]).unwrap();
        assert_eq!(r.sigma, 0.2);
    }

    #[test]
    fn result_is_exhaustive_minimum() {
        let grid = log_grid(0.05, 2.0, 15);
        let val: Vec<_> = (0..9)
            .map(|i| {
                let v = 0.05 + 0.1 * i as f64;
                (vec![v], ScreenPoint::new(100.0 * v, 0.0))
            })
            .collect();
        let r = grid_search_sigma(&line_set(), &val, &grid).unwrap();
        assert!(grid.contains(&r.sigma));
        let best = r
            .candidates
            .iter()
            .map(|c| c.1)
            .fold(f64::INFINITY, f64::min);
        assert_eq!(r.candidates.iter().find(|c| c.0 == r.sigma).unwrap().1, best);
    }

    #[test]
    fn errors() {
        let val = vec![(vec![0.5], ScreenPoint::new(50.0, 0.0))];
        assert!(grid_search_sigma(&line_set(), &[], &[0.3]).is_err());
        assert!(grid_search_sigma(&line_set(), &val, &[]).is_err());
        assert!(grid_search_sigma(&line_set(), &val, &[0.0]).is_err());
        assert!(grid_search_sigma_loo(&CalibrationSet::new(1), &[0.3]).is_err());
    }

    #[test]
    fn loo_matches_explicit_held_out_runs() {
        let set = line_set();
        let grid = [0.1, 0.3, 0.7];
        let loo = grid_search_sigma_loo(&set, &grid).unwrap();
        for &(sigma, err) in &loo.candidates {
            let mut total = 0.0;
            for i in 0..set.len() {
                let order: Vec<usize> = (0..set.len()).filter(|&j| j != i).collect();
                let rest = set.permuted(&order);
                let val = vec![(set.entries()[i].mean.clone(), set.entries()[i].target)];
                total += grid_search_sigma(&rest, &val, &[sigma]).unwrap().candidates[0].1;
            }
            assert!((total / set.len() as f64 - err).abs() < 1e-9);
        }
    }

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(0.01, 1.0, 3);
        assert!((g[0] - 0.01).abs() < 1e-15 && (g[1] - 0.1).abs() < 1e-15 && (g[2] - 1.0).abs() < 1e-12);
    }
}
