//! GPR with a distance measure against the RBF-weighted SVR baseline on the
//! same frames.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::accuracy::{estimate_frames, evaluate_estimates, exclusion_mask, guard_frames, phase_frames, AccuracyReport};
use crate::config::SessionConfig;
use crate::error::Result;
use crate::geometry::{angular_error, CalibrationSet, EstimatorKind, ScreenPoint};
use crate::kernels::MeasureSpec;
use crate::log::{Phase, SessionLog};
use crate::regress::{GazeEstimator, GprModel, SigmaSearch};
use crate::session::run_session;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub gpr: AccuracyReport,
    pub svr: AccuracyReport,
    pub sigma: SigmaSearch,
    /// GPR with the other distance measures, when requested.
    pub measures: Vec<AccuracyReport>,
    /// Mean over frames of (GPR error - SVR error), degrees.
    pub paired_mean_diff_deg: f64,
    pub frames_paired: usize,
}

/// The distance measures tried under GPR.
pub fn gpr_measures() -> Vec<MeasureSpec> {
    vec![
        MeasureSpec::euclidean(),
        MeasureSpec::Manhattan,
        MeasureSpec::Cosine,
        MeasureSpec::Canberra,
    ]
}

/// Per-frame errors of two estimators over the same non-excluded frames.
pub fn paired_difference(
    log: &SessionLog,
    a: &dyn GazeEstimator,
    b: &dyn GazeEstimator,
    cfg: &SessionConfig,
) -> Result<(f64, usize)> {
    let frames = phase_frames(log, Some(Phase::Evaluation));
    let signal = cfg.signal();
    let mask = exclusion_mask(&frames, guard_frames(&signal)?);
    let ea = estimate_frames(&frames, a, &signal)?;
    let eb = estimate_frames(&frames, b, &signal)?;
    let errs = |est: &[Option<ScreenPoint>]| -> Vec<Option<f64>> {
        frames
            .iter()
            .zip(est)
            .zip(&mask)
            .map(|((f, e), m)| match (m, e, f.target) {
                (None, Some(e), Some(t)) => Some(angular_error(e, &t, &cfg.display)),
                _ => None,
            })
            .collect()
    };
    let (da, db) = (errs(&ea), errs(&eb));
    let diffs: Vec<f64> = da
        .iter()
        .zip(&db)
        .filter_map(|(x, y)| Some((*x)? - (*y)?))
        .collect();
    if diffs.is_empty() {
        return Ok((0.0, 0));
    }
    Ok((diffs.iter().sum::<f64>() / diffs.len() as f64, diffs.len()))
}

fn report(
    log: &SessionLog,
    est: &dyn GazeEstimator,
    cfg: &SessionConfig,
    method: &str,
) -> Result<AccuracyReport> {
    let frames = phase_frames(log, Some(Phase::Evaluation));
    let signal = cfg.signal();
    let estimates = estimate_frames(&frames, est, &signal)?;
    let mask = exclusion_mask(&frames, guard_frames(&signal)?);
    evaluate_estimates(&frames, &estimates, &mask, &cfg.display, method)
}

/// GPR-Minkowski (m = 2, unit weights) against SVR-RBF with sigma picked by
/// leave-one-out search over the calibration set.
pub fn compare_estimators(cfg: &SessionConfig, log: &SessionLog, set: &CalibrationSet, all_measures: bool) -> Result<Comparison> {
    let gpr = GprModel::new(set.clone(), MeasureSpec::euclidean())?;
    let mut svr_cfg = cfg.clone();
    svr_cfg.estimator = EstimatorKind::Svr;
    let (svr, sigma) = svr_cfg.build_estimator(set)?;
    let sigma = sigma.expect("svr reports its sigma search");
    let gpr_report = report(log, &gpr, cfg, "gpr-minkowski")?;
    let svr_report = report(log, &svr, cfg, "svr-rbf")?;
    let (diff, n) = paired_difference(log, &gpr, &svr, cfg)?;
    let mut measures = Vec::new();
    if all_measures {
        for m in gpr_measures().into_iter().skip(1) {
            let model = GprModel::new(set.clone(), m.clone())?;
            measures.push(report(log, &model, cfg, &format!("gpr-{}", m.name()))?);
        }
    }
    Ok(Comparison {
        gpr: gpr_report,
        svr: svr_report,
        sigma,
        measures,
        paired_mean_diff_deg: diff,
        frames_paired: n,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedComparison {
    pub seed: u64,
    pub gpr_mean_deg: f64,
    pub svr_mean_deg: f64,
    pub gpr_median_deg: f64,
    pub svr_median_deg: f64,
    pub sigma: f64,
    pub measure_means_deg: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonSummary {
    pub seeds: Vec<SeedComparison>,
    pub gpr_wins: usize,
    pub win_fraction: f64,
}

/// One full session per seed (subject drawn from the seed), both
/// estimators on each.
pub fn compare_over_seeds(cfg: &SessionConfig, seeds: &[u64], all_measures: bool) -> Result<ComparisonSummary> {
    let rows = seeds
        .par_iter()
        .map(|&seed| {
            let mut c = cfg.clone();
            c.seed = seed;
            let out = run_session(&c)?;
            let cmp = compare_estimators(&c, &out.log, &out.calibration, all_measures)?;
            Ok(SeedComparison {
                seed,
                gpr_mean_deg: cmp.gpr.mean_deg,
                svr_mean_deg: cmp.svr.mean_deg,
                gpr_median_deg: cmp.gpr.median_deg,
                svr_median_deg: cmp.svr.median_deg,
                sigma: cmp.sigma.sigma,
                measure_means_deg: cmp.measures.iter().map(|r| (r.method.clone(), r.mean_deg)).collect(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let wins = rows.iter().filter(|r| r.gpr_mean_deg < r.svr_mean_deg).count();
    Ok(ComparisonSummary {
        win_fraction: wins as f64 / rows.len().max(1) as f64,
        gpr_wins: wins,
        seeds: rows,
    })
}
