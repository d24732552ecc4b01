//! Accuracy as a function of LED count or calibration grid size.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::accuracy::{evaluate_accuracy, AccuracyReport};
use crate::calib::{channel_stats, CalibrationGridSpec};
use crate::config::SessionConfig;
use crate::error::{Error, Result};
use crate::geometry::{CalibrationSet, MIN_CHANNELS};
use crate::log::{Phase, SessionLog};
use crate::regress::ChannelSubset;
use crate::session::{run_session, run_session_with, Stages};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    LedCount,
    CalibrationPoints,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::LedCount => "led_count",
            SweepAxis::CalibrationPoints => "calibration_points",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: usize,
    pub mean_deg: f64,
    pub median_deg: f64,
    pub std_deg: f64,
    pub frames_used: usize,
    pub calibration_points: usize,
}

impl SweepRow {
    fn new(value: usize, r: &AccuracyReport, calibration_points: usize) -> Self {
        Self {
            value,
            mean_deg: r.mean_deg,
            median_deg: r.median_deg,
            std_deg: r.std_deg,
            frames_used: r.frames_used,
            calibration_points,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub axis: SweepAxis,
    pub rows: Vec<SweepRow>,
    /// Channels by decreasing calibration variance (LED-count sweeps).
    pub channel_rank: Vec<usize>,
}

impl SweepReport {
    /// Largest rise in mean error from one value to the next.
    pub fn worst_increase(&self) -> f64 {
        self.rows
            .windows(2)
            .map(|w| w[1].mean_deg - w[0].mean_deg)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Channels ordered by the variance of their calibration means, largest
/// first; ties keep the lower index first.
pub fn rank_channels(set: &CalibrationSet) -> Result<Vec<usize>> {
    let means: Vec<Vec<f64>> = set.means().map(<[f64]>::to_vec).collect();
    let (_, std) = channel_stats(&means)?;
    let mut order: Vec<usize> = (0..std.len()).collect();
    order.sort_by(|&a, &b| std[b].total_cmp(&std[a]).then(a.cmp(&b)));
    Ok(order)
}

/// Accuracy using only the `n` highest-variance channels of one session.
pub fn led_count_sweep_on(
    cfg: &SessionConfig,
    log: &SessionLog,
    set: &CalibrationSet,
    values: &[usize],
) -> Result<SweepReport> {
    let rank = rank_channels(set)?;
    let mut rows = Vec::with_capacity(values.len());
    for &n in values {
        if n < MIN_CHANNELS || n > set.channel_count() {
            return Err(Error::arg(format!(
                "LED count {n} outside {MIN_CHANNELS}..={}",
                set.channel_count()
            )));
        }
        let mut channels = rank[..n].to_vec();
        channels.sort_unstable();
        let mut sub_cfg = cfg.clone();
        sub_cfg.measure = cfg.measure.select_channels(&channels);
        let (inner, _) = sub_cfg.build_estimator(&set.select_channels(&channels)?)?;
        let est = ChannelSubset {
            inner,
            channels,
            full_width: set.channel_count(),
        };
        let (r, _) = evaluate_accuracy(log, Some(Phase::Evaluation), &est, &cfg.signal(), &cfg.display, "led_count")?;
        rows.push(SweepRow::new(n, &r, set.len()));
    }
    Ok(SweepReport {
        axis: SweepAxis::LedCount,
        rows,
        channel_rank: rank,
    })
}

/// Grid sizes must be squares of 2..=8; gameplay is skipped so the grid is
/// the whole calibration.
pub fn calibration_points_sweep(cfg: &SessionConfig, values: &[usize]) -> Result<SweepReport> {
    let grids: Vec<usize> = values
        .iter()
        .map(|&p| {
            let n = (p as f64).sqrt().round() as usize;
            if n * n != p || !(2..=8).contains(&n) {
                Err(Error::arg(format!("{p} calibration points is not a 2x2..8x8 grid")))
            } else {
                Ok(n)
            }
        })
        .collect::<Result<_>>()?;
    let rows = grids
        .par_iter()
        .zip(values)
        .map(|(&n, &p)| {
            let mut c = cfg.clone();
            c.grid = CalibrationGridSpec::square(n, cfg.grid.margin_px);
            let out = run_session_with(&c, Stages::NO_GAMEPLAY, None)?;
            let (r, _) = crate::session::evaluate_session(&c, &out.log, &out.calibration)?;
            Ok(SweepRow::new(p, &r, out.calibration.len()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepReport {
        axis: SweepAxis::CalibrationPoints,
        rows,
        channel_rank: Vec::new(),
    })
}

pub fn sweep(cfg: &SessionConfig, axis: SweepAxis, values: &[usize]) -> Result<SweepReport> {
    if values.is_empty() {
        return Err(Error::arg("sweep needs at least one value"));
    }
    match axis {
        SweepAxis::LedCount => {
            let out = run_session(cfg)?;
            led_count_sweep_on(cfg, &out.log, &out.calibration, values)
        }
        SweepAxis::CalibrationPoints => calibration_points_sweep(cfg, values),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ScreenPoint;
    use crate::session::evaluate_session;

    #[test]
    fn channels_ranked_by_spread() {
        let mut set = CalibrationSet::new(3);
        set.push(vec![0.5, 0.1, 0.3], ScreenPoint::new(0.0, 0.0)).unwrap();
        set.push(vec![0.5, 0.9, 0.4], ScreenPoint::new(1.0, 0.0)).unwrap();
        assert_eq!(rank_channels(&set).unwrap(), vec![1, 2, 0]);
    }

    #[test]
    fn full_led_count_matches_plain_evaluation() {
        let mut cfg = SessionConfig::default();
        cfg.procedure.gameplay_targets = 8;
        cfg.procedure.evaluation_fixations = 5;
        let out = run_session(&cfg).unwrap();
        let (plain, _) = evaluate_session(&cfg, &out.log, &out.calibration).unwrap();
        let s = led_count_sweep_on(&cfg, &out.log, &out.calibration, &[12]).unwrap();
        assert_eq!(s.rows.len(), 1);
        assert!((s.rows[0].mean_deg - plain.mean_deg).abs() < 1e-9);
        assert!(led_count_sweep_on(&cfg, &out.log, &out.calibration, &[3]).is_err());
    }

    #[test]
    fn bad_grid_sizes_rejected() {
        let cfg = SessionConfig::default();
        assert!(calibration_points_sweep(&cfg, &[10]).is_err());
        assert!(calibration_points_sweep(&cfg, &[1]).is_err());
        assert!(sweep(&cfg, SweepAxis::CalibrationPoints, &[]).is_err());
    }
}
