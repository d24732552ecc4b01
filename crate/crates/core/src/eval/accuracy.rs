use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{angular_error, DisplayGeometry, ScreenPoint};
use crate::log::{FrameRecord, Phase, SessionLog};
use crate::regress::GazeEstimator;
use crate::sigproc::{SignalChain, SignalConfig};

pub const HISTOGRAM_BIN_DEG: f64 = 0.25;

/// Why a frame was left out of the statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Exclusion {
    Blink,
    /// Between a target move and the gaze arriving on it.
    Transition,
    /// Smoothing filter still carrying an excluded interval.
    Settling,
    NoTarget,
    /// The estimator returned an error.
    Failed,
}

impl Exclusion {
    pub fn name(self) -> &'static str {
        match self {
            Exclusion::Blink => "blink",
            Exclusion::Transition => "transition",
            Exclusion::Settling => "settling",
            Exclusion::NoTarget => "no_target",
            Exclusion::Failed => "failed",
        }
    }
}

/// Blink and transition frames, plus `guard` frames after each excluded run
/// while a smoothing filter recovers.
pub fn exclusion_mask(frames: &[&FrameRecord], guard: usize) -> Vec<Option<Exclusion>> {
    let mut since_bad = usize::MAX;
    frames
        .iter()
        .map(|f| {
            let reason = if f.blink {
                Some(Exclusion::Blink)
            } else if f.target.is_none() {
                Some(Exclusion::NoTarget)
            } else if f.in_transition() {
                Some(Exclusion::Transition)
            } else if since_bad < guard {
                Some(Exclusion::Settling)
            } else {
                None
            };
            since_bad = match reason {
                Some(Exclusion::Settling) | None => since_bad.saturating_add(1),
                Some(_) => 0,
            };
            reason
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lo_deg: f64,
    pub hi_deg: f64,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetStats {
    pub target: ScreenPoint,
    pub frames: usize,
    pub mean_deg: f64,
    pub median_deg: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExclusionCounts {
    pub blink: usize,
    pub transition: usize,
    pub settling: usize,
    pub no_target: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub method: String,
    pub frames_total: usize,
    pub frames_used: usize,
    pub excluded: ExclusionCounts,
    pub mean_deg: f64,
    pub median_deg: f64,
    /// Population standard deviation.
    pub std_deg: f64,
    pub max_deg: f64,
    pub histogram: Vec<HistogramBin>,
    pub per_target: Vec<TargetStats>,
}

/// One frame of a gaze trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t_us: u64,
    pub target_x: Option<f64>,
    pub target_y: Option<f64>,
    pub estimate_x: Option<f64>,
    pub estimate_y: Option<f64>,
    pub excluded: bool,
    pub reason: Option<Exclusion>,
}

pub fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

pub fn histogram(errors: &[f64], bin_deg: f64) -> Vec<HistogramBin> {
    if errors.is_empty() {
        return Vec::new();
    }
    let max = errors.iter().copied().fold(0.0, f64::max);
    let bins = ((max / bin_deg).floor() as usize) + 1;
    let mut counts = vec![0usize; bins];
    for &e in errors {
        counts[((e / bin_deg).floor() as usize).min(bins - 1)] += 1;
    }
    let n = errors.len() as f64;
    counts
        .into_iter()
        .enumerate()
        .map(|(i, c)| HistogramBin {
            lo_deg: i as f64 * bin_deg,
            hi_deg: (i + 1) as f64 * bin_deg,
            mass: c as f64 / n,
        })
        .collect()
}

/// Statistics over frames whose mask entry is `None`. `estimates[i]` of
/// `None` marks an estimator failure.
pub fn evaluate_estimates(
    frames: &[&FrameRecord],
    estimates: &[Option<ScreenPoint>],
    mask: &[Option<Exclusion>],
    geom: &DisplayGeometry,
    method: &str,
) -> Result<AccuracyReport> {
    Error::check_dim(frames.len(), estimates.len())?;
    Error::check_dim(frames.len(), mask.len())?;
    let mut excluded = ExclusionCounts::default();
    let mut errors = Vec::new();
    let mut by_target: Vec<(ScreenPoint, Vec<f64>)> = Vec::new();
    let mut index: HashMap<(u64, u64), usize> = HashMap::new();
    for ((f, est), m) in frames.iter().zip(estimates).zip(mask) {
        let reason = match (m, est) {
            (Some(r), _) => Some(*r),
            (None, None) => Some(Exclusion::Failed),
            (None, Some(_)) => None,
        };
        match reason {
            Some(Exclusion::Blink) => excluded.blink += 1,
            Some(Exclusion::Transition) => excluded.transition += 1,
            Some(Exclusion::Settling) => excluded.settling += 1,
            Some(Exclusion::NoTarget) => excluded.no_target += 1,
            Some(Exclusion::Failed) => excluded.failed += 1,
            None => {
                let (Some(target), Some(e)) = (f.target, est) else { unreachable!() };
                let err = angular_error(e, &target, geom);
                errors.push(err);
                let key = (target.x.to_bits(), target.y.to_bits());
                let slot = *index.entry(key).or_insert_with(|| {
                    by_target.push((target, Vec::new()));
                    by_target.len() - 1
                });
                by_target[slot].1.push(err);
            }
        }
    }
    if errors.is_empty() {
        return Err(Error::EmptyReport);
    }
    let n = errors.len() as f64;
    let mean = errors.iter().sum::<f64>() / n;
    let std = (errors.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / n).sqrt();
    let s = sorted(&errors);
    let per_target = by_target
        .into_iter()
        .map(|(target, errs)| TargetStats {
            target,
            frames: errs.len(),
            mean_deg: errs.iter().sum::<f64>() / errs.len() as f64,
            median_deg: median(&sorted(&errs)),
        })
        .collect();
    Ok(AccuracyReport {
        method: method.to_string(),
        frames_total: frames.len(),
        frames_used: errors.len(),
        excluded,
        mean_deg: mean,
        median_deg: median(&s),
        std_deg: std,
        max_deg: s[s.len() - 1],
        histogram: histogram(&errors, HISTOGRAM_BIN_DEG),
        per_target,
    })
}

/// Runs `estimator` over the frames in order, through a fresh signal chain.
pub fn estimate_frames(
    frames: &[&FrameRecord],
    estimator: &dyn GazeEstimator,
    signal: &SignalConfig,
) -> Result<Vec<Option<ScreenPoint>>> {
    let mut chain = SignalChain::new(signal)?;
    frames
        .iter()
        .map(|f| {
            let x = chain.process(&f.sensor_frame(), &f.exposure)?;
            Ok(estimator.estimate_point(&x).ok())
        })
        .collect()
}

/// Frames to exclude after each blink or transition when `signal` smooths.
pub fn guard_frames(signal: &SignalConfig) -> Result<usize> {
    Ok(SignalChain::new(signal)?.filter().map_or(0, |f| f.settle_frames(1e-15)))
}

/// Frames of `log`, optionally only those of one phase.
pub fn phase_frames(log: &SessionLog, phase: Option<Phase>) -> Vec<&FrameRecord> {
    log.frames().filter(|f| phase.is_none_or(|p| f.phase == p)).collect()
}

/// Estimates every frame, excludes blinks and saccade windows, and
/// summarises the angular error of the rest.
pub fn evaluate_accuracy(
    log: &SessionLog,
    phase: Option<Phase>,
    estimator: &dyn GazeEstimator,
    signal: &SignalConfig,
    geom: &DisplayGeometry,
    method: &str,
) -> Result<(AccuracyReport, Vec<TraceRow>)> {
    let frames = phase_frames(log, phase);
    let estimates = estimate_frames(&frames, estimator, signal)?;
    let mask = exclusion_mask(&frames, guard_frames(signal)?);
    let report = evaluate_estimates(&frames, &estimates, &mask, geom, method)?;
    let trace = trace_rows(&frames, &estimates, &mask);
    Ok((report, trace))
}

pub fn trace_rows(frames: &[&FrameRecord], estimates: &[Option<ScreenPoint>], mask: &[Option<Exclusion>]) -> Vec<TraceRow> {
    frames
        .iter()
        .zip(estimates)
        .zip(mask)
        .map(|((f, e), m)| {
            let reason = m.or(if e.is_none() { Some(Exclusion::Failed) } else { None });
            TraceRow {
                t_us: f.t,
                target_x: f.target.map(|t| t.x),
                target_y: f.target.map(|t| t.y),
                estimate_x: e.map(|p| p.x),
                estimate_y: e.map(|p| p.y),
                excluded: reason.is_some(),
                reason,
            }
        })
        .collect()
}
