//! Dwell-to-select task sessions under three starting conditions: a fresh
//! calibration, the same wearer's calibration from an earlier session, or
//! another wearer's calibration.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::accuracy::median;
use crate::calib::channel_stats;
use crate::config::{SessionConfig, SubjectSpec};
use crate::error::{Error, Result};
use crate::geometry::{CalibrationSet, ScreenPoint};
use crate::log::{LogRecord, Phase, SessionLog, TaskRecord};
use crate::regress::{GazeEstimator, Model};
use crate::session::{calibrate_on, gameplay_on, simulator};
use crate::sigproc::SignalChain;
use crate::sim::{derive_seed, random_point, GazeScript, HeadsetShift, Simulator};

const TASK_STREAM: u64 = 0x7A5C;
const PRIOR_SESSION_STREAM: u64 = 0x9410;
const REDON_STREAM: u64 = 0x4ED0;
const OTHER_SUBJECT_STREAM: u64 = 0x07E4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Calibrated,
    SameUserPrior,
    CrossUserPrior,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Scenario::Calibrated, Scenario::SameUserPrior, Scenario::CrossUserPrior];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Calibrated => "calibrated",
            Scenario::SameUserPrior => "same_user_prior",
            Scenario::CrossUserPrior => "cross_user_prior",
        }
    }
}

/// Candidate positions for one task, with the target among them.
pub fn place_candidates(rng: &mut impl Rng, cfg: &SessionConfig) -> (Vec<ScreenPoint>, usize) {
    let t = &cfg.tasks;
    let n = rng.random_range(t.min_candidates..=t.max_candidates);
    let mut pts: Vec<ScreenPoint> = Vec::with_capacity(n);
    while pts.len() < n {
        let mut p = random_point(rng, &cfg.display, t.margin_px);
        for _ in 0..1000 {
            if pts.iter().all(|q| q.distance(&p) >= t.min_separation_px) {
                break;
            }
            p = random_point(rng, &cfg.display, t.margin_px);
        }
        pts.push(p);
    }
    let target = rng.random_range(0..n);
    (pts, target)
}

/// Runs the configured number of tasks, augmenting `model` after every
/// failure with the mean of the frames recorded once the eye had settled on
/// the target.
pub fn run_tasks(sim: &mut Simulator, model: &mut Model, cfg: &SessionConfig, rng: &mut impl Rng) -> Result<Vec<TaskRecord>> {
    let mut chain = SignalChain::new(&cfg.signal())?;
    let period_ms = sim.frame_period_us() as f64 / 1000.0;
    let window = ((cfg.tasks.dwell_to_select_ms / period_ms).round() as usize).max(1);
    let need = (cfg.tasks.dwell_fraction * window as f64).ceil() as usize;
    let max_frames = (cfg.tasks.timeout_ms / period_ms).round() as usize;
    let radius_px = cfg.display.degrees_to_pixels(cfg.tasks.target_radius_deg);
    let mut records = Vec::with_capacity(cfg.tasks.tasks_per_session);
    for task in 0..cfg.tasks.tasks_per_session {
        let (candidates, target_idx) = place_candidates(rng, cfg);
        let target = candidates[target_idx];
        let t = sim.clock_us();
        let mut recent: VecDeque<Option<usize>> = VecDeque::with_capacity(window);
        let mut counts = vec![0usize; candidates.len()];
        let mut settled = Vec::new();
        let mut selected = None;
        for _ in 0..max_frames {
            let range = sim.run(&GazeScript::fixation(target, period_ms), Phase::Task)?;
            let frame = sim.frames_in(range).last().cloned().ok_or_else(|| Error::arg("task frame missing"))?;
            let x = chain.process(&frame.sensor_frame(), &frame.exposure)?;
            let hit = model
                .estimate_point(&x)
                .ok()
                .and_then(|e| candidates.iter().position(|c| c.distance(&e) <= radius_px));
            if frame.gaze == target && !frame.blink {
                settled.push(x);
            }
            if recent.len() == window {
                if let Some(Some(old)) = recent.pop_front() {
                    counts[old] -= 1;
                }
            }
            recent.push_back(hit);
            if let Some(h) = hit {
                counts[h] += 1;
            }
            if recent.len() == window {
                if let Some(c) = counts.iter().position(|&n| n >= need) {
                    selected = Some(c);
                    break;
                }
            }
        }
        let success = selected == Some(target_idx);
        if !success {
            // The wearer keeps looking at the target and confirms it.
            let tail = &settled[settled.len().saturating_sub(window)..];
            if tail.len() >= 2 {
                let (mean, _) = channel_stats(tail)?;
                model.augment(&mean, target)?;
            }
        }
        let record = TaskRecord {
            task: task as u32,
            t,
            t_end: sim.clock_us(),
            success,
            candidates,
            target,
            selected,
        };
        sim.log_mut().push(LogRecord::Task(record.clone()));
        records.push(record);
    }
    Ok(records)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSession {
    pub scenario: Scenario,
    pub seed: u64,
    pub tasks: usize,
    pub successes: usize,
    pub success_ratio: f64,
    pub first_half_ratio: f64,
    pub second_half_ratio: f64,
    pub calibration_start: usize,
    pub calibration_end: usize,
}

fn ratio(records: &[TaskRecord]) -> f64 {
    if records.is_empty() {
        return f64::NAN;
    }
    records.iter().filter(|r| r.success).count() as f64 / records.len() as f64
}

fn random_redon(cfg: &SessionConfig, seed: u64) -> HeadsetShift {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, REDON_STREAM));
    let a = rng.random_range(0.0..std::f64::consts::TAU);
    let r = cfg.scenarios.redon_shift_mm;
    HeadsetShift {
        translation_mm: [r * a.cos(), r * a.sin()],
        onset_us: 0,
    }
}

/// One task session for the subject drawn from `seed`. The calibrated
/// scenario runs grid calibration and gameplay first; prior scenarios start
/// from `prior` instead, in a later session with the
/// headset put back on slightly differently.
pub fn run_scenario_session(
    cfg: &SessionConfig,
    scenario: Scenario,
    seed: u64,
    prior: Option<&CalibrationSet>,
) -> Result<(ScenarioSession, SessionLog, CalibrationSet)> {
    let layout = cfg.layout()?;
    let subject = cfg.subject.build(layout.leds.len(), seed)?;
    let mut cfg = cfg.clone();
    cfg.subject = SubjectSpec::Explicit(subject);
    let (mut sim, start) = match scenario {
        Scenario::Calibrated => {
            cfg.seed = seed;
            let mut sim = simulator(&cfg)?;
            let mut set = calibrate_on(&mut sim, &cfg)?.set;
            gameplay_on(&mut sim, &cfg, &mut set, cfg.procedure.gameplay_targets)?;
            (sim, set)
        }
        Scenario::SameUserPrior | Scenario::CrossUserPrior => {
            let prior = prior.ok_or_else(|| Error::arg(format!("{} needs a prior calibration", scenario.name())))?;
            cfg.seed = derive_seed(seed, PRIOR_SESSION_STREAM);
            let mut sim = simulator(&cfg)?;
            sim.schedule_shift(random_redon(&cfg, seed));
            (sim, prior.clone())
        }
    };
    let calibration_start = start.len();
    let (mut model, _) = cfg.build_estimator(&start)?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, TASK_STREAM));
    let records = run_tasks(&mut sim, &mut model, &cfg, &mut rng)?;
    let half = records.len() / 2;
    let session = ScenarioSession {
        scenario,
        seed,
        tasks: records.len(),
        successes: records.iter().filter(|r| r.success).count(),
        success_ratio: ratio(&records),
        first_half_ratio: ratio(&records[..half]),
        second_half_ratio: ratio(&records[half..]),
        calibration_start,
        calibration_end: model.calibration().len(),
    };
    Ok((session, sim.into_log(), model.calibration().clone()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSummary {
    pub scenario: Scenario,
    pub sessions: usize,
    pub mean: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    /// Pooled over sessions.
    pub first_half_ratio: f64,
    pub second_half_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub sessions: Vec<ScenarioSession>,
    pub summary: Vec<ScenarioSummary>,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn summarise(scenario: Scenario, sessions: &[ScenarioSession]) -> ScenarioSummary {
    let mine: Vec<&ScenarioSession> = sessions.iter().filter(|s| s.scenario == scenario).collect();
    let mut r: Vec<f64> = mine.iter().map(|s| s.success_ratio).collect();
    r.sort_by(f64::total_cmp);
    let pooled = |f: fn(&ScenarioSession) -> (f64, usize)| {
        let (hits, n) = mine.iter().map(|s| f(s)).fold((0.0, 0), |a, (h, n)| (a.0 + h, a.1 + n));
        hits / n as f64
    };
    ScenarioSummary {
        scenario,
        sessions: mine.len(),
        mean: r.iter().sum::<f64>() / r.len() as f64,
        median: median(&r),
        q1: quantile(&r, 0.25),
        q3: quantile(&r, 0.75),
        first_half_ratio: pooled(|s| {
            let n = s.tasks / 2;
            (s.first_half_ratio * n as f64, n)
        }),
        second_half_ratio: pooled(|s| {
            let n = s.tasks - s.tasks / 2;
            (s.second_half_ratio * n as f64, n)
        }),
    }
}

/// Every scenario for every seed. The cross-user prior for a seed comes
/// from a calibrated session of a different subject.
pub fn run_scenarios(cfg: &SessionConfig, seeds: &[u64]) -> Result<ScenarioReport> {
    if seeds.is_empty() {
        return Err(Error::arg("no seeds"));
    }
    let per_seed: Vec<Vec<ScenarioSession>> = seeds
        .par_iter()
        .map(|&seed| -> Result<Vec<ScenarioSession>> {
            let (own, _, own_set) = run_scenario_session(cfg, Scenario::Calibrated, seed, None)?;
            let other_seed = derive_seed(seed, OTHER_SUBJECT_STREAM);
            let (_, _, other_set) = run_scenario_session(cfg, Scenario::Calibrated, other_seed, None)?;
            let (same, _, _) = run_scenario_session(cfg, Scenario::SameUserPrior, seed, Some(&own_set))?;
            let (cross, _, _) = run_scenario_session(cfg, Scenario::CrossUserPrior, seed, Some(&other_set))?;
            Ok(vec![own, same, cross])
        })
        .collect::<Result<_>>()?;
    let sessions: Vec<ScenarioSession> = per_seed.into_iter().flatten().collect();
    let summary = Scenario::ALL.iter().map(|&s| summarise(s, &sessions)).collect();
    Ok(ScenarioReport { sessions, summary })
}
