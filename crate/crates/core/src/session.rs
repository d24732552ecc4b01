//! The full session procedure on a simulated wearer: grid calibration,
//! gameplay that keeps adding calibration entries, then a free-viewing
//! evaluation script with blinks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::calib::{aggregate_point, run_calibration, Aggregate, CalibrationRun, SimDwellSource};
use crate::config::SessionConfig;
use crate::error::Result;
use crate::eval::{evaluate_accuracy, AccuracyReport, TraceRow};
use crate::geometry::CalibrationSet;
use crate::log::{CalibrationRecord, LogRecord, Phase, SessionLog};
use crate::sim::{derive_seed, random_point, GazeScript, HeadsetShift, Simulator};

const GRID_STREAM: u64 = 0x6121D;
const GAMEPLAY_STREAM: u64 = 0x6A3E;
const EVAL_STREAM: u64 = 0xE7A1;

#[derive(Debug, Clone, PartialEq)]
pub struct SessionOutcome {
    pub log: SessionLog,
    pub grid: CalibrationRun,
    /// Grid entries plus gameplay augmentations.
    pub calibration: CalibrationSet,
    /// Gameplay targets whose dwell was too unsteady to use.
    pub gameplay_rejected: usize,
}

/// What to run after calibration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Stages {
    pub gameplay: bool,
    pub evaluation: bool,
}

impl Stages {
    pub const ALL: Stages = Stages {
        gameplay: true,
        evaluation: true,
    };
    pub const CALIBRATION_ONLY: Stages = Stages {
        gameplay: false,
        evaluation: false,
    };
    pub const NO_GAMEPLAY: Stages = Stages {
        gameplay: false,
        evaluation: true,
    };
}

pub fn simulator(cfg: &SessionConfig) -> Result<Simulator> {
    let layout = cfg.layout()?;
    let subject = cfg.subject()?;
    let mut sim = Simulator::new(layout, subject.clone(), cfg.sim_config()?, cfg.seed)?;
    sim.log_mut().header.meta = serde_json::json!({
        "config": cfg,
        "subject": subject,
        "note": "synthetic data; optical and noise magnitudes are simulator parameters",
    });
    Ok(sim)
}

/// Grid calibration on `sim`.
pub fn calibrate_on(sim: &mut Simulator, cfg: &SessionConfig) -> Result<CalibrationRun> {
    let mut src = SimDwellSource::new(sim, &cfg.signal(), Phase::Calibration)?;
    src.lead_in_ms = cfg.sim.lead_in_ms;
    let run = run_calibration(&mut src, &cfg.grid, &cfg.display, &cfg.dwell, derive_seed(cfg.seed, GRID_STREAM))?;
    sim.log_mut().push(LogRecord::Calibration(CalibrationRecord {
        stage: "grid".into(),
        set: run.set.clone(),
    }));
    Ok(run)
}

/// Gameplay: the wearer looks at `count` random targets; each steady dwell
/// is appended to `set`. Returns how many dwells were rejected.
pub fn gameplay_on(sim: &mut Simulator, cfg: &SessionConfig, set: &mut CalibrationSet, count: usize) -> Result<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, GAMEPLAY_STREAM));
    let mut src = SimDwellSource::new(sim, &cfg.signal(), Phase::Gameplay)?;
    src.lead_in_ms = cfg.sim.lead_in_ms;
    let mut rejected = 0;
    for _ in 0..count {
        let target = random_point(&mut rng, &cfg.display, cfg.procedure.target_margin_px);
        let samples = crate::calib::DwellSource::dwell(&mut src, target, &cfg.dwell)?;
        match aggregate_point(&samples, &cfg.dwell)? {
            Aggregate::Accepted(mean) => set.push(mean, target)?,
            Aggregate::Rejected { .. } => rejected += 1,
        }
    }
    sim.log_mut().push(LogRecord::Calibration(CalibrationRecord {
        stage: "augmented".into(),
        set: set.clone(),
    }));
    Ok(rejected)
}

/// The evaluation script: random fixations with the subject's blinks.
pub fn evaluation_script(cfg: &SessionConfig) -> Result<GazeScript> {
    let subject = cfg.subject()?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, EVAL_STREAM));
    Ok(GazeScript::random_fixations(
        &mut rng,
        &cfg.display,
        cfg.procedure.target_margin_px,
        cfg.procedure.evaluation_fixations,
        cfg.procedure.fixation_ms,
        subject.blink_rate_per_min,
        subject.blink_duration_ms,
    ))
}

/// Runs the configured stages. `shift` moves the headset at its onset.
pub fn run_session_with(cfg: &SessionConfig, stages: Stages, shift: Option<HeadsetShift>) -> Result<SessionOutcome> {
    cfg.validate()?;
    let mut sim = simulator(cfg)?;
    let grid = calibrate_on(&mut sim, cfg)?;
    let mut set = grid.set.clone();
    let mut gameplay_rejected = 0;
    if stages.gameplay {
        gameplay_rejected = gameplay_on(&mut sim, cfg, &mut set, cfg.procedure.gameplay_targets)?;
    }
    if stages.evaluation {
        if let Some(mut s) = shift {
            s.onset_us += sim.clock_us();
            sim.schedule_shift(s);
        }
        sim.run(&evaluation_script(cfg)?, Phase::Evaluation)?;
    }
    Ok(SessionOutcome {
        log: sim.into_log(),
        grid,
        calibration: set,
        gameplay_rejected,
    })
}

pub fn run_session(cfg: &SessionConfig) -> Result<SessionOutcome> {
    run_session_with(cfg, Stages::ALL, None)
}

/// Accuracy of the configured estimator over the evaluation phase.
pub fn evaluate_session(cfg: &SessionConfig, log: &SessionLog, set: &CalibrationSet) -> Result<(AccuracyReport, Vec<TraceRow>)> {
    let (estimator, _) = cfg.build_estimator(set)?;
    let method = match cfg.estimator {
        crate::geometry::EstimatorKind::Gpr => format!("gpr-{}", cfg.measure.name()),
        crate::geometry::EstimatorKind::Svr => "svr-rbf".to_string(),
    };
    evaluate_accuracy(log, Some(Phase::Evaluation), &estimator, &cfg.signal(), &cfg.display, &method)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SessionConfig {
        let mut cfg = SessionConfig::default();
        cfg.seed = 3;
        cfg.procedure.gameplay_targets = 10;
        cfg.procedure.evaluation_fixations = 6;
        cfg
    }

    #[test]
    fn full_procedure_grows_calibration() {
        let cfg = small();
        let out = run_session(&cfg).unwrap();
        assert_eq!(out.grid.set.len(), 16);
        assert_eq!(out.calibration.len(), 16 + 10 - out.gameplay_rejected);
        assert_eq!(out.log.calibration("grid"), Some(&out.grid.set));
        assert_eq!(out.log.calibration("augmented"), Some(&out.calibration));
        assert!(out.log.phase(Phase::Evaluation).frame_count() > 500);
        let (report, trace) = evaluate_session(&cfg, &out.log, &out.calibration).unwrap();
        assert_eq!(trace.len(), report.frames_total);
        assert!(report.mean_deg.is_finite());
    }

    #[test]
    fn sessions_are_reproducible() {
        let cfg = small();
        let a = run_session(&cfg).unwrap();
        let b = run_session(&cfg).unwrap();
        assert_eq!(a.log.to_jsonl_string().unwrap(), b.log.to_jsonl_string().unwrap());
    }
}
