//! The `ledgaze` subcommands as library calls. Each writes its outputs into
//! one directory and returns the writer that lists them.

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::calib::CalibrationRun;
use crate::config::SessionConfig;
use crate::error::{Error, Result};
use crate::eval::report::ReportWriter;
use crate::eval::{
    compare_estimators, compare_over_seeds, run_scenarios, sweep as run_sweep, AccuracyReport, Comparison,
    ComparisonSummary, Scenario, ScenarioReport, SweepAxis, SweepReport,
};
use crate::geometry::SensorFrame;
use crate::log::SessionLog;
use crate::session::{evaluate_session, run_session, run_session_with, Stages};
use crate::sim::derive_seed;
use crate::wire::{stress, StressConfig, StressReport};

const WIRE_STREAM: u64 = 0x3141;

/// `cfg.seed`, `cfg.seed + 1`, ... (`n` of them).
pub fn seed_range(cfg: &SessionConfig, n: usize) -> Vec<u64> {
    (0..n as u64).map(|i| cfg.seed.wrapping_add(i)).collect()
}

#[derive(Serialize)]
struct CalibrateResult<'a> {
    entries: usize,
    run: &'a CalibrationRun,
}

/// Grid calibration only.
pub fn calibrate(cfg: &SessionConfig, out: &Path) -> Result<ReportWriter> {
    let outcome = run_session_with(cfg, Stages::CALIBRATION_ONLY, None)?;
    let mut w = ReportWriter::create(out)?;
    w.log("session.jsonl", &outcome.log)?;
    w.calibration("calibration.csv", &outcome.grid.set)?;
    w.summary(
        "summary.json",
        "calibrate",
        cfg,
        &CalibrateResult {
            entries: outcome.grid.set.len(),
            run: &outcome.grid,
        },
    )?;
    Ok(w)
}

#[derive(Serialize)]
struct RunResult<'a> {
    grid_entries: usize,
    calibration_entries: usize,
    gameplay_rejected: usize,
    dropped_grid_targets: usize,
    accuracy: &'a AccuracyReport,
}

/// The whole procedure: calibration, gameplay, evaluation.
pub fn run(cfg: &SessionConfig, out: &Path) -> Result<ReportWriter> {
    let outcome = run_session(cfg)?;
    let (report, _) = evaluate_session(cfg, &outcome.log, &outcome.calibration)?;
    let mut w = ReportWriter::create(out)?;
    w.log("session.jsonl", &outcome.log)?;
    w.calibration("calibration.csv", &outcome.calibration)?;
    w.accuracy_tables("", &report)?;
    w.summary(
        "summary.json",
        "run",
        cfg,
        &RunResult {
            grid_entries: outcome.grid.set.len(),
            calibration_entries: outcome.calibration.len(),
            gameplay_rejected: outcome.gameplay_rejected,
            dropped_grid_targets: outcome.grid.dropped.len(),
            accuracy: &report,
        },
    )?;
    Ok(w)
}

pub fn read_log(path: &Path) -> Result<SessionLog> {
    SessionLog::read_jsonl(BufReader::new(File::open(path)?))
}

/// Accuracy over the evaluation phase of `log`, or of a fresh session when
/// no log is given. The calibration is the last one recorded in the log.
pub fn eval(cfg: &SessionConfig, out: &Path, log: Option<&Path>, trace: bool) -> Result<ReportWriter> {
    let log = match log {
        Some(p) => read_log(p)?,
        None => run_session(cfg)?.log,
    };
    let set = log
        .calibration("augmented")
        .or_else(|| log.calibration("grid"))
        .ok_or_else(|| Error::Calibration("log holds no calibration record".into()))?
        .clone();
    let (report, rows) = evaluate_session(cfg, &log, &set)?;
    let mut w = ReportWriter::create(out)?;
    w.accuracy_tables("", &report)?;
    if trace {
        w.trace("trace.csv", &rows)?;
    }
    w.summary("summary.json", "eval", cfg, &report)?;
    Ok(w)
}

/// Values default to the configured ones for the axis.
pub fn sweep(cfg: &SessionConfig, out: &Path, axis: SweepAxis, values: Option<&[usize]>) -> Result<ReportWriter> {
    let values = values.map(<[usize]>::to_vec).unwrap_or_else(|| match axis {
        SweepAxis::LedCount => cfg.sweep.led_counts.clone(),
        SweepAxis::CalibrationPoints => cfg.sweep.calibration_points.clone(),
    });
    let report: SweepReport = run_sweep(cfg, axis, &values)?;
    let mut w = ReportWriter::create(out)?;
    w.csv("sweep.csv", &report.rows)?;
    w.summary("summary.json", "sweep", cfg, &report)?;
    Ok(w)
}

#[derive(Serialize)]
struct CompareResult<'a> {
    session: &'a Comparison,
    seeds: &'a ComparisonSummary,
}

/// Full comparison on the session for `cfg.seed`, then means over
/// `cfg.compare.seeds` seeds.
pub fn compare(cfg: &SessionConfig, out: &Path) -> Result<ReportWriter> {
    let outcome = run_session(cfg)?;
    let cmp = compare_estimators(cfg, &outcome.log, &outcome.calibration, cfg.compare.all_measures)?;
    let summary = compare_over_seeds(cfg, &seed_range(cfg, cfg.compare.seeds), cfg.compare.all_measures)?;
    let mut w = ReportWriter::create(out)?;

    let mut header: Vec<String> = ["lo_deg", "hi_deg", "gpr", "svr"].map(String::from).to_vec();
    header.extend(cmp.measures.iter().map(|m| m.method.clone()));
    let bins = std::iter::once(&cmp.gpr)
        .chain([&cmp.svr])
        .chain(&cmp.measures)
        .map(|r| r.histogram.len())
        .max()
        .unwrap_or(0);
    let width = crate::eval::HISTOGRAM_BIN_DEG;
    let mass = |r: &AccuracyReport, i: usize| r.histogram.get(i).map_or(0.0, |b| b.mass).to_string();
    let rows: Vec<Vec<String>> = (0..bins)
        .map(|i| {
            let mut row = vec![(i as f64 * width).to_string(), ((i + 1) as f64 * width).to_string()];
            row.push(mass(&cmp.gpr, i));
            row.push(mass(&cmp.svr, i));
            row.extend(cmp.measures.iter().map(|m| mass(m, i)));
            row
        })
        .collect();
    w.table("histograms.csv", &header, &rows)?;

    let mut header: Vec<String> = ["seed", "gpr_mean_deg", "svr_mean_deg", "gpr_median_deg", "svr_median_deg", "sigma"]
        .map(String::from)
        .to_vec();
    if let Some(first) = summary.seeds.first() {
        header.extend(first.measure_means_deg.iter().map(|(m, _)| format!("{m}_mean_deg")));
    }
    let rows: Vec<Vec<String>> = summary
        .seeds
        .iter()
        .map(|s| {
            let mut row = vec![
                s.seed.to_string(),
                s.gpr_mean_deg.to_string(),
                s.svr_mean_deg.to_string(),
                s.gpr_median_deg.to_string(),
                s.svr_median_deg.to_string(),
                s.sigma.to_string(),
            ];
            row.extend(s.measure_means_deg.iter().map(|(_, v)| v.to_string()));
            row
        })
        .collect();
    w.table("compare.csv", &header, &rows)?;
    w.summary(
        "summary.json",
        "compare",
        cfg,
        &CompareResult {
            session: &cmp,
            seeds: &summary,
        },
    )?;
    Ok(w)
}

/// Every scenario over `cfg.scenarios.seeds` seeds; `only` filters what is
/// reported.
pub fn scenarios(cfg: &SessionConfig, out: &Path, only: Option<Scenario>) -> Result<ReportWriter> {
    let mut report: ScenarioReport = run_scenarios(cfg, &seed_range(cfg, cfg.scenarios.seeds))?;
    if let Some(s) = only {
        report.sessions.retain(|x| x.scenario == s);
        report.summary.retain(|x| x.scenario == s);
    }
    let mut w = ReportWriter::create(out)?;
    w.csv("scenarios.csv", &report.sessions)?;
    w.summary("summary.json", "scenarios", cfg, &report)?;
    Ok(w)
}

#[derive(Serialize)]
struct WireResult<'a> {
    stress: &'a StressConfig,
    report: &'a StressReport,
}

/// Streams the frames of a calibration session through the wire format with
/// injected garbage and bit flips.
pub fn wire_test(cfg: &SessionConfig, out: &Path, stress_cfg: &StressConfig) -> Result<ReportWriter> {
    let outcome = run_session_with(cfg, Stages::CALIBRATION_ONLY, None)?;
    let frames: Vec<SensorFrame> = outcome.log.frames().map(|f| f.sensor_frame()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, WIRE_STREAM));
    let (report, stream) = stress(&frames, stress_cfg, &mut rng)?;
    let mut w = ReportWriter::create(out)?;
    w.bytes("stream.bin", &stream)?;
    w.summary(
        "summary.json",
        "wire-test",
        cfg,
        &WireResult {
            stress: stress_cfg,
            report: &report,
        },
    )?;
    if !report.clean() {
        return Err(Error::Encoding(format!(
            "wire test lost or misdecoded frames: {} recovered of {}, {} misdecoded",
            report.frames_recovered,
            report.frames_sent - report.frames_corrupted,
            report.misdecoded
        )));
    }
    Ok(w)
}
