//! Report files: CSV tables with fixed headers and a JSON summary that
//! carries the configuration and seed.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::accuracy::{AccuracyReport, TraceRow};
use crate::config::SessionConfig;
use crate::error::Result;
use crate::geometry::CalibrationSet;
use crate::log::SessionLog;

#[derive(Serialize)]
struct Summary<'a, T: Serialize> {
    command: &'a str,
    seed: u64,
    config: &'a SessionConfig,
    result: &'a T,
}

/// Writes every output of one command into a directory.
#[derive(Debug)]
pub struct ReportWriter {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl ReportWriter {
    pub fn create(dir: impl AsRef<Path>) -> Result<Self> {
        fs::create_dir_all(dir.as_ref())?;
        Ok(Self {
            dir: dir.as_ref().to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        self.written.push(p.clone());
        p
    }

    pub fn bytes(&mut self, name: &str, data: &[u8]) -> Result<()> {
        let p = self.path(name);
        fs::write(p, data)?;
        Ok(())
    }

    /// `summary.json`-style file: command, seed, full config, result.
    pub fn summary<T: Serialize>(&mut self, name: &str, command: &str, cfg: &SessionConfig, result: &T) -> Result<()> {
        let s = Summary {
            command,
            seed: cfg.seed,
            config: cfg,
            result,
        };
        let mut text = serde_json::to_string_pretty(&s)?;
        text.push('\n');
        self.bytes(name, text.as_bytes())
    }

    pub fn log(&mut self, name: &str, log: &SessionLog) -> Result<()> {
        let text = log.to_jsonl_string()?;
        self.bytes(name, text.as_bytes())
    }

    /// Rows of flat structs; the header comes from the field names.
    pub fn csv<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in rows {
            w.serialize(r)?;
        }
        let data = w.into_inner().map_err(|e| crate::error::Error::Io(e.into_error()))?;
        self.bytes(name, &data)
    }

    pub fn table(&mut self, name: &str, header: &[String], rows: &[Vec<String>]) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        let data = w.into_inner().map_err(|e| crate::error::Error::Io(e.into_error()))?;
        self.bytes(name, &data)
    }

    /// `per_target.csv` and `histogram.csv` for one accuracy report.
    pub fn accuracy_tables(&mut self, prefix: &str, r: &AccuracyReport) -> Result<()> {
        let per_target: Vec<TargetRow> = r
            .per_target
            .iter()
            .map(|t| TargetRow {
                target_x: t.target.x,
                target_y: t.target.y,
                frames: t.frames,
                mean_deg: t.mean_deg,
                median_deg: t.median_deg,
            })
            .collect();
        self.csv(&format!("{prefix}per_target.csv"), &per_target)?;
        self.csv(&format!("{prefix}histogram.csv"), &r.histogram)
    }

    pub fn trace(&mut self, name: &str, rows: &[TraceRow]) -> Result<()> {
        let flat: Vec<TraceCsv> = rows
            .iter()
            .map(|r| TraceCsv {
                t_us: r.t_us,
                target_x: r.target_x,
                target_y: r.target_y,
                estimate_x: r.estimate_x,
                estimate_y: r.estimate_y,
                excluded: u8::from(r.excluded),
                reason: r.reason.map(|x| x.name()),
            })
            .collect();
        self.csv(name, &flat)
    }

    /// One row per entry: target then channel means.
    pub fn calibration(&mut self, name: &str, set: &CalibrationSet) -> Result<()> {
        let mut header = vec!["target_x".to_string(), "target_y".to_string()];
        header.extend((0..set.channel_count()).map(|i| format!("ch{i}")));
        let rows: Vec<Vec<String>> = set
            .means()
            .zip(set.targets())
            .map(|(m, t)| {
                let mut row = vec![t.x.to_string(), t.y.to_string()];
                row.extend(m.iter().map(f64::to_string));
                row
            })
            .collect();
        self.table(name, &header, &rows)
    }
}

#[derive(Serialize)]
struct TargetRow {
    target_x: f64,
    target_y: f64,
    frames: usize,
    mean_deg: f64,
    median_deg: f64,
}

#[derive(Serialize)]
struct TraceCsv {
    t_us: u64,
    target_x: Option<f64>,
    target_y: Option<f64>,
    estimate_x: Option<f64>,
    estimate_y: Option<f64>,
    excluded: u8,
    reason: Option<&'static str>,
}
