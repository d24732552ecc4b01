//! Session logs: every simulated frame with its ground truth, plus event
//! annotations and calibration snapshots.
//!
//! On disk a log is line-delimited JSON. The first line is the header; each
//! following line is one record tagged by `"type"`:
//!
//! | type          | fields                                                        |
//! |---------------|---------------------------------------------------------------|
//! | `header`      | `version`, `channel_count`, `frame_period_us`, `seed`, `meta`  |
//! | `frame`       | `i`, `t`, `phase`, `segment`, `target`, `gaze`, `blink`, `channels`, `exposure` |
//! | `event`       | `t`, `event` (`target_move`, `saccade_onset`, `blink_start`, `blink_end`, `headset_shift`) |
//! | `calibration` | `stage`, `set`                                                |
//! | `task`        | `task`, `success`, `candidates`, `target`, `selected`         |
//!
//! New fields are only ever added; readers ignore fields they do not know.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CalibrationSet, ScreenPoint, SensorFrame};

pub const LOG_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Calibration,
    Gameplay,
    Evaluation,
    Task,
    Script,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogHeader {
    pub version: u32,
    pub channel_count: usize,
    pub frame_period_us: u64,
    pub seed: u64,
    /// Free-form provenance: configuration, simulator parameters.
    #[serde(default)]
    pub meta: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub i: u64,
    pub t: u64,
    pub phase: Phase,
    /// Script event that produced the frame; increases through a session.
    pub segment: u32,
    pub target: Option<ScreenPoint>,
    pub gaze: ScreenPoint,
    /// Eyelid at least partly closed during some capture of this frame.
    pub blink: bool,
    pub channels: Vec<u16>,
    pub exposure: Vec<u32>,
}

impl FrameRecord {
    pub fn sensor_frame(&self) -> SensorFrame {
        SensorFrame::new(self.t, self.channels.clone())
    }

    /// Gaze has not yet reached the current target.
    pub fn in_transition(&self) -> bool {
        self.target.is_some_and(|t| t != self.gaze)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    TargetMove {
        from: Option<ScreenPoint>,
        to: ScreenPoint,
    },
    SaccadeOnset {
        to: ScreenPoint,
        srt_us: u64,
    },
    BlinkStart,
    BlinkEnd,
    HeadsetShift {
        translation_mm: [f64; 2],
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub t: u64,
    #[serde(flatten)]
    pub event: Event,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRecord {
    pub stage: String,
    pub set: CalibrationSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskRecord {
    pub task: u32,
    /// Task start and end, µs.
    pub t: u64,
    pub t_end: u64,
    pub success: bool,
    pub candidates: Vec<ScreenPoint>,
    pub target: ScreenPoint,
    pub selected: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LogRecord {
    Frame(FrameRecord),
    Event(EventRecord),
    Calibration(CalibrationRecord),
    Task(TaskRecord),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionLog {
    pub header: LogHeader,
    pub records: Vec<LogRecord>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum HeaderLine {
    Header(LogHeader),
}

impl SessionLog {
    pub fn new(channel_count: usize, frame_period_us: u64, seed: u64) -> Self {
        Self {
            header: LogHeader {
                version: LOG_VERSION,
                channel_count,
                frame_period_us,
                seed,
                meta: serde_json::Value::Null,
            },
            records: Vec::new(),
        }
    }

    pub fn push(&mut self, record: LogRecord) {
        self.records.push(record);
    }

    pub fn frames(&self) -> impl Iterator<Item = &FrameRecord> {
        self.records.iter().filter_map(|r| match r {
            LogRecord::Frame(f) => Some(f),
            _ => None,
        })
    }

    pub fn events(&self) -> impl Iterator<Item = &EventRecord> {
        self.records.iter().filter_map(|r| match r {
            LogRecord::Event(e) => Some(e),
            _ => None,
        })
    }

    pub fn tasks(&self) -> impl Iterator<Item = &TaskRecord> {
        self.records.iter().filter_map(|r| match r {
            LogRecord::Task(t) => Some(t),
            _ => None,
        })
    }

    pub fn calibration(&self, stage: &str) -> Option<&CalibrationSet> {
        self.records.iter().rev().find_map(|r| match r {
            LogRecord::Calibration(c) if c.stage == stage => Some(&c.set),
            _ => None,
        })
    }

    pub fn frame_count(&self) -> usize {
        self.frames().count()
    }

    /// Copy holding only the records that fall in `phase`. Events are kept
    /// when their timestamp lies within the phase's frame span.
    pub fn phase(&self, phase: Phase) -> SessionLog {
        let frames: Vec<&FrameRecord> = self.frames().filter(|f| f.phase == phase).collect();
        let span = frames.first().zip(frames.last()).map(|(a, b)| (a.t, b.t));
        let records = self
            .records
            .iter()
            .filter(|r| match r {
                LogRecord::Frame(f) => f.phase == phase,
                LogRecord::Event(e) => span.is_some_and(|(a, b)| e.t >= a && e.t <= b),
                _ => false,
            })
            .cloned()
            .collect();
        SessionLog {
            header: self.header.clone(),
            records,
        }
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        serde_json::to_writer(&mut w, &HeaderLine::Header(self.header.clone()))?;
        w.write_all(b"\n")?;
        for r in &self.records {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_jsonl_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf)?;
        Ok(String::from_utf8(buf).expect("serde_json writes utf-8"))
    }

    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let first = lines
            .next()
            .ok_or_else(|| Error::Config("session log is empty".into()))??;
        let HeaderLine::Header(header) = serde_json::from_str(&first)?;
        if header.version > LOG_VERSION {
            return Err(Error::Config(format!(
                "session log version {} is newer than supported {LOG_VERSION}",
                header.version
            )));
        }
        let mut records = Vec::new();
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            records.push(serde_json::from_str(&line)?);
        }
        Ok(Self { header, records })
    }
}
