//! Shared domain types: capture frames, screen points, display geometry and
//! the calibration set that every estimator is built from.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest count a 10-bit converter can report.
pub const ADC_MAX: u16 = 1023;

/// Smallest channel count a session may be configured with.
pub const MIN_CHANNELS: usize = 4;

/// One capture vector: a reading from every sensing LED, in channel order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SensorFrame {
    /// Microseconds since session start.
    pub timestamp_us: u64,
    pub channels: Vec<u16>,
}

impl SensorFrame {
    pub fn new(timestamp_us: u64, channels: Vec<u16>) -> Self {
        Self {
            timestamp_us,
            channels,
        }
    }

    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    /// Checks the channel count and that every reading fits `adc_max`.
    pub fn validate(&self, channel_count: usize, adc_max: u16) -> Result<()> {
        Error::check_dim(channel_count, self.channels.len())?;
        if let Some((i, v)) = self
            .channels
            .iter()
            .enumerate()
            .find(|(_, &v)| v > adc_max)
        {
            return Err(Error::arg(format!(
                "channel {i} reading {v} exceeds ADC range [0, {adc_max}]"
            )));
        }
        Ok(())
    }

    /// Converts counts to real values in [0, 1].
    pub fn normalized(&self, adc_max: u16) -> Vec<f64> {
        let scale = f64::from(adc_max);
        self.channels.iter().map(|&c| f64::from(c) / scale).collect()
    }
}

/// Checks a sequence of frames for strictly increasing timestamps.
pub fn check_monotonic(frames: &[SensorFrame]) -> Result<()> {
    for w in frames.windows(2) {
        if w[1].timestamp_us <= w[0].timestamp_us {
            return Err(Error::arg(format!(
                "timestamps not strictly increasing: {} then {}",
                w[0].timestamp_us, w[1].timestamp_us
            )));
        }
    }
    Ok(())
}

/// A location on the virtual image plane, in pixels from the top-left corner.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ScreenPoint {
    pub x: f64,
    pub y: f64,
}

impl ScreenPoint {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &ScreenPoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisplayGeometry {
    pub width: f64,
    pub height: f64,
    pub degrees_per_pixel: f64,
}

impl Default for DisplayGeometry {
    fn default() -> Self {
        Self {
            width: 500.0,
            height: 400.0,
            degrees_per_pixel: 0.12,
        }
    }
}

impl DisplayGeometry {
    pub fn validate(&self) -> Result<()> {
        if !(self.degrees_per_pixel > 0.0) || !self.degrees_per_pixel.is_finite() {
            return Err(Error::arg("degrees_per_pixel must be positive"));
        }
        if !(self.width > 0.0 && self.height > 0.0) {
            return Err(Error::arg("display must have positive extent"));
        }
        Ok(())
    }

    pub fn contains(&self, p: &ScreenPoint) -> bool {
        p.x >= 0.0 && p.x < self.width && p.y >= 0.0 && p.y < self.height
    }

    pub fn center(&self) -> ScreenPoint {
        ScreenPoint::new(self.width / 2.0, self.height / 2.0)
    }

    pub fn pixels_to_degrees(&self, px: f64) -> f64 {
        px * self.degrees_per_pixel
    }

    pub fn degrees_to_pixels(&self, deg: f64) -> f64 {
        deg / self.degrees_per_pixel
    }
}

/// Visual angle between an estimate and a target, using a flat
/// pixel-to-degree conversion.
pub fn angular_error(estimate: &ScreenPoint, target: &ScreenPoint, geom: &DisplayGeometry) -> f64 {
    geom.degrees_per_pixel * estimate.distance(target)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationEntry {
    pub mean: Vec<f64>,
    pub target: ScreenPoint,
}

/// Ordered rows of (mean sensor vector, screen target).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSet {
    channel_count: usize,
    entries: Vec<CalibrationEntry>,
}

impl CalibrationSet {
    pub fn new(channel_count: usize) -> Self {
        Self {
            channel_count,
            entries: Vec::new(),
        }
    }

    pub fn from_entries(channel_count: usize, entries: Vec<CalibrationEntry>) -> Result<Self> {
        let mut set = Self::new(channel_count);
        for e in entries {
            set.push(e.mean, e.target)?;
        }
        Ok(set)
    }

    pub fn push(&mut self, mean: Vec<f64>, target: ScreenPoint) -> Result<()> {
        Error::check_dim(self.channel_count, mean.len())?;
        self.entries.push(CalibrationEntry { mean, target });
        Ok(())
    }

    pub fn channel_count(&self) -> usize {
        self.channel_count
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[CalibrationEntry] {
        &self.entries
    }

    pub fn means(&self) -> impl Iterator<Item = &[f64]> {
        self.entries.iter().map(|e| e.mean.as_slice())
    }

    pub fn targets(&self) -> impl Iterator<Item = ScreenPoint> + '_ {
        self.entries.iter().map(|e| e.target)
    }

    /// Keeps only the listed channels, in the listed order.
    pub fn select_channels(&self, channels: &[usize]) -> Result<Self> {
        if let Some(&bad) = channels.iter().find(|&&c| c >= self.channel_count) {
            return Err(Error::arg(format!("channel {bad} out of range")));
        }
        let entries = self
            .entries
            .iter()
            .map(|e| CalibrationEntry {
                mean: channels.iter().map(|&c| e.mean[c]).collect(),
                target: e.target,
            })
            .collect();
        Ok(Self {
            channel_count: channels.len(),
            entries,
        })
    }

    /// Reorders entries; `order` must be a permutation of `0..len`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        Self {
            channel_count: self.channel_count,
            entries: order.iter().map(|&i| self.entries[i].clone()).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Gpr,
    Svr,
}

impl std::fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EstimatorKind::Gpr => "gpr",
            EstimatorKind::Svr => "svr",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GazeEstimate {
    pub timestamp_us: u64,
    /// Not clamped to the display.
    pub position: ScreenPoint,
    pub method: EstimatorKind,
}
