//! Dwell calibration: show grid targets in random order, average the
//! capture vectors recorded while the user looks at each, and reject
//! locations whose readings wander too much.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CalibrationSet, DisplayGeometry, ScreenPoint, SensorFrame};
use crate::log::{FrameRecord, Phase};
use crate::sigproc::{SignalChain, SignalConfig};
use crate::sim::{GazeScript, Simulator};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationGridSpec {
    pub rows: usize,
    pub cols: usize,
    pub margin_px: f64,
}

impl Default for CalibrationGridSpec {
    fn default() -> Self {
        Self {
            rows: 4,
            cols: 4,
            margin_px: 40.0,
        }
    }
}

impl CalibrationGridSpec {
    pub fn square(n: usize, margin_px: f64) -> Self {
        Self {
            rows: n,
            cols: n,
            margin_px,
        }
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn validate(&self, geom: &DisplayGeometry) -> Result<()> {
        if !(2..=8).contains(&self.rows) || !(2..=8).contains(&self.cols) {
            return Err(Error::arg(format!("grid {}x{} outside 2..=8", self.rows, self.cols)));
        }
        if !(self.margin_px >= 0.0) || 2.0 * self.margin_px >= geom.width || 2.0 * self.margin_px >= geom.height {
            return Err(Error::arg(format!(
                "margin {} px leaves no room on a {}x{} display",
                self.margin_px, geom.width, geom.height
            )));
        }
        Ok(())
    }

    /// Grid points in row-major order, evenly spaced over the inset
    /// rectangle (corners included).
    pub fn points(&self, geom: &DisplayGeometry) -> Result<Vec<ScreenPoint>> {
        self.validate(geom)?;
        let (x0, y0) = (self.margin_px, self.margin_px);
        let dx = (geom.width - 2.0 * self.margin_px) / (self.cols - 1) as f64;
        let dy = (geom.height - 2.0 * self.margin_px) / (self.rows - 1) as f64;
        let mut out = Vec::with_capacity(self.len());
        for r in 0..self.rows {
            for c in 0..self.cols {
                let mut p = ScreenPoint::new(x0 + c as f64 * dx, y0 + r as f64 * dy);
                // keep the far edge strictly inside the half-open display
                if p.x >= geom.width {
                    p.x = geom.width - 1e-9;
                }
                if p.y >= geom.height {
                    p.y = geom.height - 1e-9;
                }
                out.push(p);
            }
        }
        Ok(out)
    }
}

/// All grid points once, in a seeded random order.
pub fn schedule_targets(grid: &CalibrationGridSpec, geom: &DisplayGeometry, seed: u64) -> Result<Vec<ScreenPoint>> {
    let mut points = grid.points(geom)?;
    points.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Ok(points)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DwellConfig {
    pub fix_duration_ms: f64,
    pub sample_interval_ms: f64,
    /// Largest per-channel sample standard deviation accepted, normalized
    /// units.
    pub variance_threshold: f64,
}

impl Default for DwellConfig {
    fn default() -> Self {
        Self {
            fix_duration_ms: 1500.0,
            sample_interval_ms: 10.0,
            variance_threshold: 0.05,
        }
    }
}

impl DwellConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sample_interval_ms > 0.0) || !(self.fix_duration_ms >= 2.0 * self.sample_interval_ms) {
            return Err(Error::arg("dwell must cover at least two sample intervals"));
        }
        if !(self.variance_threshold > 0.0) {
            return Err(Error::arg("variance threshold must be positive"));
        }
        Ok(())
    }

    pub fn sample_count(&self) -> usize {
        (self.fix_duration_ms / self.sample_interval_ms).floor() as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Aggregate {
    Accepted(Vec<f64>),
    Rejected { channels: Vec<usize> },
}

impl Aggregate {
    pub fn accepted(&self) -> Option<&[f64]> {
        match self {
            Aggregate::Accepted(m) => Some(m),
            Aggregate::Rejected { .. } => None,
        }
    }
}

/// Per-channel mean and sample standard deviation (n-1).
pub fn channel_stats(samples: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<f64>)> {
    if samples.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: samples.len(),
        });
    }
    let m = samples[0].len();
    for s in samples {
        Error::check_dim(m, s.len())?;
    }
    let n = samples.len() as f64;
    let mean: Vec<f64> = (0..m).map(|c| samples.iter().map(|s| s[c]).sum::<f64>() / n).collect();
    let std = (0..m)
        .map(|c| (samples.iter().map(|s| (s[c] - mean[c]).powi(2)).sum::<f64>() / (n - 1.0)).sqrt())
        .collect();
    Ok((mean, std))
}

/// Averages normalized capture vectors for one target, or reports the
/// channels whose spread exceeds the threshold.
pub fn aggregate_point(samples: &[Vec<f64>], config: &DwellConfig) -> Result<Aggregate> {
    let (mean, std) = channel_stats(samples)?;
    let bad: Vec<usize> = std
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > config.variance_threshold)
        .map(|(i, _)| i)
        .collect();
    if bad.is_empty() {
        Ok(Aggregate::Accepted(mean))
    } else {
        Ok(Aggregate::Rejected { channels: bad })
    }
}

/// [`aggregate_point`] for raw frames taken at a fixed exposure.
pub fn aggregate_frames(frames: &[SensorFrame], adc_max: u16, config: &DwellConfig) -> Result<Aggregate> {
    let samples: Vec<Vec<f64>> = frames.iter().map(|f| f.normalized(adc_max)).collect();
    aggregate_point(&samples, config)
}

/// Anything that can show a target and hand back the normalized capture
/// vectors recorded while the user dwells on it.
pub trait DwellSource {
    fn channel_count(&self) -> usize;
    fn dwell(&mut self, target: ScreenPoint, config: &DwellConfig) -> Result<Vec<Vec<f64>>>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRun {
    pub set: CalibrationSet,
    /// Targets in the order shown, retries included.
    pub shown: Vec<ScreenPoint>,
    /// Targets rejected twice and left out.
    pub dropped: Vec<ScreenPoint>,
}

/// Shows every grid target once in seeded order; rejected targets get one
/// more try after the rest, then are dropped with a warning.
pub fn run_calibration(
    source: &mut dyn DwellSource,
    grid: &CalibrationGridSpec,
    geom: &DisplayGeometry,
    config: &DwellConfig,
    seed: u64,
) -> Result<CalibrationRun> {
    config.validate()?;
    let targets = schedule_targets(grid, geom, seed)?;
    let mut set = CalibrationSet::new(source.channel_count());
    let mut shown = Vec::new();
    let mut dropped = Vec::new();
    let mut queue = targets;
    for first_pass in [true, false] {
        let mut retry = Vec::new();
        for target in queue {
            shown.push(target);
            let samples = source.dwell(target, config)?;
            match aggregate_point(&samples, config)? {
                Aggregate::Accepted(mean) => set.push(mean, target)?,
                Aggregate::Rejected { channels } if first_pass => {
                    log::info!("target ({:.1}, {:.1}) rejected on channels {channels:?}, retrying later", target.x, target.y);
                    retry.push(target);
                }
                Aggregate::Rejected { channels } => {
                    log::warn!("target ({:.1}, {:.1}) rejected again on channels {channels:?}, dropped", target.x, target.y);
                    dropped.push(target);
                }
            }
        }
        queue = retry;
    }
    if set.is_empty() {
        return Err(Error::Calibration(format!("all {} targets rejected", grid.len())));
    }
    Ok(CalibrationRun { set, shown, dropped })
}

/// Dwell source backed by the simulator: the eye is led to the target,
/// given `lead_in_ms` to settle, then sampled every `sample_interval_ms`
/// for `fix_duration_ms`.
pub struct SimDwellSource<'a> {
    sim: &'a mut Simulator,
    chain: SignalChain,
    phase: Phase,
    pub lead_in_ms: f64,
    /// Targets at which the subject blinks halfway through every dwell.
    pub blink_at: Vec<ScreenPoint>,
    pub blink_ms: f64,
}

pub const DEFAULT_LEAD_IN_MS: f64 = 600.0;

impl<'a> SimDwellSource<'a> {
    pub fn new(sim: &'a mut Simulator, signal: &SignalConfig, phase: Phase) -> Result<Self> {
        Ok(Self {
            sim,
            chain: SignalChain::new(signal)?,
            phase,
            lead_in_ms: DEFAULT_LEAD_IN_MS,
            blink_at: Vec::new(),
            blink_ms: 150.0,
        })
    }

    pub fn with_blink_at(mut self, targets: Vec<ScreenPoint>) -> Self {
        self.blink_at = targets;
        self
    }

    pub fn simulator(&mut self) -> &mut Simulator {
        self.sim
    }

    /// Frames picked at the sampling instants: the latest frame at or
    /// before each instant.
    fn sample(&self, frames: &[&FrameRecord], config: &DwellConfig) -> Vec<usize> {
        let Some(first) = frames.first() else { return Vec::new() };
        let t0 = first.t as f64;
        let step = config.sample_interval_ms * 1000.0;
        let mut picks = Vec::new();
        let mut j = 0;
        for k in 0..config.sample_count() {
            let at = t0 + k as f64 * step;
            while j + 1 < frames.len() && (frames[j + 1].t as f64) <= at {
                j += 1;
            }
            picks.push(j);
        }
        picks
    }
}

impl DwellSource for SimDwellSource<'_> {
    fn channel_count(&self) -> usize {
        self.sim.channel_count()
    }

    fn dwell(&mut self, target: ScreenPoint, config: &DwellConfig) -> Result<Vec<Vec<f64>>> {
        let lead = self.sim.run(&GazeScript::fixation(target, self.lead_in_ms), self.phase)?;
        let mut script = GazeScript::default();
        if self.blink_at.contains(&target) {
            let half = (config.fix_duration_ms - self.blink_ms).max(0.0) / 2.0;
            script = script.then_fixate(target, half).then_blink(self.blink_ms).then_fixate(target, half);
        } else {
            script = script.then_fixate(target, config.fix_duration_ms);
        }
        let range = self.sim.run(&script, self.phase)?;
        self.chain.reset();
        let mut processed = Vec::new();
        let frames: Vec<FrameRecord> = self.sim.frames_in(lead.start..range.end).cloned().collect();
        let dwell_start = self.sim.frames_in(lead).count();
        for f in &frames {
            processed.push(self.chain.process(&f.sensor_frame(), &f.exposure)?);
        }
        let dwell: Vec<&FrameRecord> = frames[dwell_start..].iter().collect();
        let picks = self.sample(&dwell, config);
        Ok(picks.into_iter().map(|i| processed[dwell_start + i].clone()).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{LedLayout, SimConfig, SubjectProfile};

    #[test]
    fn two_by_two_grid_corners() {
        let geom = DisplayGeometry { width: 1000.0, height: 1000.0, degrees_per_pixel: 0.12 };
        let grid = CalibrationGridSpec::square(2, 100.0);
        let mut pts = schedule_targets(&grid, &geom, 3).unwrap();
        pts.sort_by(|a, b| (a.x, a.y).partial_cmp(&(b.x, b.y)).unwrap());
        let want = [(100.0, 100.0), (100.0, 900.0), (900.0, 100.0), (900.0, 900.0)];
        for (p, w) in pts.iter().zip(want) {
            assert_eq!((p.x, p.y), w);
        }
    }

    #[test]
    fn schedule_is_seeded_permutation() {
        let geom = DisplayGeometry::default();
        let grid = CalibrationGridSpec::default();
        let a = schedule_targets(&grid, &geom, 11).unwrap();
        assert_eq!(a, schedule_targets(&grid, &geom, 11).unwrap());
        assert_eq!(a.len(), 16);
        assert_ne!(a, grid.points(&geom).unwrap());
        for p in grid.points(&geom).unwrap() {
            assert_eq!(a.iter().filter(|q| **q == p).count(), 1);
        }
    }

    #[test]
    fn grid_validation() {
        let geom = DisplayGeometry::default();
        assert!(CalibrationGridSpec::square(1, 10.0).validate(&geom).is_err());
        assert!(CalibrationGridSpec::square(9, 10.0).validate(&geom).is_err());
        assert!(CalibrationGridSpec::square(3, 200.0).validate(&geom).is_err());
        assert!(schedule_targets(&CalibrationGridSpec::square(3, 250.0), &geom, 0).is_err());
    }

    #[test]
    fn aggregate_examples() {
        let cfg = DwellConfig {
            variance_threshold: 0.2,
            ..DwellConfig::default()
        };
        let same = vec![vec![0.3, 0.7]; 5];
        assert_eq!(aggregate_point(&same, &cfg).unwrap(), Aggregate::Accepted(vec![0.3, 0.7]));

        let two = vec![vec![0.2, 0.4], vec![0.4, 0.6]];
        let Aggregate::Accepted(m) = aggregate_point(&two, &cfg).unwrap() else { panic!() };
        assert!((m[0] - 0.3).abs() < 1e-15 && (m[1] - 0.5).abs() < 1e-15);

        let tight = DwellConfig {
            variance_threshold: 0.1,
            ..cfg
        };
        let alternating: Vec<Vec<f64>> = (0..10).map(|i| vec![0.5, (i % 2) as f64]).collect();
        assert_eq!(aggregate_point(&alternating, &tight).unwrap(), Aggregate::Rejected { channels: vec![1] });

        assert!(matches!(
            aggregate_point(&two[..1], &cfg),
            Err(Error::InsufficientData { needed: 2, got: 1 })
        ));
    }

    #[test]
    fn raw_frames_are_normalized() {
        let frames = vec![SensorFrame::new(0, vec![0, 1023]), SensorFrame::new(1, vec![0, 1023])];
        let agg = aggregate_frames(&frames, 1023, &DwellConfig::default()).unwrap();
        assert_eq!(agg.accepted().unwrap(), &[0.0, 1.0]);
    }

    proptest::proptest! {
        #[test]
        fn mean_within_range_and_threshold_monotone(
            rows in proptest::collection::vec(proptest::collection::vec(0.0f64..1.0, 3), 2..12),
            t in 0.01f64..0.5,
        ) {
            let cfg = DwellConfig { variance_threshold: t, ..DwellConfig::default() };
            let (mean, _) = channel_stats(&rows).unwrap();
            for c in 0..3 {
                let lo = rows.iter().map(|r| r[c]).fold(f64::INFINITY, f64::min);
                let hi = rows.iter().map(|r| r[c]).fold(f64::NEG_INFINITY, f64::max);
                proptest::prop_assert!(mean[c] >= lo - 1e-12 && mean[c] <= hi + 1e-12);
            }
            if aggregate_point(&rows, &cfg).unwrap().accepted().is_some() {
                let looser = DwellConfig { variance_threshold: t * 1.5, ..cfg };
                proptest::prop_assert!(aggregate_point(&rows, &looser).unwrap().accepted().is_some());
            }
        }
    }

    fn sim(seed: u64) -> Simulator {
        let layout = LedLayout::prototype1(2);
        let subject = SubjectProfile::random(layout.leds.len(), seed);
        let config = SimConfig::for_layout(&layout);
        Simulator::new(layout, subject, config, seed).unwrap()
    }

    #[test]
    fn simulated_grid_calibrates_fully() {
        let mut s = sim(4);
        let geom = s.config().geometry;
        let mut src = SimDwellSource::new(&mut s, &SignalConfig::default(), Phase::Calibration).unwrap();
        let run = run_calibration(&mut src, &CalibrationGridSpec::default(), &geom, &DwellConfig::default(), 4).unwrap();
        assert_eq!(run.set.len(), 16);
        assert!(run.dropped.is_empty());

        let mut s = sim(4);
        let mut src = SimDwellSource::new(&mut s, &SignalConfig::default(), Phase::Calibration).unwrap();
        let small = CalibrationGridSpec::square(2, 40.0);
        assert_eq!(run_calibration(&mut src, &small, &geom, &DwellConfig::default(), 4).unwrap().set.len(), 4);
    }

    #[test]
    fn blinking_target_is_retried_then_dropped() {
        let mut s = sim(6);
        let geom = s.config().geometry;
        let grid = CalibrationGridSpec::default();
        let bad = grid.points(&geom).unwrap()[5];
        let mut src = SimDwellSource::new(&mut s, &SignalConfig::default(), Phase::Calibration)
            .unwrap()
            .with_blink_at(vec![bad]);
        let run = run_calibration(&mut src, &grid, &geom, &DwellConfig::default(), 6).unwrap();
        assert_eq!(run.set.len(), 15);
        assert_eq!(run.dropped, vec![bad]);
        assert_eq!(run.shown.len(), 17);
        assert_eq!(run.shown.last(), Some(&bad));
        assert!(run.set.targets().all(|t| t != bad));
    }

    struct Dead;
    impl DwellSource for Dead {
        fn channel_count(&self) -> usize {
            4
        }
        fn dwell(&mut self, _: ScreenPoint, _: &DwellConfig) -> Result<Vec<Vec<f64>>> {
            Ok((0..10).map(|i| vec![(i % 2) as f64; 4]).collect())
        }
    }

    #[test]
    fn all_rejected_is_calibration_failure() {
        let geom = DisplayGeometry::default();
        let r = run_calibration(&mut Dead, &CalibrationGridSpec::square(2, 40.0), &geom, &DwellConfig::default(), 0);
        assert!(matches!(r, Err(Error::Calibration(_))));
    }
}
