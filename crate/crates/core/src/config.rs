//! Session configuration, stored as TOML.
//!
//! Every section has defaults, so an empty file (apart from `version`) is a
//! complete configuration.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::calib::{CalibrationGridSpec, DwellConfig, DEFAULT_LEAD_IN_MS};
use crate::error::{Error, Result};
use crate::geometry::{CalibrationSet, DisplayGeometry, EstimatorKind};
use crate::kernels::MeasureSpec;
use crate::regress::{grid_search_sigma_loo, log_grid, GprModel, Model, SigmaSearch, SvrModel};
use crate::sigproc::{ScheduleMode, SignalConfig, DEFAULT_IIR_ALPHA};
use crate::sim::{LedLayout, OpticsConfig, SimConfig, SubjectProfile, DEFAULT_STEP_US};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LayoutConfig {
    pub mode: ScheduleMode,
    pub eyes: usize,
}

impl Default for LayoutConfig {
    fn default() -> Self {
        Self {
            mode: ScheduleMode::Prototype1,
            eyes: 2,
        }
    }
}

impl LayoutConfig {
    pub fn build(&self) -> Result<LedLayout> {
        if !(1..=2).contains(&self.eyes) {
            return Err(Error::Config(format!("eyes must be 1 or 2, got {}", self.eyes)));
        }
        let layout = LedLayout::for_mode(self.mode, self.eyes);
        layout.validate()?;
        Ok(layout)
    }
}

/// Which synthetic subject to simulate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SubjectSpec {
    /// Centred eye, unit gains.
    Nominal {
        #[serde(default)]
        noise_std: Option<f64>,
    },
    /// Drawn from `seed`, or from the session seed when absent.
    Random {
        #[serde(default)]
        seed: Option<u64>,
        #[serde(default)]
        noise_std: Option<f64>,
    },
    Explicit(SubjectProfile),
}

impl Default for SubjectSpec {
    fn default() -> Self {
        SubjectSpec::Random {
            seed: None,
            noise_std: None,
        }
    }
}

impl SubjectSpec {
    pub fn build(&self, led_count: usize, session_seed: u64) -> Result<SubjectProfile> {
        let subject = match self {
            SubjectSpec::Nominal { noise_std } => {
                let mut s = SubjectProfile::nominal(led_count, session_seed);
                if let Some(n) = noise_std {
                    s.noise_std = *n;
                }
                s
            }
            SubjectSpec::Random { seed, noise_std } => {
                let mut s = SubjectProfile::random(led_count, seed.unwrap_or(session_seed));
                if let Some(n) = noise_std {
                    s.noise_std = *n;
                }
                s
            }
            SubjectSpec::Explicit(s) => s.clone(),
        };
        subject.validate(led_count)?;
        Ok(subject)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSection {
    pub step_us: u32,
    pub adapt_exposure: bool,
    pub lead_in_ms: f64,
    /// Optics overrides; defaults depend on the layout mode.
    pub optics: Option<OpticsConfig>,
}

impl Default for SimSection {
    fn default() -> Self {
        Self {
            step_us: DEFAULT_STEP_US,
            adapt_exposure: true,
            lead_in_ms: DEFAULT_LEAD_IN_MS,
            optics: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvrSection {
    pub sigma_lo: f64,
    pub sigma_hi: f64,
    pub sigma_count: usize,
    pub normalize: bool,
    pub squared: bool,
}

impl Default for SvrSection {
    fn default() -> Self {
        Self {
            sigma_lo: 0.02,
            sigma_hi: 2.0,
            sigma_count: 25,
            normalize: true,
            squared: false,
        }
    }
}

impl SvrSection {
    pub fn grid(&self) -> Vec<f64> {
        log_grid(self.sigma_lo, self.sigma_hi, self.sigma_count)
    }
}

/// Gameplay augmentation and evaluation script.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProcedureConfig {
    /// Targets looked at during gameplay; each becomes a calibration entry.
    pub gameplay_targets: usize,
    pub evaluation_fixations: usize,
    pub fixation_ms: (f64, f64),
    pub target_margin_px: f64,
}

impl Default for ProcedureConfig {
    fn default() -> Self {
        Self {
            gameplay_targets: 66,
            evaluation_fixations: 40,
            fixation_ms: (1500.0, 2500.0),
            target_margin_px: 40.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaskConfig {
    pub tasks_per_session: usize,
    pub min_candidates: usize,
    pub max_candidates: usize,
    pub dwell_to_select_ms: f64,
    /// Fraction of frames in the dwell window that must land on the target.
    pub dwell_fraction: f64,
    pub target_radius_deg: f64,
    /// Give up on a task after this long.
    pub timeout_ms: f64,
    pub margin_px: f64,
    pub min_separation_px: f64,
}

impl Default for TaskConfig {
    fn default() -> Self {
        Self {
            tasks_per_session: 50,
            min_candidates: 3,
            max_candidates: 8,
            dwell_to_select_ms: 3000.0,
            dwell_fraction: 0.95,
            target_radius_deg: 1.5,
            timeout_ms: 6000.0,
            margin_px: 40.0,
            min_separation_px: 60.0,
        }
    }
}

impl TaskConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_candidates < 1 || self.min_candidates > self.max_candidates {
            return Err(Error::Config("candidate range is empty".into()));
        }
        if !(self.dwell_fraction > 0.0 && self.dwell_fraction <= 1.0) {
            return Err(Error::Config("dwell_fraction must be in (0, 1]".into()));
        }
        if !(self.timeout_ms >= self.dwell_to_select_ms) || !(self.dwell_to_select_ms > 0.0) {
            return Err(Error::Config("timeout must be at least the dwell time".into()));
        }
        if !(self.target_radius_deg > 0.0) {
            return Err(Error::Config("target radius must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seeds: usize,
    /// Headset re-donning offset between sessions of the same subject, mm.
    pub redon_shift_mm: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            seeds: 20,
            redon_shift_mm: 0.4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub led_counts: Vec<usize>,
    pub calibration_points: Vec<usize>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            led_counts: (4..=12).collect(),
            calibration_points: vec![4, 9, 16, 25],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareConfig {
    /// Also run GPR with every other distance measure.
    pub all_measures: bool,
    pub seeds: usize,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self {
            all_measures: true,
            seeds: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionConfig {
    pub version: u32,
    pub seed: u64,
    pub display: DisplayGeometry,
    pub layout: LayoutConfig,
    pub subject: SubjectSpec,
    pub grid: CalibrationGridSpec,
    pub dwell: DwellConfig,
    pub measure: MeasureSpec,
    pub estimator: EstimatorKind,
    pub svr: SvrSection,
    /// `None` picks per mode: off for prototype 1, on for prototype 2.
    pub iir_alpha: Option<f64>,
    pub sim: SimSection,
    pub procedure: ProcedureConfig,
    pub tasks: TaskConfig,
    pub scenarios: ScenarioConfig,
    pub sweep: SweepConfig,
    pub compare: CompareConfig,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            seed: 1,
            display: DisplayGeometry::default(),
            layout: LayoutConfig::default(),
            subject: SubjectSpec::default(),
            grid: CalibrationGridSpec::default(),
            dwell: DwellConfig::default(),
            measure: MeasureSpec::euclidean(),
            estimator: EstimatorKind::Gpr,
            svr: SvrSection::default(),
            iir_alpha: None,
            sim: SimSection::default(),
            procedure: ProcedureConfig::default(),
            tasks: TaskConfig::default(),
            scenarios: ScenarioConfig::default(),
            sweep: SweepConfig::default(),
            compare: CompareConfig::default(),
        }
    }
}

impl SessionConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(Error::Config(format!(
                "config version {} not supported (expected {CONFIG_VERSION})",
                self.version
            )));
        }
        self.display.validate()?;
        let layout = self.layout.build()?;
        self.subject.build(layout.leds.len(), self.seed)?;
        self.grid.validate(&self.display)?;
        self.dwell.validate()?;
        self.measure.validate(layout.channel_count())?;
        self.tasks.validate()?;
        if self.svr.sigma_count == 0 || !(self.svr.sigma_lo > 0.0) || !(self.svr.sigma_hi >= self.svr.sigma_lo) {
            return Err(Error::Config("svr sigma grid is empty or non-positive".into()));
        }
        if let Some(a) = self.iir_alpha {
            if !(a > 0.0 && a <= 1.0) {
                return Err(Error::Config(format!("iir_alpha {a} outside (0, 1]")));
            }
        }
        if self.sim.step_us == 0 {
            return Err(Error::Config("sim.step_us must be positive".into()));
        }
        Ok(())
    }

    pub fn layout(&self) -> Result<LedLayout> {
        self.layout.build()
    }

    pub fn subject(&self) -> Result<SubjectProfile> {
        self.subject.build(self.layout()?.leds.len(), self.seed)
    }

    pub fn sim_config(&self) -> Result<SimConfig> {
        let layout = self.layout()?;
        let mut sim = SimConfig::for_layout(&layout);
        sim.geometry = self.display;
        sim.step_us = self.sim.step_us;
        sim.adapt_exposure = self.sim.adapt_exposure;
        if let Some(optics) = self.sim.optics {
            sim.optics = optics;
        }
        Ok(sim)
    }

    pub fn signal(&self) -> SignalConfig {
        let iir_alpha = self.iir_alpha.or(match self.layout.mode {
            ScheduleMode::Prototype1 => None,
            ScheduleMode::Prototype2 => Some(DEFAULT_IIR_ALPHA),
        });
        SignalConfig {
            iir_alpha,
            ..SignalConfig::default()
        }
    }

    /// Estimator of the configured kind over `set`. SVR picks its sigma by
    /// leave-one-out search over the set.
    pub fn build_estimator(&self, set: &CalibrationSet) -> Result<(Model, Option<SigmaSearch>)> {
        match self.estimator {
            EstimatorKind::Gpr => Ok((Model::Gpr(GprModel::new(set.clone(), self.measure.clone())?), None)),
            EstimatorKind::Svr => {
                let search = grid_search_sigma_loo(set, &self.svr.grid())?;
                let model = SvrModel::with_options(set.clone(), search.sigma, self.svr.normalize, self.svr.squared)?;
                Ok((Model::Svr(model), Some(search)))
            }
        }
    }
}
