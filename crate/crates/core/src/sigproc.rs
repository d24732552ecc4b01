//! Signal path from LED captures to regression input: the time-multiplexed
//! capture schedule, per-LED exposure adaptation, exposure compensation and
//! first-order IIR smoothing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{SensorFrame, ADC_MAX};

/// Readings at or above this count halve the channel's exposure.
pub const SATURATION_COUNT: u16 = 1000;
/// Readings at or below this count double the channel's exposure.
pub const STARVATION_COUNT: u16 = 23;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleMode {
    /// Dedicated illuminators; each lights the two sensing LEDs beside it.
    Prototype1,
    /// Every LED senses; the rest of its ring illuminates while it does.
    Prototype2,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaptureStep {
    /// Position of this reading in the capture vector.
    pub sensing_channel: usize,
    /// Index of the sensing LED in the layout.
    pub sensing_led: usize,
    /// Layout indices of the LEDs lit during the capture, ascending.
    pub illuminators_on: Vec<usize>,
}

/// One full cycle of captures; every sensing channel appears exactly once.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaptureSchedule {
    mode: ScheduleMode,
    steps: Vec<CaptureStep>,
}

impl CaptureSchedule {
    /// Builds and checks a schedule. Steps must cover channels `0..steps.len()`
    /// exactly once and never light the sensing LED itself.
    pub fn new(mode: ScheduleMode, steps: Vec<CaptureStep>) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::arg("capture schedule has no steps"));
        }
        let mut seen = vec![false; steps.len()];
        for s in &steps {
            match seen.get_mut(s.sensing_channel) {
                Some(slot) if !*slot => *slot = true,
                _ => {
                    return Err(Error::arg(format!(
                        "sensing channel {} repeated or out of range",
                        s.sensing_channel
                    )))
                }
            }
            if s.illuminators_on.contains(&s.sensing_led) {
                return Err(Error::arg("a sensing LED cannot illuminate its own capture"));
            }
        }
        Ok(Self { mode, steps })
    }

    /// Prototype 1 rings of nine LEDs, ordered sense, sense, illuminate per
    /// group of three.
    pub fn prototype1(eyes: usize) -> Self {
        let mut steps = Vec::new();
        for eye in 0..eyes {
            for group in 0..3 {
                let base = eye * 9 + group * 3;
                for k in 0..2 {
                    steps.push(CaptureStep {
                        sensing_channel: eye * 6 + group * 2 + k,
                        sensing_led: base + k,
                        illuminators_on: vec![base + 2],
                    });
                }
            }
        }
        Self::new(ScheduleMode::Prototype1, steps).expect("well-formed prototype 1 schedule")
    }

    /// Prototype 2 rings of `leds_per_eye` dual-role LEDs.
    pub fn prototype2(leds_per_eye: usize, eyes: usize) -> Self {
        let mut steps = Vec::new();
        for eye in 0..eyes {
            let ring: Vec<usize> = (eye * leds_per_eye..(eye + 1) * leds_per_eye).collect();
            for &led in &ring {
                steps.push(CaptureStep {
                    sensing_channel: led,
                    sensing_led: led,
                    illuminators_on: ring.iter().copied().filter(|&l| l != led).collect(),
                });
            }
        }
        Self::new(ScheduleMode::Prototype2, steps).expect("well-formed prototype 2 schedule")
    }

    pub fn mode(&self) -> ScheduleMode {
        self.mode
    }

    pub fn cycle_len(&self) -> usize {
        self.steps.len()
    }

    pub fn channel_count(&self) -> usize {
        self.steps.len()
    }

    pub fn steps(&self) -> &[CaptureStep] {
        &self.steps
    }

    pub fn next_capture(&self, step_index: u64) -> &CaptureStep {
        &self.steps[(step_index % self.steps.len() as u64) as usize]
    }
}

/// Full capture-vector rate for a time-multiplexed schedule.
pub fn frame_rate_hz(step_duration_us: u32, channels: usize) -> f64 {
    1e6 / (channels as f64 * f64::from(step_duration_us))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExposureConfig {
    pub initial_us: u32,
    pub min_us: u32,
    pub max_us: u32,
    /// Exposure at which compensated readings equal raw readings.
    pub reference_us: u32,
}

impl Default for ExposureConfig {
    fn default() -> Self {
        Self {
            initial_us: 400,
            min_us: 50,
            max_us: 800,
            reference_us: 400,
        }
    }
}

impl ExposureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_us == 0
            || self.min_us > self.max_us
            || !(self.min_us..=self.max_us).contains(&self.initial_us)
            || self.reference_us == 0
        {
            return Err(Error::arg("exposure bounds must satisfy 0 < min <= initial <= max"));
        }
        Ok(())
    }
}

/// Per-channel integration times in microseconds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExposureState {
    exposures: Vec<u32>,
    min_us: u32,
    max_us: u32,
}

impl ExposureState {
    pub fn new(channels: usize, config: &ExposureConfig) -> Self {
        Self {
            exposures: vec![config.initial_us; channels],
            min_us: config.min_us,
            max_us: config.max_us,
        }
    }

    pub fn from_parts(exposures: Vec<u32>, min_us: u32, max_us: u32) -> Self {
        let exposures = exposures.into_iter().map(|e| e.clamp(min_us, max_us)).collect();
        Self {
            exposures,
            min_us,
            max_us,
        }
    }

    pub fn exposures(&self) -> &[u32] {
        &self.exposures
    }

    pub fn get(&self, channel: usize) -> u32 {
        self.exposures[channel]
    }

    /// Applies the saturation/starvation rule in place. Returns the new
    /// exposure when it changed.
    pub fn adapt(&mut self, channel: usize, reading: u16) -> Option<u32> {
        let old = self.exposures[channel];
        let new = if reading >= SATURATION_COUNT {
            old / 2
        } else if reading <= STARVATION_COUNT {
            old.saturating_mul(2)
        } else {
            old
        }
        .clamp(self.min_us, self.max_us);
        self.exposures[channel] = new;
        (new != old).then_some(new)
    }
}

pub fn adapt_exposure(state: &ExposureState, channel: usize, reading: u16) -> ExposureState {
    let mut next = state.clone();
    if let Some(e) = next.adapt(channel, reading) {
        log::trace!("channel {channel} exposure -> {e} us (reading {reading})");
    }
    next
}

/// First-order low-pass `y_t = a x_t + (1 - a) y_{t-1}`, per channel. The
/// first sample seeds the state.
#[derive(Debug, Clone, PartialEq)]
pub struct IirFilter {
    alpha: f64,
    state: Option<Vec<f64>>,
}

impl IirFilter {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::arg(format!("iir alpha {alpha} must lie in (0, 1]")));
        }
        Ok(Self { alpha, state: None })
    }

    pub fn with_state(alpha: f64, state: Vec<f64>) -> Result<Self> {
        let mut f = Self::new(alpha)?;
        f.state = Some(state);
        Ok(f)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn state(&self) -> Option<&[f64]> {
        self.state.as_deref()
    }

    pub fn reset(&mut self) {
        self.state = None;
    }

    pub fn step(&mut self, x: &[f64]) -> Result<Vec<f64>> {
        match &mut self.state {
            None => {
                self.state = Some(x.to_vec());
            }
            Some(y) => {
                Error::check_dim(y.len(), x.len())?;
                let a = self.alpha;
                for (yi, xi) in y.iter_mut().zip(x) {
                    *yi = a * xi + (1.0 - a) * *yi;
                }
            }
        }
        Ok(self.state.clone().expect("state set above"))
    }

    /// Frames needed for a step disturbance to decay below `fraction`.
    pub fn settle_frames(&self, fraction: f64) -> usize {
        if self.alpha >= 1.0 {
            return 0;
        }
        (fraction.ln() / (1.0 - self.alpha).ln()).ceil().max(0.0) as usize
    }
}

pub fn iir_step(filter: &mut IirFilter, frame: &[f64]) -> Result<Vec<f64>> {
    filter.step(frame)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalConfig {
    #[serde(default = "default_adc_max")]
    pub adc_max: u16,
    #[serde(default)]
    pub exposure: ExposureConfig,
    /// Smoothing coefficient; `None` disables the filter.
    #[serde(default)]
    pub iir_alpha: Option<f64>,
}

fn default_adc_max() -> u16 {
    ADC_MAX
}

impl Default for SignalConfig {
    fn default() -> Self {
        Self {
            adc_max: ADC_MAX,
            exposure: ExposureConfig::default(),
            iir_alpha: None,
        }
    }
}

/// Default smoothing coefficient when filtering is turned on.
pub const DEFAULT_IIR_ALPHA: f64 = 0.3;

/// Raw frame in, regression-ready vector out.
#[derive(Debug, Clone)]
pub struct SignalChain {
    adc_max: f64,
    reference_us: f64,
    filter: Option<IirFilter>,
}

impl SignalChain {
    pub fn new(config: &SignalConfig) -> Result<Self> {
        config.exposure.validate()?;
        if config.adc_max == 0 {
            return Err(Error::arg("adc_max must be positive"));
        }
        Ok(Self {
            adc_max: f64::from(config.adc_max),
            reference_us: f64::from(config.exposure.reference_us),
            filter: config.iir_alpha.map(IirFilter::new).transpose()?,
        })
    }

    pub fn filter(&self) -> Option<&IirFilter> {
        self.filter.as_ref()
    }

    pub fn reset(&mut self) {
        if let Some(f) = &mut self.filter {
            f.reset();
        }
    }

    /// Scales each count to [0, 1] and compensates for its exposure.
    pub fn compensate(&self, frame: &SensorFrame, exposures_us: &[u32]) -> Result<Vec<f64>> {
        Error::check_dim(frame.channels.len(), exposures_us.len())?;
        Ok(frame
            .channels
            .iter()
            .zip(exposures_us)
            .map(|(&c, &e)| f64::from(c) / self.adc_max * (self.reference_us / f64::from(e)))
            .collect())
    }

    pub fn process(&mut self, frame: &SensorFrame, exposures_us: &[u32]) -> Result<Vec<f64>> {
        let x = self.compensate(frame, exposures_us)?;
        match &mut self.filter {
            Some(f) => f.step(&x),
            None => Ok(x),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prototype2_step_zero() {
        let s = CaptureSchedule::prototype2(6, 1);
        let c = s.next_capture(0);
        assert_eq!(c.sensing_led, 0);
        assert_eq!(c.illuminators_on, vec![1, 2, 3, 4, 5]);
    }

    #[test]
    fn prototype1_pairs_share_illuminator() {
        let s = CaptureSchedule::prototype1(1);
        let (a, b) = (s.next_capture(0), s.next_capture(1));
        assert_eq!((a.sensing_channel, a.sensing_led), (0, 0));
        assert_eq!((b.sensing_channel, b.sensing_led), (1, 1));
        assert_eq!(a.illuminators_on, vec![2]);
        assert_eq!(b.illuminators_on, vec![2]);
        assert_eq!(s.next_capture(2).illuminators_on, vec![5]);
        assert_eq!(CaptureSchedule::prototype1(2).channel_count(), 12);
    }

    #[test]
    fn schedule_is_periodic_and_fair() {
        for s in [CaptureSchedule::prototype1(2), CaptureSchedule::prototype2(6, 2)] {
            let n = s.cycle_len() as u64;
            for i in 0..3 * n {
                assert_eq!(s.next_capture(i), s.next_capture(i + n));
            }
            for cycles in 1..4u64 {
                let mut counts = vec![0u64; s.channel_count()];
                for i in 0..cycles * n {
                    counts[s.next_capture(i).sensing_channel] += 1;
                }
                assert!(counts.iter().all(|&c| c == cycles));
            }
        }
    }

    #[test]
    fn schedule_validation() {
        let step = |ch, led, on: Vec<usize>| CaptureStep {
            sensing_channel: ch,
            sensing_led: led,
            illuminators_on: on,
        };
        assert!(CaptureSchedule::new(ScheduleMode::Prototype2, vec![]).is_err());
        assert!(CaptureSchedule::new(
            ScheduleMode::Prototype2,
            vec![step(0, 0, vec![1]), step(0, 1, vec![0])]
        )
        .is_err());
        assert!(CaptureSchedule::new(ScheduleMode::Prototype2, vec![step(0, 0, vec![0])]).is_err());
    }

    #[test]
    fn default_timing_reaches_100_hz() {
        let rate = frame_rate_hz(crate::sim::DEFAULT_STEP_US, 12);
        assert!(rate >= 100.0, "{rate}");
        assert!((frame_rate_hz(1000, 10) - 100.0).abs() < 1e-12);
    }

    #[test]
    fn exposure_rules() {
        let cfg = ExposureConfig::default();
        let s = ExposureState::new(3, &cfg);
        let s1 = adapt_exposure(&s, 1, 1023);
        assert_eq!(s1.exposures(), &[400, 200, 400]);
        assert_eq!(adapt_exposure(&s, 1, 512), s);
        let low = adapt_exposure(&s, 0, 10);
        assert_eq!(low.get(0), 800);
        let at_min = ExposureState::from_parts(vec![50, 400], 50, 800);
        assert_eq!(adapt_exposure(&at_min, 0, 1023).get(0), 50);
        let at_max = ExposureState::from_parts(vec![800, 400], 50, 800);
        assert_eq!(adapt_exposure(&at_max, 0, 0).get(0), 800);
    }

    proptest::proptest! {
        #[test]
        fn exposure_stays_in_bounds(readings in proptest::collection::vec((0usize..4, 0u16..=1023), 0..200)) {
            let cfg = ExposureConfig::default();
            let mut s = ExposureState::new(4, &cfg);
            for (ch, r) in readings {
                let before = s.clone();
                s.adapt(ch, r);
                for (i, e) in s.exposures().iter().enumerate() {
                    proptest::prop_assert!((cfg.min_us..=cfg.max_us).contains(e));
                    if i != ch {
                        proptest::prop_assert_eq!(*e, before.get(i));
                    }
                }
                if r > STARVATION_COUNT && r < SATURATION_COUNT {
                    proptest::prop_assert_eq!(&s, &before);
                }
            }
        }

        #[test]
        fn iir_is_linear(
            xs in proptest::collection::vec(proptest::collection::vec(-1.0..1.0f64, 3), 1..40),
            zs in proptest::collection::vec(proptest::collection::vec(-1.0..1.0f64, 3), 40),
            a in -3.0..3.0f64, b in -3.0..3.0f64, alpha in 0.01..1.0f64,
        ) {
            let init = vec![0.0; 3];
            let mut fx = IirFilter::with_state(alpha, init.clone()).unwrap();
            let mut fz = IirFilter::with_state(alpha, init.clone()).unwrap();
            let mut fc = IirFilter::with_state(alpha, init).unwrap();
            for (x, z) in xs.iter().zip(&zs) {
                let yx = fx.step(x).unwrap();
                let yz = fz.step(z).unwrap();
                let comb: Vec<f64> = x.iter().zip(z).map(|(p, q)| a * p + b * q).collect();
                let yc = fc.step(&comb).unwrap();
                for i in 0..3 {
                    proptest::prop_assert!((yc[i] - (a * yx[i] + b * yz[i])).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn iir_examples() {
        let mut pass = IirFilter::new(1.0).unwrap();
        for v in [0.1, 0.9, 0.4] {
            assert_eq!(pass.step(&[v]).unwrap(), vec![v]);
        }
        let mut half = IirFilter::with_state(0.5, vec![0.0]).unwrap();
        assert_eq!(half.step(&[1.0]).unwrap(), vec![0.5]);
        let mut first = IirFilter::new(0.3).unwrap();
        assert_eq!(first.step(&[0.7, 0.2]).unwrap(), vec![0.7, 0.2]);
        assert!(IirFilter::new(0.0).is_err());
        assert!(IirFilter::new(1.5).is_err());
        assert!(first.step(&[0.7]).is_err());
    }

    #[test]
    fn iir_step_response_matches_closed_form() {
        let alpha = 0.3;
        let (y0, c) = (0.2, 0.9);
        let mut f = IirFilter::with_state(alpha, vec![y0]).unwrap();
        for n in 1..=60 {
            let y = f.step(&[c]).unwrap()[0];
            let expect = (1.0 - alpha).powi(n) * (y0 - c).abs();
            assert!(((c - y).abs() - expect).abs() < 1e-12, "n={n}");
        }
        assert_eq!(f.settle_frames(1e-3), 20);
    }

    #[test]
    fn signal_chain_compensates_exposure() {
        let cfg = SignalConfig::default();
        let chain = SignalChain::new(&cfg).unwrap();
        let frame = SensorFrame::new(0, vec![1023, 200]);
        let x = chain.compensate(&frame, &[400, 200]).unwrap();
        assert_eq!(x[0], 1.0);
        assert!((x[1] - 400.0 / 1023.0).abs() < 1e-15);
        assert!(chain.compensate(&frame, &[400]).is_err());
    }
}
