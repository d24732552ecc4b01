use std::ops::Range;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::optics::{clean_signal, draw_noise, eyelid_signal, quantize, OpticsConfig};
use super::{apply_shift, derive_seed, GazeScript, HeadsetShift, LedLayout, ScriptEvent, SubjectProfile};
use crate::error::{Error, Result};
use crate::geometry::{DisplayGeometry, ScreenPoint, ADC_MAX};
use crate::log::{Event, EventRecord, FrameRecord, LogRecord, Phase, SessionLog};
use crate::sigproc::{CaptureSchedule, ExposureConfig, ExposureState};

/// Capture step length; twelve steps give a 104 Hz frame rate.
pub const DEFAULT_STEP_US: u32 = 800;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub geometry: DisplayGeometry,
    pub step_us: u32,
    pub optics: OpticsConfig,
    pub exposure: ExposureConfig,
    pub adc_max: u16,
    pub adapt_exposure: bool,
}

impl SimConfig {
    pub fn for_layout(layout: &LedLayout) -> Self {
        Self {
            geometry: DisplayGeometry::default(),
            step_us: DEFAULT_STEP_US,
            optics: OpticsConfig::for_mode(layout.mode),
            exposure: ExposureConfig::default(),
            adc_max: ADC_MAX,
            adapt_exposure: true,
        }
    }
}

const NOISE_STREAM: u64 = 0x004E_015E;
const SRT_STREAM: u64 = 0x5A7C_CADE;

/// Stateful simulator: keeps the clock, gaze, pending saccade, exposure and
/// headset pose across successive scripts, and appends everything to its
/// session log.
#[derive(Debug, Clone)]
pub struct Simulator {
    base_layout: LedLayout,
    layout: LedLayout,
    subject: SubjectProfile,
    schedule: CaptureSchedule,
    config: SimConfig,
    exposure: ExposureState,
    frame_index: u64,
    target: Option<ScreenPoint>,
    gaze: Option<ScreenPoint>,
    pending: Option<(u64, ScreenPoint, u64)>,
    moves: u64,
    segment: u32,
    shift: Option<HeadsetShift>,
    shift_applied: bool,
    noise_seed: u64,
    srt_seed: u64,
    log: SessionLog,
}

impl Simulator {
    pub fn new(layout: LedLayout, subject: SubjectProfile, config: SimConfig, seed: u64) -> Result<Self> {
        let schedule = layout.schedule();
        Self::with_schedule(layout, subject, schedule, config, seed)
    }

    pub fn with_schedule(
        layout: LedLayout,
        subject: SubjectProfile,
        schedule: CaptureSchedule,
        config: SimConfig,
        seed: u64,
    ) -> Result<Self> {
        layout.validate()?;
        subject.validate(layout.leds.len())?;
        config.geometry.validate()?;
        config.exposure.validate()?;
        if config.step_us == 0 {
            return Err(Error::arg("capture step must be positive"));
        }
        let channels = layout.channel_count();
        Error::check_dim(channels, schedule.channel_count())?;
        for s in schedule.steps() {
            if s.sensing_led >= layout.leds.len() || s.illuminators_on.iter().any(|&i| i >= layout.leds.len()) {
                return Err(Error::arg("schedule refers to an LED outside the layout"));
            }
        }
        let period = u64::from(config.step_us) * schedule.cycle_len() as u64;
        let log = SessionLog::new(channels, period, seed);
        Ok(Self {
            base_layout: layout.clone(),
            layout,
            exposure: ExposureState::new(channels, &config.exposure),
            subject,
            schedule,
            config,
            frame_index: 0,
            target: None,
            gaze: None,
            pending: None,
            moves: 0,
            segment: 0,
            shift: None,
            shift_applied: false,
            noise_seed: derive_seed(seed, NOISE_STREAM),
            srt_seed: derive_seed(seed, SRT_STREAM),
            log,
        })
    }

    /// Where the eye rests before the first fixation. Without this the eye
    /// starts on the first target.
    pub fn with_initial_gaze(mut self, gaze: ScreenPoint) -> Self {
        self.gaze = Some(gaze);
        self
    }

    pub fn schedule_shift(&mut self, shift: HeadsetShift) {
        self.shift = Some(shift);
        self.shift_applied = false;
    }

    pub fn frame_period_us(&self) -> u64 {
        self.log.header.frame_period_us
    }

    pub fn clock_us(&self) -> u64 {
        self.frame_index * self.frame_period_us()
    }

    pub fn channel_count(&self) -> usize {
        self.schedule.channel_count()
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn subject(&self) -> &SubjectProfile {
        &self.subject
    }

    pub fn layout(&self) -> &LedLayout {
        &self.layout
    }

    pub fn log(&self) -> &SessionLog {
        &self.log
    }

    pub fn log_mut(&mut self) -> &mut SessionLog {
        &mut self.log
    }

    pub fn into_log(self) -> SessionLog {
        self.log
    }

    fn frames_for(&self, duration_ms: f64) -> u64 {
        ((duration_ms * 1000.0) / self.frame_period_us() as f64).round().max(0.0) as u64
    }

    fn event(&mut self, t: u64, event: Event) {
        self.log.push(LogRecord::Event(EventRecord { t, event }));
    }

    fn move_target(&mut self, to: ScreenPoint) {
        let t = self.clock_us();
        let from = self.target;
        self.target = Some(to);
        self.event(t, Event::TargetMove { from, to });
        if self.gaze.is_none() {
            // The eye starts out on the first target.
            self.gaze = Some(to);
            self.pending = None;
            return;
        }
        if self.gaze == Some(to) {
            self.pending = None;
            return;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.srt_seed);
        rng.set_stream(self.moves);
        self.moves += 1;
        let srt_us = self.subject.sample_srt_us(&mut rng);
        let delay = srt_us.div_ceil(self.frame_period_us());
        self.pending = Some((self.frame_index + delay, to, srt_us));
    }

    /// Blink eyelid closure in [0, 1] at `t` for a blink spanning
    /// `[start, end)`.
    fn lid(&self, blink: Option<(u64, u64)>, t: u64) -> f64 {
        let Some((start, end)) = blink else { return 0.0 };
        if t < start || t >= end {
            return 0.0;
        }
        let ramp = (self.config.optics.blink_ramp_ms * 1000.0).min((end - start) as f64 / 2.0);
        if ramp <= 0.0 {
            return 1.0;
        }
        let from_start = (t - start) as f64;
        let to_end = (end - t) as f64;
        (from_start / ramp).min(to_end / ramp).min(1.0)
    }

    fn capture_frame(&mut self, phase: Phase, blink: Option<(u64, u64)>) {
        let t = self.clock_us();
        if let Some(shift) = self.shift {
            if !self.shift_applied && t >= shift.onset_us {
                self.layout = apply_shift(&self.base_layout, &shift);
                self.shift_applied = true;
                self.event(t, Event::HeadsetShift {
                    translation_mm: shift.translation_mm,
                });
            }
        }
        if let Some((at, to, srt_us)) = self.pending {
            if self.frame_index >= at {
                self.gaze = Some(to);
                self.pending = None;
                self.event(t, Event::SaccadeOnset { to, srt_us });
            }
        }
        let gaze = self.gaze.unwrap_or_else(|| self.config.geometry.center());

        let mut rng = ChaCha8Rng::seed_from_u64(self.noise_seed);
        rng.set_stream(self.frame_index);
        let channels = self.channel_count();
        let mut readings = vec![0u16; channels];
        let mut exposures = vec![0u32; channels];
        let mut any_lid = false;
        let reference = f64::from(self.config.exposure.reference_us);
        for (k, step) in self.schedule.steps().iter().enumerate() {
            let ts = t + k as u64 * u64::from(self.config.step_us);
            let lid = self.lid(blink, ts);
            any_lid |= lid > 0.0;
            let open = clean_signal(&self.layout, &self.subject, &self.config.optics, &self.config.geometry, &gaze, step);
            let closed = eyelid_signal(&self.subject, &self.config.optics, step);
            let ch = step.sensing_channel;
            let exposure = self.exposure.get(ch);
            let scale = f64::from(exposure) / reference;
            let value = scale * ((1.0 - lid) * open + lid * closed) + draw_noise(self.subject.noise_std, &mut rng);
            let reading = quantize(value, self.config.adc_max);
            readings[ch] = reading;
            exposures[ch] = exposure;
            if self.config.adapt_exposure {
                self.exposure.adapt(ch, reading);
            }
        }
        self.log.push(LogRecord::Frame(FrameRecord {
            i: self.frame_index,
            t,
            phase,
            segment: self.segment,
            target: self.target,
            gaze,
            blink: any_lid,
            channels: readings,
            exposure: exposures,
        }));
        self.frame_index += 1;
    }

    /// Plays `script` and returns the range of log records it produced.
    pub fn run(&mut self, script: &GazeScript, phase: Phase) -> Result<Range<usize>> {
        script.validate(&self.config.geometry)?;
        let start = self.log.records.len();
        for event in &script.events {
            let frames = self.frames_for(event.duration_ms());
            match event {
                ScriptEvent::Fixation { target, .. } => {
                    if self.target != Some(*target) {
                        self.move_target(*target);
                    }
                    for _ in 0..frames {
                        self.capture_frame(phase, None);
                    }
                }
                ScriptEvent::Blink { .. } => {
                    if frames == 0 {
                        continue;
                    }
                    let t0 = self.clock_us();
                    let t1 = t0 + frames * self.frame_period_us();
                    self.event(t0, Event::BlinkStart);
                    for _ in 0..frames {
                        self.capture_frame(phase, Some((t0, t1)));
                    }
                    self.event(t1, Event::BlinkEnd);
                }
            }
            self.segment += 1;
        }
        Ok(start..self.log.records.len())
    }

    /// Frames among `records[range]`.
    pub fn frames_in(&self, range: Range<usize>) -> impl Iterator<Item = &FrameRecord> {
        self.log.records[range].iter().filter_map(|r| match r {
            LogRecord::Frame(f) => Some(f),
            _ => None,
        })
    }
}

/// Runs one script from a fresh simulator and returns its log.
pub fn run_script(
    layout: &LedLayout,
    subject: &SubjectProfile,
    script: &GazeScript,
    schedule: &CaptureSchedule,
    config: &SimConfig,
    seed: u64,
) -> Result<SessionLog> {
    let period_ms = f64::from(config.step_us) * schedule.cycle_len() as f64 / 1000.0;
    if script.duration_ms() < period_ms {
        return Err(Error::arg(format!(
            "script lasts {} ms, shorter than one {period_ms} ms capture cycle",
            script.duration_ms()
        )));
    }
    let mut sim = Simulator::with_schedule(layout.clone(), subject.clone(), schedule.clone(), config.clone(), seed)?;
    sim.run(script, Phase::Script)?;
    Ok(sim.into_log())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quiet_setup() -> (LedLayout, SubjectProfile, SimConfig) {
        let layout = LedLayout::prototype1(2);
        let mut subject = SubjectProfile::nominal(layout.leds.len(), 3);
        subject.noise_std = 0.0;
        let config = SimConfig::for_layout(&layout);
        (layout, subject, config)
    }

    #[test]
    fn single_fixation_without_noise_is_constant() {
        let (layout, subject, config) = quiet_setup();
        let script = GazeScript::fixation(ScreenPoint::new(140.0, 260.0), 500.0);
        let log = run_script(&layout, &subject, &script, &layout.schedule(), &config, 9).unwrap();
        let frames: Vec<_> = log.frames().collect();
        assert_eq!(frames.len(), 52);
        assert!(frames.iter().all(|f| f.channels == frames[0].channels));
        assert!(frames.windows(2).all(|w| w[1].t > w[0].t));
    }

    #[test]
    fn one_blink_is_annotated_and_visible() {
        let (layout, subject, config) = quiet_setup();
        let p = ScreenPoint::new(250.0, 200.0);
        let script = GazeScript::fixation(p, 300.0).then_blink(150.0).then_fixate(p, 300.0);
        let log = run_script(&layout, &subject, &script, &layout.schedule(), &config, 9).unwrap();
        let starts = log.events().filter(|e| e.event == Event::BlinkStart).count();
        let ends = log.events().filter(|e| e.event == Event::BlinkEnd).count();
        assert_eq!((starts, ends), (1, 1));
        let frames: Vec<_> = log.frames().collect();
        let clean = &frames[0].channels;
        let blinks: Vec<_> = frames.iter().filter(|f| f.blink).collect();
        assert!(!blinks.is_empty());
        assert!(blinks.iter().all(|f| &f.channels != clean));
        assert!(frames.iter().filter(|f| !f.blink).all(|f| &f.channels == clean));
    }

    #[test]
    fn deterministic_srt_delays_gaze() {
        let (layout, mut subject, config) = quiet_setup();
        subject.srt_mean_ms = 200.0;
        subject.srt_std_ms = 0.0;
        let geom = config.geometry;
        let target = ScreenPoint::new(60.0, 60.0);
        let mut sim = Simulator::new(layout, subject, config, 1).unwrap().with_initial_gaze(geom.center());
        sim.run(&GazeScript::fixation(target, 400.0), Phase::Script).unwrap();
        let first = sim.log().frames().find(|f| f.gaze == target).unwrap();
        let period = sim.frame_period_us();
        assert!(first.t >= 200_000 && first.t < 200_000 + period, "{}", first.t);
        assert!(sim.log().frames().take_while(|f| f.gaze != target).all(|f| f.in_transition()));
    }

    #[test]
    fn identical_inputs_give_identical_logs() {
        let layout = LedLayout::prototype2(2);
        let subject = SubjectProfile::random(layout.leds.len(), 5);
        let config = SimConfig::for_layout(&layout);
        let script = GazeScript::fixation(ScreenPoint::new(100.0, 100.0), 300.0)
            .then_fixate(ScreenPoint::new(400.0, 300.0), 500.0)
            .then_blink(120.0);
        let a = run_script(&layout, &subject, &script, &layout.schedule(), &config, 77).unwrap();
        let b = run_script(&layout, &subject, &script, &layout.schedule(), &config, 77).unwrap();
        assert_eq!(a.to_jsonl_string().unwrap(), b.to_jsonl_string().unwrap());
        let c = run_script(&layout, &subject, &script, &layout.schedule(), &config, 78).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn zero_gain_only_touches_its_channel() {
        let (layout, subject, config) = quiet_setup();
        let script = GazeScript::fixation(ScreenPoint::new(300.0, 150.0), 100.0);
        let base = run_script(&layout, &subject, &script, &layout.schedule(), &config, 2).unwrap();
        let sensing = layout.sensing_leds();
        let mut dimmed = subject.clone();
        dimmed.corneal_gain[sensing[4]] = 1e-12;
        let other = run_script(&layout, &dimmed, &script, &layout.schedule(), &config, 2).unwrap();
        for (a, b) in base.frames().zip(other.frames()) {
            for ch in 0..12 {
                if ch == 4 {
                    assert_ne!(a.channels[ch], b.channels[ch]);
                } else {
                    assert_eq!(a.channels[ch], b.channels[ch]);
                }
            }
        }
    }

    #[test]
    fn short_script_rejected() {
        let (layout, subject, config) = quiet_setup();
        let script = GazeScript::fixation(ScreenPoint::new(10.0, 10.0), 5.0);
        assert!(run_script(&layout, &subject, &script, &layout.schedule(), &config, 0).is_err());
    }

    #[test]
    fn subjects_with_different_eye_positions_read_differently() {
        let (layout, subject, config) = quiet_setup();
        let mut moved = subject.clone();
        moved.eye_center_offset_mm = [1.5, -1.0];
        let script = GazeScript::fixation(ScreenPoint::new(250.0, 200.0), 100.0);
        let a = run_script(&layout, &subject, &script, &layout.schedule(), &config, 0).unwrap();
        let b = run_script(&layout, &moved, &script, &layout.schedule(), &config, 0).unwrap();
        let fa = a.frames().next().unwrap();
        let fb = b.frames().next().unwrap();
        assert_ne!(fa.channels, fb.channels);
    }
}
