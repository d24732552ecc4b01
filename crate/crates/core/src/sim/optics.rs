//! Reflectance proxy for an LED ring in front of a rotating eye.
//!
//! The corneal apex sits `eye_radius` in front of the rotation centre along
//! the gaze direction. For an illuminator/sensor pair the specular response
//! is a cosine lobe of the angle between the corneal normal (the gaze
//! direction) and the half-vector of the two LED directions seen from the
//! apex. A constant diffuse floor is added on top.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{LedLayout, SubjectProfile};
use crate::geometry::{DisplayGeometry, ScreenPoint};
use crate::sigproc::{CaptureStep, ScheduleMode};

/// Resting apex distance used to place the LED ring plane.
pub const NOMINAL_APEX_MM: f64 = 12.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpticsConfig {
    /// Diffuse floor, normalized units at reference exposure.
    pub baseline: f64,
    /// Peak specular contribution of one illuminator.
    pub amplitude: f64,
    pub lobe_exponent: f64,
    /// Reading level with the eyelid fully closed.
    pub eyelid_level: f64,
    pub blink_ramp_ms: f64,
}

impl OpticsConfig {
    pub fn for_mode(mode: ScheduleMode) -> Self {
        let amplitude = match mode {
            ScheduleMode::Prototype1 => 0.7,
            // five illuminators share the capture
            ScheduleMode::Prototype2 => 0.25,
        };
        Self {
            baseline: 0.12,
            amplitude,
            lobe_exponent: 4.0,
            eyelid_level: 0.75,
            blink_ramp_ms: 50.0,
        }
    }
}

type V3 = [f64; 3];

fn sub(a: V3, b: V3) -> V3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn add(a: V3, b: V3) -> V3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn dot(a: V3, b: V3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn unit(a: V3) -> V3 {
    let n = dot(a, a).sqrt();
    [a[0] / n, a[1] / n, a[2] / n]
}

/// Gaze direction for a point on the image plane: +x right, +y up, +z
/// toward the display.
pub fn gaze_direction(gaze: &ScreenPoint, geom: &DisplayGeometry) -> V3 {
    let c = geom.center();
    let h = ((gaze.x - c.x) * geom.degrees_per_pixel).to_radians();
    let v = ((c.y - gaze.y) * geom.degrees_per_pixel).to_radians();
    [h.sin() * v.cos(), v.sin(), h.cos() * v.cos()]
}

fn eye_center(subject: &SubjectProfile, eye: usize) -> V3 {
    let [ox, oy] = subject.eye_center_offset_mm;
    let sx = if eye == 1 { -ox } else { ox };
    [sx, oy, 0.0]
}

fn led_position(layout: &LedLayout, led: usize) -> V3 {
    let l = &layout.leds[led];
    [l.x_mm, l.y_mm, NOMINAL_APEX_MM + layout.eye_relief_mm]
}

/// Specular lobe for one illuminator/sensor pair.
pub fn lobe(layout: &LedLayout, subject: &SubjectProfile, optics: &OpticsConfig, gaze_dir: V3, illuminator: usize, sensor: usize) -> f64 {
    let eye = layout.leds[sensor].eye;
    let apex = add(eye_center(subject, eye), gaze_dir.map(|g| g * subject.eye_radius_mm));
    let to_illum = unit(sub(led_position(layout, illuminator), apex));
    let to_sensor = unit(sub(led_position(layout, sensor), apex));
    let half = unit(add(to_illum, to_sensor));
    let c = dot(gaze_dir, half);
    if c <= 0.0 {
        0.0
    } else {
        c.powf(optics.lobe_exponent)
    }
}

/// Noise-free reading of one capture at the reference exposure, in
/// normalized units (may exceed 1 before clamping).
pub fn clean_signal(
    layout: &LedLayout,
    subject: &SubjectProfile,
    optics: &OpticsConfig,
    geom: &DisplayGeometry,
    gaze: &ScreenPoint,
    step: &CaptureStep,
) -> f64 {
    let dir = gaze_direction(gaze, geom);
    let specular: f64 = step
        .illuminators_on
        .iter()
        .map(|&j| lobe(layout, subject, optics, dir, j, step.sensing_led))
        .sum();
    subject.corneal_gain[step.sensing_led] * (optics.baseline + optics.amplitude * specular)
}

/// Reading with the eyelid fully closed.
pub fn eyelid_signal(subject: &SubjectProfile, optics: &OpticsConfig, step: &CaptureStep) -> f64 {
    subject.corneal_gain[step.sensing_led] * optics.eyelid_level
}

/// Clamps to [0, 1] and rounds to the nearest count.
pub fn quantize(value: f64, adc_max: u16) -> u16 {
    (value.clamp(0.0, 1.0) * f64::from(adc_max)).round() as u16
}

/// One simulated ADC reading: the clean signal scaled by exposure, plus
/// Gaussian noise, clamped and quantized.
#[allow(clippy::too_many_arguments)]
pub fn sense(
    layout: &LedLayout,
    subject: &SubjectProfile,
    optics: &OpticsConfig,
    geom: &DisplayGeometry,
    gaze: &ScreenPoint,
    step: &CaptureStep,
    exposure_us: u32,
    reference_us: u32,
    adc_max: u16,
    rng: &mut impl Rng,
) -> u16 {
    let scale = f64::from(exposure_us) / f64::from(reference_us);
    let noise = draw_noise(subject.noise_std, rng);
    quantize(scale * clean_signal(layout, subject, optics, geom, gaze, step) + noise, adc_max)
}

pub(crate) fn draw_noise(std: f64, rng: &mut impl Rng) -> f64 {
    if std > 0.0 {
        Normal::new(0.0, std).expect("validated std").sample(rng)
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::LedLayout;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup() -> (LedLayout, SubjectProfile, OpticsConfig, DisplayGeometry) {
        let layout = LedLayout::prototype1(2);
        let mut subject = SubjectProfile::nominal(layout.leds.len(), 1);
        subject.noise_std = 0.0;
        let optics = OpticsConfig::for_mode(layout.mode);
        (layout, subject, optics, DisplayGeometry::default())
    }

    #[test]
    fn noiseless_reading_is_repeatable() {
        let (layout, subject, optics, geom) = setup();
        let step = &layout.schedule().steps()[3].clone();
        let gaze = ScreenPoint::new(120.0, 300.0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let a = sense(&layout, &subject, &optics, &geom, &gaze, step, 400, 400, 1023, &mut rng);
        let b = sense(&layout, &subject, &optics, &geom, &gaze, step, 400, 400, 1023, &mut rng);
        assert_eq!(a, b);
    }

    #[test]
    fn looking_toward_a_pair_raises_its_reading() {
        // Left eye, first pair sits at 0..60 degrees on the ring: toward is
        // right and up on the image plane, away is left and down.
        let (layout, subject, optics, geom) = setup();
        let step = &layout.schedule().steps()[0].clone();
        let c = geom.center();
        let toward = ScreenPoint::new(c.x + 150.0, c.y - 90.0);
        let away = ScreenPoint::new(c.x - 150.0, c.y + 90.0);
        let st = clean_signal(&layout, &subject, &optics, &geom, &toward, step);
        let sa = clean_signal(&layout, &subject, &optics, &geom, &away, step);
        assert!(st > sa, "{st} vs {sa}");
    }

    #[test]
    fn exposure_is_linear() {
        let (layout, subject, optics, geom) = setup();
        let step = &layout.schedule().steps()[1].clone();
        let gaze = geom.center();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let full = sense(&layout, &subject, &optics, &geom, &gaze, step, 400, 400, 1023, &mut rng);
        let half = sense(&layout, &subject, &optics, &geom, &gaze, step, 200, 400, 1023, &mut rng);
        assert!(full > 100 && full < 1000);
        assert!((i32::from(full) - 2 * i32::from(half)).abs() <= 1);
    }

    #[test]
    fn adding_an_illuminator_never_lowers_the_signal() {
        let (_, subject, optics, geom) = setup();
        let layout = LedLayout::prototype2(2);
        let subject = SubjectProfile {
            corneal_gain: vec![1.0; layout.leds.len()],
            ..subject
        };
        let step = layout.schedule().steps()[0].clone();
        let mut fewer = step.clone();
        fewer.illuminators_on.pop();
        for gx in [50.0, 250.0, 450.0] {
            let gaze = ScreenPoint::new(gx, 200.0);
            let a = clean_signal(&layout, &subject, &optics, &geom, &gaze, &step);
            let b = clean_signal(&layout, &subject, &optics, &geom, &gaze, &fewer);
            assert!(a >= b);
        }
    }

    #[test]
    fn quantize_clamps() {
        assert_eq!(quantize(-0.2, 1023), 0);
        assert_eq!(quantize(1.7, 1023), 1023);
        assert_eq!(quantize(0.5, 1023), 512);
    }
}
