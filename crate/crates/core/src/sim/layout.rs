use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sigproc::{CaptureSchedule, ScheduleMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LedRole {
    Sense,
    Illuminate,
    Both,
}

impl LedRole {
    pub fn senses(self) -> bool {
        matches!(self, LedRole::Sense | LedRole::Both)
    }
}

/// One LED in the ring around a magnifier lens. Coordinates are millimetres
/// in the ring plane, relative to that eye's lens axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Led {
    pub eye: usize,
    pub x_mm: f64,
    pub y_mm: f64,
    pub role: LedRole,
}

impl Led {
    pub fn on_ring(eye: usize, angle_rad: f64, radius_mm: f64, role: LedRole) -> Self {
        Self {
            eye,
            x_mm: radius_mm * angle_rad.cos(),
            y_mm: radius_mm * angle_rad.sin(),
            role,
        }
    }

    pub fn angle_rad(&self) -> f64 {
        self.y_mm.atan2(self.x_mm)
    }

    pub fn radius_mm(&self) -> f64 {
        self.x_mm.hypot(self.y_mm)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedLayout {
    pub mode: ScheduleMode,
    pub eyes: usize,
    /// Distance from the resting corneal apex to the ring plane.
    pub eye_relief_mm: f64,
    pub leds: Vec<Led>,
}

pub const DEFAULT_RING_RADIUS_MM: f64 = 18.0;
pub const DEFAULT_EYE_RELIEF_MM: f64 = 25.0;

fn mirror(eye: usize, angle: f64) -> f64 {
    if eye == 1 {
        std::f64::consts::PI - angle
    } else {
        angle
    }
}

impl LedLayout {
    /// Six sensing LEDs at 60 degree spacing per eye, with an illuminator
    /// midway between each sensing pair. Per eye the order is
    /// sense, sense, illuminate, repeated three times. The right ring is the
    /// mirror image of the left.
    pub fn prototype1(eyes: usize) -> Self {
        let mut leds = Vec::with_capacity(9 * eyes);
        for eye in 0..eyes {
            for group in 0..3 {
                let a0 = (120.0 * group as f64).to_radians();
                let step = 60f64.to_radians();
                for (angle, role) in [
                    (a0, LedRole::Sense),
                    (a0 + step, LedRole::Sense),
                    (a0 + step / 2.0, LedRole::Illuminate),
                ] {
                    leds.push(Led::on_ring(eye, mirror(eye, angle), DEFAULT_RING_RADIUS_MM, role));
                }
            }
        }
        Self {
            mode: ScheduleMode::Prototype1,
            eyes,
            eye_relief_mm: DEFAULT_EYE_RELIEF_MM,
            leds,
        }
    }

    /// Six dual-role LEDs at 60 degree spacing per eye.
    pub fn prototype2(eyes: usize) -> Self {
        let mut leds = Vec::with_capacity(6 * eyes);
        for eye in 0..eyes {
            for k in 0..6 {
                let angle = (60.0 * k as f64).to_radians();
                leds.push(Led::on_ring(eye, mirror(eye, angle), DEFAULT_RING_RADIUS_MM, LedRole::Both));
            }
        }
        Self {
            mode: ScheduleMode::Prototype2,
            eyes,
            eye_relief_mm: DEFAULT_EYE_RELIEF_MM,
            leds,
        }
    }

    pub fn for_mode(mode: ScheduleMode, eyes: usize) -> Self {
        match mode {
            ScheduleMode::Prototype1 => Self::prototype1(eyes),
            ScheduleMode::Prototype2 => Self::prototype2(eyes),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let per_eye = |role: fn(LedRole) -> bool| -> Vec<usize> {
            (0..self.eyes)
                .map(|e| self.leds.iter().filter(|l| l.eye == e && role(l.role)).count())
                .collect()
        };
        match self.mode {
            ScheduleMode::Prototype1 => {
                let sense = per_eye(|r| r == LedRole::Sense);
                let illum = per_eye(|r| r == LedRole::Illuminate);
                if sense.iter().any(|&n| n != 6) || illum.iter().any(|&n| n != 3) {
                    return Err(Error::arg("prototype 1 needs 6 sensing and 3 illuminating LEDs per eye"));
                }
            }
            ScheduleMode::Prototype2 => {
                let both = per_eye(|r| r == LedRole::Both);
                if both.iter().any(|&n| n != 6) || self.leds.len() != 6 * self.eyes {
                    return Err(Error::arg("prototype 2 needs 6 dual-role LEDs per eye"));
                }
            }
        }
        for (i, a) in self.leds.iter().enumerate() {
            for b in &self.leds[i + 1..] {
                if a.eye == b.eye && (a.x_mm - b.x_mm).hypot(a.y_mm - b.y_mm) < 1e-9 {
                    return Err(Error::arg("two LEDs share a ring position"));
                }
            }
        }
        Ok(())
    }

    /// Layout indices of the sensing LEDs, in capture-vector order.
    pub fn sensing_leds(&self) -> Vec<usize> {
        self.leds
            .iter()
            .enumerate()
            .filter(|(_, l)| l.role.senses())
            .map(|(i, _)| i)
            .collect()
    }

    pub fn channel_count(&self) -> usize {
        self.sensing_leds().len()
    }

    pub fn schedule(&self) -> CaptureSchedule {
        match self.mode {
            ScheduleMode::Prototype1 => CaptureSchedule::prototype1(self.eyes),
            ScheduleMode::Prototype2 => CaptureSchedule::prototype2(6, self.eyes),
        }
    }
}

/// Rigid translation of the headset relative to the face, starting at
/// `onset_us`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeadsetShift {
    pub translation_mm: [f64; 2],
    pub onset_us: u64,
}

/// Moves every LED by the shift's translation.
pub fn apply_shift(layout: &LedLayout, shift: &HeadsetShift) -> LedLayout {
    let mut out = layout.clone();
    for led in &mut out.leds {
        led.x_mm += shift.translation_mm[0];
        led.y_mm += shift.translation_mm[1];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_layouts_are_valid() {
        for layout in [LedLayout::prototype1(2), LedLayout::prototype2(2)] {
            layout.validate().unwrap();
            assert_eq!(layout.channel_count(), 12);
            assert_eq!(layout.schedule().channel_count(), 12);
        }
    }

    #[test]
    fn schedule_matches_layout_roles() {
        for layout in [LedLayout::prototype1(2), LedLayout::prototype2(2)] {
            let sensing = layout.sensing_leds();
            for step in layout.schedule().steps() {
                assert_eq!(sensing[step.sensing_channel], step.sensing_led);
                for &i in &step.illuminators_on {
                    assert_eq!(layout.leds[i].eye, layout.leds[step.sensing_led].eye);
                    assert_ne!(layout.leds[i].role, LedRole::Sense);
                }
            }
        }
    }

    #[test]
    fn prototype1_illuminator_sits_between_pair() {
        let l = LedLayout::prototype1(1);
        let mid = (l.leds[0].angle_rad() + l.leds[1].angle_rad()) / 2.0;
        assert!((l.leds[2].angle_rad() - mid).abs() < 1e-12);
        assert!((l.leds[0].radius_mm() - DEFAULT_RING_RADIUS_MM).abs() < 1e-12);
    }

    #[test]
    fn invalid_layouts() {
        let mut l = LedLayout::prototype2(1);
        l.leds[1] = l.leds[0];
        assert!(l.validate().is_err());
        let mut l = LedLayout::prototype1(1);
        l.leds.pop();
        assert!(l.validate().is_err());
    }

    #[test]
    fn shift_round_trip() {
        let l = LedLayout::prototype1(2);
        let zero = HeadsetShift {
            translation_mm: [0.0, 0.0],
            onset_us: 0,
        };
        assert_eq!(apply_shift(&l, &zero), l);
        let s = HeadsetShift {
            translation_mm: [1.7, -0.3],
            onset_us: 0,
        };
        let inv = HeadsetShift {
            translation_mm: [-1.7, 0.3],
            onset_us: 0,
        };
        let back = apply_shift(&apply_shift(&l, &s), &inv);
        for (a, b) in back.leds.iter().zip(&l.leds) {
            assert!((a.x_mm - b.x_mm).abs() < 1e-12 && (a.y_mm - b.y_mm).abs() < 1e-12);
        }
    }
}
