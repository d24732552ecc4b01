use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::derive_seed;
use crate::error::{Error, Result};

/// Synthetic subject. Every magnitude here is a simulator parameter, not a
/// measured property of real eyes or hardware.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectProfile {
    /// Eye rotation centre relative to the left lens axis; the right eye
    /// uses the mirror image.
    pub eye_center_offset_mm: [f64; 2],
    /// Rotation centre to corneal apex.
    pub eye_radius_mm: f64,
    /// Per-LED sensing gain, indexed like the layout.
    pub corneal_gain: Vec<f64>,
    /// Additive reading noise, normalized units.
    pub noise_std: f64,
    pub srt_mean_ms: f64,
    pub srt_std_ms: f64,
    pub blink_rate_per_min: f64,
    pub blink_duration_ms: f64,
    pub seed: u64,
}

pub const DEFAULT_NOISE_STD: f64 = 0.01;

impl SubjectProfile {
    /// A centred subject with unit gains.
    pub fn nominal(led_count: usize, seed: u64) -> Self {
        Self {
            eye_center_offset_mm: [0.0, 0.0],
            eye_radius_mm: 12.0,
            corneal_gain: vec![1.0; led_count],
            noise_std: DEFAULT_NOISE_STD,
            srt_mean_ms: 200.0,
            srt_std_ms: 30.0,
            blink_rate_per_min: 10.0,
            blink_duration_ms: 150.0,
            seed,
        }
    }

    /// Draws a subject: eye position, size and per-LED gains vary with seed.
    pub fn random(led_count: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0x05AB_1EC7));
        let offset = Normal::new(0.0, 1.2).expect("valid normal");
        Self {
            eye_center_offset_mm: [offset.sample(&mut rng), offset.sample(&mut rng)],
            eye_radius_mm: rng.random_range(11.3..12.7),
            corneal_gain: (0..led_count).map(|_| rng.random_range(0.8..1.2)).collect(),
            noise_std: DEFAULT_NOISE_STD,
            srt_mean_ms: rng.random_range(170.0..260.0),
            srt_std_ms: 30.0,
            blink_rate_per_min: rng.random_range(6.0..14.0),
            blink_duration_ms: 150.0,
            seed,
        }
    }

    pub fn validate(&self, led_count: usize) -> Result<()> {
        Error::check_dim(led_count, self.corneal_gain.len())?;
        if self.corneal_gain.iter().any(|&g| !(g > 0.0)) {
            return Err(Error::arg("corneal gains must be positive"));
        }
        if !(self.noise_std >= 0.0) {
            return Err(Error::arg("noise_std must be >= 0"));
        }
        if !(self.srt_mean_ms >= 0.0) || !(self.srt_std_ms >= 0.0) {
            return Err(Error::arg("srt_mean and srt_std must be >= 0"));
        }
        if !(self.eye_radius_mm > 0.0) {
            return Err(Error::arg("eye radius must be positive"));
        }
        if !(self.blink_rate_per_min >= 0.0) || !(self.blink_duration_ms >= 0.0) {
            return Err(Error::arg("blink parameters must be >= 0"));
        }
        Ok(())
    }

    /// Saccadic reaction time, normal and truncated at zero.
    pub fn sample_srt_us(&self, rng: &mut impl Rng) -> u64 {
        let srt = if self.srt_std_ms > 0.0 {
            Normal::new(self.srt_mean_ms, self.srt_std_ms)
                .expect("validated std")
                .sample(rng)
        } else {
            self.srt_mean_ms
        };
        (srt.max(0.0) * 1000.0).round() as u64
    }
}
