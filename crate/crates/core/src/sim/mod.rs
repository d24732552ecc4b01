//! Deterministic synthetic stand-in for the LED ring hardware and its wearer.
//!
//! The optical model is a smooth reflectance proxy chosen so that readings
//! depend on gaze direction, eye placement and per-LED gain. All magnitudes
//! are simulator parameters.

mod engine;
mod layout;
pub mod optics;
mod script;
mod subject;

pub use engine::{run_script, SimConfig, Simulator, DEFAULT_STEP_US};
pub use layout::{apply_shift, HeadsetShift, Led, LedLayout, LedRole};
pub use optics::{sense, OpticsConfig};
pub use script::{random_point, GazeScript, ScriptEvent};
pub use subject::{SubjectProfile, DEFAULT_NOISE_STD};

/// Mixes a user seed with a stream tag (splitmix64 finalizer).
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
