//! The headset slides during evaluation; the calibration no longer fits.
//!
//! ```text
//! cargo run --release --example headset_shift
//! ```

use ledgaze::config::SessionConfig;
use ledgaze::session::{evaluate_session, run_session_with, Stages};
use ledgaze::sim::HeadsetShift;

fn main() -> ledgaze::Result<()> {
    let cfg = SessionConfig::default();
    for mm in [0.0, 0.25, 0.5, 1.0, 2.0] {
        let shift = HeadsetShift {
            translation_mm: [mm, 0.0],
            onset_us: 0,
        };
        let out = run_session_with(&cfg, Stages::ALL, Some(shift))?;
        let (r, _) = evaluate_session(&cfg, &out.log, &out.calibration)?;
        println!("shift {mm:>4.2} mm  mean {:.3} deg  median {:.3} deg", r.mean_deg, r.median_deg);
    }
    Ok(())
}
