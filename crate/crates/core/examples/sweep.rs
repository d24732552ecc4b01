//! Mean error as LEDs are removed and as the calibration grid shrinks.
//!
//! ```text
//! cargo run --release --example sweep
//! ```

use ledgaze::config::SessionConfig;
use ledgaze::eval::{sweep, SweepAxis};

fn main() -> ledgaze::Result<()> {
    let cfg = SessionConfig::default();
    let led = sweep(&cfg, SweepAxis::LedCount, &cfg.sweep.led_counts)?;
    println!("channels by calibration spread: {:?}", led.channel_rank);
    for r in &led.rows {
        println!("{:>2} LEDs      mean {:.3} deg  median {:.3} deg", r.value, r.mean_deg, r.median_deg);
    }
    let grid = sweep(&cfg, SweepAxis::CalibrationPoints, &cfg.sweep.calibration_points)?;
    for r in &grid.rows {
        println!("{:>2} points    mean {:.3} deg  median {:.3} deg", r.value, r.mean_deg, r.median_deg);
    }
    Ok(())
}
