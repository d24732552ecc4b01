//! Selection tasks where every failed task adds a calibration entry, in
//! each of the three starting conditions.
//!
//! ```text
//! cargo run --release --example online_training -- [seeds]
//! ```

use ledgaze::config::SessionConfig;
use ledgaze::eval::run_scenarios;

fn main() -> ledgaze::Result<()> {
    let n: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(6);
    let cfg = SessionConfig::default();
    let seeds: Vec<u64> = (1..=n).collect();
    let report = run_scenarios(&cfg, &seeds)?;
    for s in &report.sessions {
        println!(
            "seed {:>2} {:<17} success {:.2} (first half {:.2}, second half {:.2})  calibration {} -> {}",
            s.seed,
            s.scenario.name(),
            s.success_ratio,
            s.first_half_ratio,
            s.second_half_ratio,
            s.calibration_start,
            s.calibration_end
        );
    }
    println!();
    for s in &report.summary {
        println!(
            "{:<17} median {:.3}  quartiles {:.3}..{:.3}",
            s.scenario.name(),
            s.median,
            s.q1,
            s.q3
        );
    }
    Ok(())
}
