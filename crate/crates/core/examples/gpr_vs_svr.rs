//! GPR with Minkowski distance against the RBF-weighted SVR on one session.
//!
//! ```text
//! cargo run --release --example gpr_vs_svr -- [seed]
//! ```

use ledgaze::config::SessionConfig;
use ledgaze::eval::compare_estimators;
use ledgaze::session::run_session;

fn main() -> ledgaze::Result<()> {
    let mut cfg = SessionConfig::default();
    if let Some(seed) = std::env::args().nth(1).and_then(|s| s.parse().ok()) {
        cfg.seed = seed;
    }
    let out = run_session(&cfg)?;
    let c = compare_estimators(&cfg, &out.log, &out.calibration, false)?;
    println!("calibration entries: {}", out.calibration.len());
    println!("svr sigma (leave-one-out): {:.4}", c.sigma.sigma);
    for r in [&c.gpr, &c.svr] {
        println!(
            "{:<14} mean {:.3} deg  median {:.3} deg  std {:.3} deg  ({} frames)",
            r.method, r.mean_deg, r.median_deg, r.std_deg, r.frames_used
        );
    }
    println!("paired mean difference {:+.3} deg", c.paired_mean_diff_deg);
    Ok(())
}
