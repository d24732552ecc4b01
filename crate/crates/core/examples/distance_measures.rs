//! The distance measures available to GPR, on a pair of vectors and on a
//! full session.
//!
//! ```text
//! cargo run --release --example distance_measures
//! ```

use ledgaze::config::SessionConfig;
use ledgaze::eval::compare::gpr_measures;
use ledgaze::session::{evaluate_session, run_session};

fn main() -> ledgaze::Result<()> {
    let a = [0.42, 0.37, 0.55, 0.61];
    let b = [0.40, 0.45, 0.50, 0.66];
    for m in gpr_measures() {
        println!("{:<10} d(a, b) = {:.5}", m.name(), m.eval(&a, &b)?);
    }

    let mut cfg = SessionConfig::default();
    let out = run_session(&cfg)?;
    println!();
    for m in gpr_measures() {
        cfg.measure = m;
        let (r, _) = evaluate_session(&cfg, &out.log, &out.calibration)?;
        println!("{:<18} mean {:.3} deg  median {:.3} deg", r.method, r.mean_deg, r.median_deg);
    }
    Ok(())
}
