//! 4x4 grid calibration on a simulated wearer, then GPR on the result.
//!
//! ```text
//! cargo run --release --example calibrate_grid
//! ```

use ledgaze::config::SessionConfig;
use ledgaze::session::{calibrate_on, simulator};
use ledgaze::{GazeEstimator, GprModel, MeasureSpec};

fn main() -> ledgaze::Result<()> {
    let cfg = SessionConfig::default();
    let mut sim = simulator(&cfg)?;
    let run = calibrate_on(&mut sim, &cfg)?;
    println!(
        "{} targets shown, {} accepted, {} dropped",
        run.shown.len(),
        run.set.len(),
        run.dropped.len()
    );

    let model = GprModel::new(run.set.clone(), MeasureSpec::euclidean())?;
    for e in run.set.entries().iter().take(4) {
        let p = model.estimate_point(&e.mean)?;
        println!(
            "target ({:6.1}, {:6.1})  estimate ({:6.1}, {:6.1})",
            e.target.x, e.target.y, p.x, p.y
        );
    }
    Ok(())
}
