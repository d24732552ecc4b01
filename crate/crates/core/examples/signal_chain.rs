//! Raw counts to regression input: exposure compensation, then optional
//! smoothing. Shows a blink passing through the filter.
//!
//! ```text
//! cargo run --example signal_chain
//! ```

use ledgaze::config::SessionConfig;
use ledgaze::sigproc::{frame_rate_hz, SignalChain, SignalConfig, DEFAULT_IIR_ALPHA};
use ledgaze::sim::{run_script, GazeScript};
use ledgaze::ScreenPoint;

fn main() -> ledgaze::Result<()> {
    let cfg = SessionConfig::default();
    let layout = cfg.layout()?;
    let schedule = layout.schedule();
    println!(
        "{} channels, {} us steps: {:.1} frames/s",
        schedule.channel_count(),
        cfg.sim.step_us,
        frame_rate_hz(cfg.sim.step_us, schedule.cycle_len())
    );

    let script = GazeScript::fixation(ScreenPoint::new(250.0, 200.0), 150.0)
        .then_blink(100.0)
        .then_fixate(ScreenPoint::new(250.0, 200.0), 250.0);
    let log = run_script(&layout, &cfg.subject()?, &script, &schedule, &cfg.sim_config()?, 1)?;

    let mut raw = SignalChain::new(&SignalConfig::default())?;
    let mut smooth = SignalChain::new(&SignalConfig {
        iir_alpha: Some(DEFAULT_IIR_ALPHA),
        ..SignalConfig::default()
    })?;
    for f in log.frames() {
        let frame = f.sensor_frame();
        let a = raw.process(&frame, &f.exposure)?;
        let b = smooth.process(&frame, &f.exposure)?;
        println!(
            "{:>7} us {}  raw {:.4}  smoothed {:.4}",
            f.t,
            if f.blink { "blink" } else { "     " },
            a[0],
            b[0]
        );
    }
    Ok(())
}
