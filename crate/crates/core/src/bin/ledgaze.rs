use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use ledgaze::commands;
use ledgaze::config::SessionConfig;
use ledgaze::eval::{Scenario, SweepAxis};
use ledgaze::wire::StressConfig;

/// LED-ring gaze estimation: simulated sessions, evaluation and reports.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// TOML configuration; defaults apply when omitted.
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Axis {
    LedCount,
    CalibrationPoints,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScenarioArg {
    Calibrated,
    SameUserPrior,
    CrossUserPrior,
}

#[derive(Subcommand)]
enum Command {
    /// Grid calibration only.
    Calibrate(Common),
    /// Calibration, gameplay and evaluation.
    Run(Common),
    /// Accuracy report for a session log (or a fresh session).
    Eval {
        #[command(flatten)]
        common: Common,
        /// Session log written by `run`.
        #[arg(long)]
        log: Option<PathBuf>,
        /// Also write the per-frame trace.
        #[arg(long)]
        trace: bool,
    },
    /// Accuracy against LED count or calibration grid size.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "led-count")]
        axis: Axis,
        /// Comma-separated values; the configured ones otherwise.
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<usize>>,
    },
    /// GPR against SVR on the same frames.
    Compare(Common),
    /// Selection-task success ratios.
    Scenarios {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        scenario: Option<ScenarioArg>,
    },
    /// Wire format round trip with injected corruption.
    WireTest {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.1)]
        garbage_prob: f64,
        #[arg(long, default_value_t = 0.05)]
        corrupt_prob: f64,
    },
}

fn load(c: &Common) -> ledgaze::Result<SessionConfig> {
    let mut cfg = match &c.config {
        Some(p) => SessionConfig::load(p)?,
        None => SessionConfig::default(),
    };
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn dispatch(cmd: Command) -> ledgaze::Result<Vec<PathBuf>> {
    let w = match cmd {
        Command::Calibrate(c) => commands::calibrate(&load(&c)?, &c.out)?,
        Command::Run(c) => commands::run(&load(&c)?, &c.out)?,
        Command::Eval { common, log, trace } => commands::eval(&load(&common)?, &common.out, log.as_deref(), trace)?,
        Command::Sweep { common, axis, values } => {
            let axis = match axis {
                Axis::LedCount => SweepAxis::LedCount,
                Axis::CalibrationPoints => SweepAxis::CalibrationPoints,
            };
            commands::sweep(&load(&common)?, &common.out, axis, values.as_deref())?
        }
        Command::Compare(c) => commands::compare(&load(&c)?, &c.out)?,
        Command::Scenarios { common, scenario } => {
            let only = scenario.map(|s| match s {
                ScenarioArg::Calibrated => Scenario::Calibrated,
                ScenarioArg::SameUserPrior => Scenario::SameUserPrior,
                ScenarioArg::CrossUserPrior => Scenario::CrossUserPrior,
            });
            commands::scenarios(&load(&common)?, &common.out, only)?
        }
        Command::WireTest {
            common,
            garbage_prob,
            corrupt_prob,
        } => {
            let stress = StressConfig {
                garbage_prob,
                corrupt_prob,
                ..StressConfig::default()
            };
            commands::wire_test(&load(&common)?, &common.out, &stress)?
        }
    };
    Ok(w.written().to_vec())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match dispatch(Cli::parse().command) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
