//! Accuracy evaluation and the experiments built on it.

mod accuracy;
pub mod compare;
pub mod report;
pub mod scenarios;
pub mod sweep;

pub use accuracy::{
    estimate_frames, evaluate_accuracy, evaluate_estimates, exclusion_mask, guard_frames, histogram, median,
    phase_frames, trace_rows, AccuracyReport, Exclusion, ExclusionCounts, HistogramBin, TargetStats, TraceRow,
    HISTOGRAM_BIN_DEG,
};
pub use compare::{compare_estimators, compare_over_seeds, Comparison, ComparisonSummary};
pub use scenarios::{run_scenario_session, run_scenarios, Scenario, ScenarioReport, ScenarioSession, ScenarioSummary};
pub use sweep::{sweep, SweepAxis, SweepReport, SweepRow};
