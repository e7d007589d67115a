//! One-parameter-at-a-time sweeps, the two-configuration comparison, and the
//! feature pipeline they share.

mod features;
mod harness;
mod report;
mod spec;

pub use features::{extract_features, features_for_split, FeatureSet};
pub use harness::{
    compare_configs, run_point, run_sweep, trial_seed, ComparisonResult, HarnessOptions, PointResult, Summary, SweepResult,
    TrialOutcome, TrialRecord,
};
pub use report::{
    comparison_csv, comparison_text, read_results_csv, write_results_csv, ResultRow, RESULTS_HEADER,
};
pub use spec::{default_sweeps, SweepParam, SweepSpec};
