//! Scenario files, batch execution, outcome classification and reporting.

pub mod batch;
pub mod classify;
pub mod replay;
pub mod report;
pub mod scenario;

pub use batch::{
    file_stem, log_path, read_results_csv, run_batch, run_scenario_trial, thread_cap, trial_seed, write_results_csv, BatchError, BatchOptions,
    ResultsError, TrialResult,
};
pub use classify::{classify_outcome, min_human_clearance, ClassifyError, TrialOutcome};
pub use report::{format_table, percent_tenths, summarize, write_summary_csv, SummaryRow};
pub use scenario::{LoadedScenario, Scenario, ScenarioError};
pub use replay::{header_of, replay, Replay, ReplayError};
