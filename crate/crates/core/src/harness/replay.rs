use thiserror::Error;

use super::batch::{run_scenario_trial, BatchError, TrialResult};
use super::classify::{classify_outcome, min_human_clearance, ClassifyError};
use super::scenario::Scenario;
use crate::pipeline::measure_initiation;
use crate::trace::Record;

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("log does not start with a header record")]
    MissingHeader,
    #[error("header scenario: {0}")]
    Scenario(String),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error(transparent)]
    Batch(#[from] BatchError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Replay {
    pub result: TrialResult,
    pub seed: u64,
    /// Closest jaw approach to a person outside grasping, and when.
    pub min_clearance: Option<(f64, f64)>,
    /// Whether rerunning the trial reproduced the log record for record. `None` if not checked.
    pub reproduced: Option<bool>,
}

/// Scenario, trial index and seed stored in a log header.
pub fn header_of(log: &[Record]) -> Result<(Scenario, u32, u64), ReplayError> {
    let Some(Record::Header { trial, seed, scenario, .. }) = log.first() else {
        return Err(ReplayError::MissingHeader);
    };
    let sc: Scenario = serde_json::from_value(scenario.clone()).map_err(|e| ReplayError::Scenario(e.to_string()))?;
    sc.resolve().map_err(ReplayError::Scenario)?;
    Ok((sc, *trial, *seed))
}

/// Reclassifies a stored trial log against the ground truth named in its header;
/// with `rerun`, also simulates the trial again and compares the records.
pub fn replay(log: &[Record], rerun: bool) -> Result<Replay, ReplayError> {
    let (scenario, trial, seed) = header_of(log)?;
    let scene = scenario.scene_for(seed).map_err(ReplayError::Scenario)?;
    let body = &log[1..];
    let outcome = classify_outcome(body, &scene, scenario.observer_margin_m)?;
    let aborts = body
        .iter()
        .find_map(|r| match r {
            Record::Done { aborts, .. } => Some(*aborts),
            _ => None,
        })
        .ok_or(ClassifyError::IncompleteLog)?;
    let end = body.iter().rev().find_map(|r| r.time()).map_or(0.0, |t| t.as_secs());
    let result = TrialResult {
        scenario: scenario.name.clone(),
        trial,
        outcome,
        initiation_time_s: measure_initiation(body).ok().map(|t| t.as_secs()),
        total_time_s: end,
        abort_count: aborts,
    };
    let reproduced = if rerun {
        let (_, fresh) = run_scenario_trial(&scenario, trial, seed)?;
        Some(fresh == log)
    } else {
        None
    };
    Ok(Replay { result, seed, min_clearance: min_human_clearance(body, &scene), reproduced })
}
