use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::classify::{classify_outcome, ClassifyError, TrialOutcome};
use super::report::{summarize, write_summary_csv};
use super::scenario::Scenario;
use crate::perception::Perception;
use crate::pipeline::{measure_initiation, run_trial, TrialError, TrialSetup};
use crate::trace::{write_jsonl, Record};

#[derive(Debug, Error)]
pub enum BatchError {
    #[error("scenario `{name}`: {message}")]
    Scenario { name: String, message: String },
    #[error("scenario `{name}` trial {trial}: {source}")]
    Trial { name: String, trial: u32, source: TrialError },
    #[error("scenario `{name}` trial {trial}: {source}")]
    Classify { name: String, trial: u32, source: ClassifyError },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("thread pool: {0}")]
    Pool(String),
}

impl BatchError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        BatchError::Io { path: path.display().to_string(), source }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub scenario: String,
    pub trial: u32,
    pub outcome: TrialOutcome,
    pub initiation_time_s: Option<f64>,
    pub total_time_s: f64,
    pub abort_count: u32,
}

#[derive(Serialize, Deserialize)]
struct CsvRow {
    scenario: String,
    trial: u32,
    outcome: String,
    initiation_time_s: Option<f64>,
    total_time_s: f64,
    abort_count: u32,
}

/// Seed of trial `index` in a batch seeded with `seed`.
pub fn trial_seed(seed: u64, index: u32) -> u64 {
    seed.wrapping_add(index as u64)
}

/// Runs trial `index` of a scenario and classifies it. The returned log starts with a header record.
pub fn run_scenario_trial(scenario: &Scenario, index: u32, seed: u64) -> Result<(TrialResult, Vec<Record>), BatchError> {
    let name = scenario.name.clone();
    let bad = |message: String| BatchError::Scenario { name: name.clone(), message };
    let resolved = scenario.resolve().map_err(bad)?;
    let scene = scenario.scene_for(seed).map_err(bad)?;
    let perception = Perception::oracle(scenario.noise.with_seed(seed));
    let setup = TrialSetup {
        scene: &scene,
        intrinsics: resolved.intrinsics,
        perception: &perception,
        pipeline: &scenario.pipeline,
        controller: scenario.controller,
        window: scenario.window,
        grasp: scenario.grasp,
        reach_m: scenario.robot.reach_m,
        home_pose: resolved.home,
        drop_pose: resolved.drop,
        collisions_s: scenario.collision_events_s.clone(),
    };
    let run = run_trial(&setup).map_err(|source| BatchError::Trial { name: name.clone(), trial: index, source })?;
    let outcome = classify_outcome(&run.records, &scene, scenario.observer_margin_m)
        .map_err(|source| BatchError::Classify { name: name.clone(), trial: index, source })?;
    let initiation_time_s = measure_initiation(&run.records).ok().map(|t| t.as_secs());
    let result = TrialResult { scenario: name.clone(), trial: index, outcome, initiation_time_s, total_time_s: run.end_time.as_secs(), abort_count: run.aborts };

    let header = Record::Header {
        scenario_name: name,
        trial: index,
        seed,
        scenario: serde_json::to_value(scenario).expect("scenario serializes"),
    };
    let mut records = Vec::with_capacity(run.records.len() + 1);
    records.push(header);
    records.extend(run.records);
    Ok((result, records))
}

/// File-name-safe form of a scenario name.
pub fn file_stem(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

pub fn log_path(out_dir: &Path, scenario: &str, trial: u32) -> PathBuf {
    out_dir.join("logs").join(format!("{}_trial{trial}.jsonl", file_stem(scenario)))
}

pub fn write_results_csv<W: Write>(w: W, results: &[TrialResult]) -> csv::Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in results {
        wr.serialize(CsvRow {
            scenario: r.scenario.clone(),
            trial: r.trial,
            outcome: r.outcome.as_str().to_string(),
            initiation_time_s: r.initiation_time_s,
            total_time_s: r.total_time_s,
            abort_count: r.abort_count,
        })?;
    }
    wr.flush()?;
    Ok(())
}

#[derive(Debug, Error)]
pub enum ResultsError {
    #[error("{0}")]
    Csv(#[from] csv::Error),
    #[error("row {row}: unknown outcome `{outcome}`")]
    Outcome { row: usize, outcome: String },
}

pub fn read_results_csv<R: std::io::Read>(r: R) -> Result<Vec<TrialResult>, ResultsError> {
    let mut rd = csv::Reader::from_reader(r);
    let mut out = Vec::new();
    for (i, row) in rd.deserialize::<CsvRow>().enumerate() {
        let row = row?;
        let outcome = TrialOutcome::parse(&row.outcome).ok_or_else(|| ResultsError::Outcome { row: i + 1, outcome: row.outcome.clone() })?;
        out.push(TrialResult {
            scenario: row.scenario,
            trial: row.trial,
            outcome,
            initiation_time_s: row.initiation_time_s,
            total_time_s: row.total_time_s,
            abort_count: row.abort_count,
        });
    }
    Ok(out)
}

/// Number of worker threads from `HANDOVER_SIM_THREADS`, if set to a positive integer.
pub fn thread_cap() -> Option<usize> {
    std::env::var("HANDOVER_SIM_THREADS").ok()?.trim().parse().ok().filter(|&n: &usize| n > 0)
}

pub struct BatchOptions {
    /// Overrides each scenario's own trial count.
    pub trials: Option<u32>,
    pub seed: u64,
    pub threads: Option<usize>,
}

/// Runs every trial of every scenario, writing `results.csv`, `summary.csv`
/// and one JSONL log per trial under `out_dir`. Output order is by scenario, then trial index.
pub fn run_batch(scenarios: &[Scenario], opts: &BatchOptions, out_dir: &Path) -> Result<Vec<TrialResult>, BatchError> {
    fs::create_dir_all(out_dir.join("logs")).map_err(|e| BatchError::io(out_dir, e))?;
    let jobs: Vec<(usize, u32)> = scenarios
        .iter()
        .enumerate()
        .flat_map(|(s, sc)| (0..opts.trials.unwrap_or(sc.trials)).map(move |i| (s, i)))
        .collect();

    let work = || -> Result<Vec<TrialResult>, BatchError> {
        jobs.par_iter()
            .map(|&(s, i)| {
                let sc = &scenarios[s];
                let (result, records) = run_scenario_trial(sc, i, trial_seed(opts.seed, i))?;
                let path = log_path(out_dir, &sc.name, i);
                let file = fs::File::create(&path).map_err(|e| BatchError::io(&path, e))?;
                write_jsonl(BufWriter::new(file), &records).map_err(|e| BatchError::io(&path, e))?;
                Ok(result)
            })
            .collect()
    };
    let results = match opts.threads {
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build().map_err(|e| BatchError::Pool(e.to_string()))?.install(work)?,
        None => work()?,
    };

    let path = out_dir.join("results.csv");
    let file = fs::File::create(&path).map_err(|e| BatchError::io(&path, e))?;
    write_results_csv(BufWriter::new(file), &results).map_err(|e| BatchError::io(&path, e.into()))?;
    let path = out_dir.join("summary.csv");
    let file = fs::File::create(&path).map_err(|e| BatchError::io(&path, e))?;
    write_summary_csv(BufWriter::new(file), &summarize(&results)).map_err(|e| BatchError::io(&path, e.into()))?;
    Ok(results)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let rows = vec![
            TrialResult { scenario: "a".into(), trial: 0, outcome: TrialOutcome::Success, initiation_time_s: Some(0.195833333), total_time_s: 7.5, abort_count: 0 },
            TrialResult { scenario: "a".into(), trial: 1, outcome: TrialOutcome::DetectionFail, initiation_time_s: None, total_time_s: 30.0, abort_count: 2 },
        ];
        let mut buf = Vec::new();
        write_results_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("scenario,trial,outcome,initiation_time_s,total_time_s,abort_count\n"));
        assert!(text.contains("a,1,DetectionFail,,30.0,2"));
        assert_eq!(read_results_csv(buf.as_slice()).unwrap(), rows);
    }

    #[test]
    fn stems_are_safe() {
        assert_eq!(file_stem("mug / left"), "mug___left");
    }
}
