//! Staged perception pipeline on a virtual clock, and the per-trial host
//! that couples it to the scene, perception providers and controller.

pub mod engine;
pub mod graph;
pub mod initiation;
pub mod trial;

pub use engine::{Engine, EventKind, FrameStamp, PipelineEvent, Step};
pub use graph::{default_edges, default_stages, CompiledGraph, Edge, PipelineConfig, StageSpec};
pub use initiation::{measure_initiation, InitiationError};
pub use trial::{run_trial, TrialError, TrialRun, TrialSetup};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error("pipeline graph has a cycle")]
    CyclicGraph,
    #[error("stage `{stage}` rate {rate} fps outside [24, 30]")]
    InvalidRate { stage: String, rate: f64 },
    #[error("stage `{stage}` has invalid latency {latency}")]
    InvalidLatency { stage: String, latency: f64 },
    #[error("stage `{0}` needs a buffer of at least one frame")]
    InvalidBuffer(String),
    #[error("unknown stage `{0}`")]
    UnknownStage(String),
    #[error("stage `{0}` declared twice")]
    DuplicateStage(String),
    #[error("edge {from} -> {to} declared twice")]
    DuplicateEdge { from: String, to: String },
    #[error("expected one source stage, found {0}")]
    SourceCount(usize),
    #[error("expected one sink stage, found {0}")]
    SinkCount(usize),
}
