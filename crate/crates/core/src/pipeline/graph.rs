use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::time::SimTime;

pub const MIN_RATE_FPS: f64 = 24.0;
pub const MAX_RATE_FPS: f64 = 30.0;

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageSpec {
    pub name: String,
    pub latency_s: f64,
    pub max_rate_fps: f64,
    /// Capacity of each input buffer; the oldest entry is dropped on overflow.
    #[serde(default = "one")]
    pub buffer: usize,
}

impl StageSpec {
    pub fn new(name: &str, latency_s: f64) -> Self {
        StageSpec { name: name.to_string(), latency_s, max_rate_fps: MAX_RATE_FPS, buffer: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Edge {
    pub from: String,
    pub to: String,
}

impl Edge {
    pub fn new(from: &str, to: &str) -> Self {
        Edge { from: from.to_string(), to: to.to_string() }
    }
}

/// Stage list and dataflow edges. The single stage without inputs is the
/// camera; the single stage without outputs hands frames to the controller.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default = "default_stages")]
    pub stages: Vec<StageSpec>,
    #[serde(default = "default_edges")]
    pub edges: Vec<Edge>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig { stages: default_stages(), edges: default_edges() }
    }
}

pub fn default_stages() -> Vec<StageSpec> {
    vec![
        StageSpec::new("camera", 0.0),
        StageSpec::new("detector", 0.033),
        StageSpec::new("hand_seg", 0.033),
        StageSpec::new("body_seg", 0.033),
        StageSpec::new("grasp_select", 0.0125),
        StageSpec::new("aggregate", 0.017),
    ]
}

pub fn default_edges() -> Vec<Edge> {
    vec![
        Edge::new("camera", "detector"),
        Edge::new("camera", "hand_seg"),
        Edge::new("camera", "body_seg"),
        Edge::new("detector", "grasp_select"),
        Edge::new("hand_seg", "grasp_select"),
        Edge::new("body_seg", "grasp_select"),
        Edge::new("grasp_select", "aggregate"),
    ]
}

/// Validated graph with stages renumbered in topological order; a stage's
/// index is also its event priority.
#[derive(Debug, Clone, PartialEq)]
pub struct CompiledGraph {
    pub names: Vec<String>,
    pub latency: Vec<SimTime>,
    pub min_interval: Vec<SimTime>,
    pub rate: Vec<f64>,
    pub capacity: Vec<usize>,
    /// Edge list as (from, to) stage indices.
    pub edges: Vec<(usize, usize)>,
    pub inputs: Vec<Vec<usize>>,
    pub outputs: Vec<Vec<usize>>,
}

impl CompiledGraph {
    pub fn source(&self) -> usize {
        0
    }

    pub fn sink(&self) -> usize {
        self.names.len() - 1
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Sum of latencies along the slowest source-to-sink path.
    pub fn critical_path(&self) -> SimTime {
        let mut best = vec![SimTime::ZERO; self.len()];
        for s in 0..self.len() {
            let upstream = self.inputs[s].iter().map(|&e| best[self.edges[e].0]).max().unwrap_or(SimTime::ZERO);
            best[s] = upstream + self.latency[s];
        }
        best[self.sink()]
    }
}

impl PipelineConfig {
    pub fn compile(&self) -> Result<CompiledGraph, PipelineError> {
        let mut index = BTreeMap::new();
        for (i, s) in self.stages.iter().enumerate() {
            if index.insert(s.name.clone(), i).is_some() {
                return Err(PipelineError::DuplicateStage(s.name.clone()));
            }
            if !(MIN_RATE_FPS..=MAX_RATE_FPS).contains(&s.max_rate_fps) {
                return Err(PipelineError::InvalidRate { stage: s.name.clone(), rate: s.max_rate_fps });
            }
            if !(s.latency_s >= 0.0 && s.latency_s.is_finite()) {
                return Err(PipelineError::InvalidLatency { stage: s.name.clone(), latency: s.latency_s });
            }
            if s.buffer == 0 {
                return Err(PipelineError::InvalidBuffer(s.name.clone()));
            }
        }
        let n = self.stages.len();
        let mut raw_edges = Vec::new();
        for e in &self.edges {
            let from = *index.get(&e.from).ok_or_else(|| PipelineError::UnknownStage(e.from.clone()))?;
            let to = *index.get(&e.to).ok_or_else(|| PipelineError::UnknownStage(e.to.clone()))?;
            if raw_edges.contains(&(from, to)) {
                return Err(PipelineError::DuplicateEdge { from: e.from.clone(), to: e.to.clone() });
            }
            raw_edges.push((from, to));
        }

        // Kahn's algorithm, always taking the lowest declared index among ready stages.
        let mut indegree = vec![0usize; n];
        for &(_, to) in &raw_edges {
            indegree[to] += 1;
        }
        let sources: Vec<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
        if sources.len() != 1 {
            return Err(PipelineError::SourceCount(sources.len()));
        }
        let mut order = Vec::with_capacity(n);
        let mut ready: std::collections::BTreeSet<usize> = sources.into_iter().collect();
        while let Some(&s) = ready.iter().next() {
            ready.remove(&s);
            order.push(s);
            for &(from, to) in &raw_edges {
                if from == s {
                    indegree[to] -= 1;
                    if indegree[to] == 0 {
                        ready.insert(to);
                    }
                }
            }
        }
        if order.len() != n {
            return Err(PipelineError::CyclicGraph);
        }
        let sinks: Vec<usize> = (0..n).filter(|&i| !raw_edges.iter().any(|&(from, _)| from == i)).collect();
        if sinks.len() != 1 {
            return Err(PipelineError::SinkCount(sinks.len()));
        }

        let mut rank = vec![0usize; n];
        for (r, &s) in order.iter().enumerate() {
            rank[s] = r;
        }
        let edges: Vec<(usize, usize)> = raw_edges.iter().map(|&(f, t)| (rank[f], rank[t])).collect();
        let mut inputs = vec![Vec::new(); n];
        let mut outputs = vec![Vec::new(); n];
        for (e, &(f, t)) in edges.iter().enumerate() {
            outputs[f].push(e);
            inputs[t].push(e);
        }
        let stage = |r: usize| &self.stages[order[r]];
        Ok(CompiledGraph {
            names: (0..n).map(|r| stage(r).name.clone()).collect(),
            latency: (0..n).map(|r| SimTime::from_secs(stage(r).latency_s)).collect(),
            min_interval: (0..n).map(|r| SimTime::at_rate(1, stage(r).max_rate_fps)).collect(),
            rate: (0..n).map(|r| stage(r).max_rate_fps).collect(),
            capacity: (0..n).map(|r| stage(r).buffer).collect(),
            edges,
            inputs,
            outputs,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_graph_compiles() {
        let g = PipelineConfig::default().compile().unwrap();
        assert_eq!(g.names[0], "camera");
        assert_eq!(g.names[g.sink()], "aggregate");
        assert_eq!(g.critical_path(), SimTime(62_500_000));
    }

    #[test]
    fn cycle_rejected() {
        let mut cfg = PipelineConfig::default();
        cfg.edges.push(Edge::new("aggregate", "detector"));
        assert_eq!(cfg.compile(), Err(PipelineError::CyclicGraph));
    }

    #[test]
    fn rate_bounds() {
        let mut cfg = PipelineConfig::default();
        cfg.stages[1].max_rate_fps = 31.0;
        assert!(matches!(cfg.compile(), Err(PipelineError::InvalidRate { .. })));
        cfg.stages[1].max_rate_fps = 23.9;
        assert!(matches!(cfg.compile(), Err(PipelineError::InvalidRate { .. })));
        cfg.stages[1].max_rate_fps = 24.0;
        assert!(cfg.compile().is_ok());
    }

    #[test]
    fn unknown_and_negative() {
        let mut cfg = PipelineConfig::default();
        cfg.edges.push(Edge::new("camera", "nowhere"));
        assert_eq!(cfg.compile(), Err(PipelineError::UnknownStage("nowhere".into())));
        let mut cfg = PipelineConfig::default();
        cfg.stages[2].latency_s = -0.1;
        assert!(matches!(cfg.compile(), Err(PipelineError::InvalidLatency { .. })));
    }

    #[test]
    fn declaration_order_does_not_matter() {
        let mut cfg = PipelineConfig::default();
        cfg.stages.reverse();
        let g = cfg.compile().unwrap();
        assert_eq!(g.names[0], "camera");
        assert_eq!(g.names[5], "aggregate");
        assert_eq!(g.critical_path(), SimTime(62_500_000));
    }
}
