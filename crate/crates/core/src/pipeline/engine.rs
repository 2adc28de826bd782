//! Discrete-event scheduler for the staged pipeline. It tracks which frame
//! each stage works on and when; the frame contents are computed by the host.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, VecDeque};

use serde::{Deserialize, Serialize};

use super::graph::CompiledGraph;
use crate::time::SimTime;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameStamp {
    pub sequence: u64,
    pub capture_time: SimTime,
    /// Completion time per stage name.
    pub stage_times: BTreeMap<String, SimTime>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Capture,
    Start,
    Done,
    /// An input entry discarded before the stage consumed it.
    Drop,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineEvent {
    pub t_ns: u64,
    pub kind: EventKind,
    pub stage: String,
    pub seq: u64,
}

/// What the host needs to know about one processed event.
#[derive(Debug, Clone, PartialEq)]
pub enum Step {
    Captured { seq: u64, t: SimTime },
    Delivered(FrameStamp),
    Internal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Pending {
    Capture,
    Done,
    Retry,
}

/// Queue key: time, stage priority, frame sequence, insertion counter.
type Key = (SimTime, usize, u64, u64, Pending);

pub struct Engine {
    graph: CompiledGraph,
    queue: BinaryHeap<Reverse<Key>>,
    counter: u64,
    buffers: Vec<VecDeque<u64>>,
    busy: Vec<Option<u64>>,
    last_start: Vec<Option<SimTime>>,
    last_consumed: Vec<Option<u64>>,
    retry_at: Vec<Option<SimTime>>,
    stamps: BTreeMap<u64, FrameStamp>,
    record: bool,
    events: Vec<PipelineEvent>,
}

impl Engine {
    /// `record` keeps the full event list, which is large for long runs.
    pub fn new(graph: CompiledGraph, record: bool) -> Self {
        let n = graph.len();
        let mut engine = Engine {
            queue: BinaryHeap::new(),
            counter: 0,
            buffers: vec![VecDeque::new(); graph.edges.len()],
            busy: vec![None; n],
            last_start: vec![None; n],
            last_consumed: vec![None; n],
            retry_at: vec![None; n],
            stamps: BTreeMap::new(),
            record,
            events: Vec::new(),
            graph,
        };
        engine.schedule(SimTime::ZERO, 0, 0, Pending::Capture);
        engine
    }

    pub fn graph(&self) -> &CompiledGraph {
        &self.graph
    }

    pub fn events(&self) -> &[PipelineEvent] {
        &self.events
    }

    pub fn into_events(self) -> Vec<PipelineEvent> {
        self.events
    }

    /// Total entries currently buffered on edges into `stage`.
    pub fn occupancy(&self, stage: usize) -> Vec<usize> {
        self.graph.inputs[stage].iter().map(|&e| self.buffers[e].len()).collect()
    }

    fn schedule(&mut self, t: SimTime, stage: usize, seq: u64, kind: Pending) {
        self.counter += 1;
        self.queue.push(Reverse((t, stage, seq, self.counter, kind)));
    }

    fn log(&mut self, t: SimTime, kind: EventKind, stage: usize, seq: u64) {
        if self.record {
            self.events.push(PipelineEvent { t_ns: t.nanos(), kind, stage: self.graph.names[stage].clone(), seq });
        }
    }

    /// Time of the next event; there is always one because the camera never stops.
    pub fn next_time(&self) -> SimTime {
        self.queue.peek().map(|Reverse(k)| k.0).expect("camera keeps the queue nonempty")
    }

    pub fn step(&mut self) -> Step {
        let Reverse((t, stage, seq, _, kind)) = self.queue.pop().expect("camera keeps the queue nonempty");
        match kind {
            Pending::Capture => {
                let src = self.graph.source();
                let rate = self.graph.rate[src];
                self.schedule(SimTime::at_rate(seq + 1, rate), src, seq + 1, Pending::Capture);
                self.stamps.insert(seq, FrameStamp { sequence: seq, capture_time: t, stage_times: BTreeMap::new() });
                self.log(t, EventKind::Capture, src, seq);
                if self.busy[src].is_none() {
                    self.start(t, src, seq);
                } else {
                    // Camera slower than its own frame rate: the frame is lost.
                    self.log(t, EventKind::Drop, src, seq);
                    self.stamps.remove(&seq);
                }
                Step::Captured { seq, t }
            }
            Pending::Retry => {
                self.retry_at[stage] = None;
                self.try_start(t, stage);
                Step::Internal
            }
            Pending::Done => self.finish(t, stage, seq),
        }
    }

    fn start(&mut self, t: SimTime, stage: usize, seq: u64) {
        debug_assert!(self.last_consumed[stage].is_none_or(|c| seq > c));
        self.busy[stage] = Some(seq);
        self.last_start[stage] = Some(t);
        self.last_consumed[stage] = Some(seq);
        self.log(t, EventKind::Start, stage, seq);
        let done = t + self.graph.latency[stage];
        self.schedule(done, stage, seq, Pending::Done);
    }

    fn finish(&mut self, t: SimTime, stage: usize, seq: u64) -> Step {
        self.busy[stage] = None;
        self.log(t, EventKind::Done, stage, seq);
        if let Some(stamp) = self.stamps.get_mut(&seq) {
            stamp.stage_times.insert(self.graph.names[stage].clone(), t);
        }
        let outputs = self.graph.outputs[stage].clone();
        for &e in &outputs {
            let to = self.graph.edges[e].1;
            self.buffers[e].push_back(seq);
            if self.buffers[e].len() > self.graph.capacity[to] {
                let dropped = self.buffers[e].pop_front().expect("nonempty");
                self.log(t, EventKind::Drop, to, dropped);
            }
        }
        for &e in &outputs {
            let to = self.graph.edges[e].1;
            self.try_start(t, to);
        }
        self.try_start(t, stage);
        if stage == self.graph.sink() {
            let stamp = self.stamps.remove(&seq).expect("stamp of delivered frame");
            // Frames older than a delivered one can never be delivered.
            self.stamps = self.stamps.split_off(&seq);
            return Step::Delivered(stamp);
        }
        Step::Internal
    }

    /// Newest sequence present in every input buffer of `stage`.
    fn joinable(&self, stage: usize) -> Option<u64> {
        let inputs = &self.graph.inputs[stage];
        let first = &self.buffers[*inputs.first()?];
        first.iter().rev().copied().find(|s| inputs[1..].iter().all(|&e| self.buffers[e].contains(s)))
    }

    fn try_start(&mut self, t: SimTime, stage: usize) {
        if stage == self.graph.source() || self.busy[stage].is_some() {
            return;
        }
        let Some(seq) = self.joinable(stage) else { return };
        if let Some(last) = self.last_start[stage] {
            let earliest = last + self.graph.min_interval[stage];
            if t < earliest {
                if self.retry_at[stage].is_none() {
                    self.retry_at[stage] = Some(earliest);
                    self.schedule(earliest, stage, 0, Pending::Retry);
                }
                return;
            }
        }
        for e in self.graph.inputs[stage].clone() {
            while let Some(&front) = self.buffers[e].front() {
                if front > seq {
                    break;
                }
                self.buffers[e].pop_front();
                if front < seq {
                    self.log(t, EventKind::Drop, stage, front);
                }
            }
        }
        self.start(t, stage, seq);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::graph::{Edge, PipelineConfig, StageSpec};

    fn run_until(engine: &mut Engine, until: SimTime) -> Vec<FrameStamp> {
        let mut out = Vec::new();
        while engine.next_time() <= until {
            if let Step::Delivered(s) = engine.step() {
                out.push(s);
            }
        }
        out
    }

    #[test]
    fn default_latency_is_62_5_ms() {
        let mut e = Engine::new(PipelineConfig::default().compile().unwrap(), false);
        let frames = run_until(&mut e, SimTime::from_secs(1.0));
        assert_eq!(frames[0].capture_time, SimTime::ZERO);
        assert_eq!(frames[0].stage_times["aggregate"], SimTime(62_500_000));
        for f in &frames {
            assert_eq!(f.stage_times["aggregate"] - f.capture_time, SimTime(62_500_000));
        }
        // Frame 28 is captured at 0.9333 s and arrives at 0.9958 s.
        assert_eq!(frames.len(), 29);
    }

    #[test]
    fn slow_stage_drops_a_third() {
        let cfg = PipelineConfig {
            stages: vec![StageSpec::new("camera", 0.0), StageSpec::new("slow", 0.05)],
            edges: vec![Edge::new("camera", "slow")],
        };
        let mut e = Engine::new(cfg.compile().unwrap(), true);
        let frames = run_until(&mut e, SimTime::from_secs(3.0) - SimTime(1));
        let seqs: Vec<u64> = frames.iter().map(|f| f.sequence).collect();
        assert_eq!(&seqs[..8], &[0, 1, 3, 4, 6, 7, 9, 10]);
        // The stage stays busy, finishing every 0.05 s from 0.05 to 2.95.
        assert_eq!(frames.len(), 59);
        for f in &frames {
            assert!(f.stage_times["slow"] - f.capture_time <= SimTime::from_secs(0.1));
        }
    }
}
