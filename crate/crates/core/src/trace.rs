//! Records of the per-trial JSONL event log.

use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::control::{HandoverState, Outcome};
use crate::geometry::{Pose, Vec3};
use crate::scene::GraspOutcome;
use crate::time::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseRecord {
    pub position: [f64; 3],
    pub wxyz: [f64; 4],
}

impl From<&Pose> for PoseRecord {
    fn from(p: &Pose) -> Self {
        PoseRecord { position: p.position.into(), wxyz: p.wxyz() }
    }
}

impl PoseRecord {
    /// Rebuilds the pose; the quaternion is renormalized.
    pub fn pose(&self) -> Pose {
        Pose::new(Vec3::from(self.position), self.wxyz).unwrap_or_else(|_| Pose::translation(Vec3::from(self.position)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Record {
    Header {
        scenario_name: String,
        trial: u32,
        seed: u64,
        scenario: serde_json::Value,
    },
    Transition {
        t: f64,
        t_ns: u64,
        state_from: HandoverState,
        state_to: HandoverState,
        reason: String,
        ee_pose: PoseRecord,
        distance_to_goal: Option<f64>,
    },
    Tick {
        t: f64,
        t_ns: u64,
        state: HandoverState,
        ee_pose: PoseRecord,
        gripper_width: f64,
        speed: f64,
    },
    Frame {
        t: f64,
        t_ns: u64,
        seq: u64,
        capture_ns: u64,
        target: bool,
        quality: Option<f64>,
    },
    Frozen {
        t: f64,
        t_ns: u64,
        point: [f64; 3],
        yaw: f64,
        width: f64,
        quality: f64,
        source_pixel: (usize, usize),
        window_span_s: f64,
    },
    Abort {
        t: f64,
        t_ns: u64,
        reason: String,
        count: u32,
    },
    Collision {
        t: f64,
        t_ns: u64,
        gripper_width: f64,
        count: u32,
    },
    GraspAttempt {
        t: f64,
        t_ns: u64,
        outcome: GraspOutcome,
        jaw_center: [f64; 3],
        jaw_axis: [f64; 3],
        width: f64,
    },
    Done {
        t: f64,
        t_ns: u64,
        outcome: Outcome,
        aborts: u32,
        collisions: u32,
    },
}

impl Record {
    pub fn time(&self) -> Option<SimTime> {
        match self {
            Record::Header { .. } => None,
            Record::Transition { t_ns, .. }
            | Record::Tick { t_ns, .. }
            | Record::Frame { t_ns, .. }
            | Record::Frozen { t_ns, .. }
            | Record::Abort { t_ns, .. }
            | Record::Collision { t_ns, .. }
            | Record::GraspAttempt { t_ns, .. }
            | Record::Done { t_ns, .. } => Some(SimTime(*t_ns)),
        }
    }
}

pub fn write_jsonl<W: Write>(mut w: W, records: &[Record]) -> io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

#[derive(Debug, thiserror::Error)]
pub enum ReadError {
    #[error("line {line}: {source}")]
    Parse { line: usize, source: serde_json::Error },
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub fn read_jsonl<R: BufRead>(r: R) -> Result<Vec<Record>, ReadError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|source| ReadError::Parse { line: i + 1, source })?);
    }
    Ok(out)
}
