//! Handover state machine driving a kinematic end-effector with
//! position-based visual servoing, abort monitoring and collision recovery.

pub mod config;
pub mod machine;
pub mod pbvs;
pub mod state;

pub use config::ControllerConfig;
pub use machine::{camera_pose, ArmState, Controller, FrameSignals, FrozenGrasp, GraspProbe, MonitorSignals, CAMERA_OFFSET_M};
pub use pbvs::{pbvs_velocity, yaw_rate};
pub use state::{is_legal, HandoverState, Outcome};

use thiserror::Error;

use crate::aggregate::AggregateError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ControlError {
    #[error("illegal transition {from} -> {to}")]
    IllegalTransition { from: HandoverState, to: HandoverState },
    #[error("invalid controller setting `{0}`")]
    InvalidConfig(&'static str),
    #[error(transparent)]
    Window(#[from] AggregateError),
}
