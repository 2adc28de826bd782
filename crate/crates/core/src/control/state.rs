use std::fmt;

use serde::{Deserialize, Serialize};

/// Terminal result the controller itself reaches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Success,
    GraspFail,
    SafetyViolation,
    DetectionFail,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HandoverState {
    Home,
    WaitingForObject,
    Aggregating,
    Approaching,
    SlowApproach,
    Grasping,
    Transporting,
    Dropping,
    Recovering,
    Done(Outcome),
}

impl HandoverState {
    pub fn is_done(&self) -> bool {
        matches!(self, HandoverState::Done(_))
    }

    /// States in which the controller is waiting for a usable detection.
    pub fn is_waiting(&self) -> bool {
        matches!(self, HandoverState::WaitingForObject | HandoverState::Aggregating)
    }

    pub fn is_approaching(&self) -> bool {
        matches!(self, HandoverState::Approaching | HandoverState::SlowApproach)
    }
}

impl fmt::Display for HandoverState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HandoverState::Done(o) => write!(f, "Done({o:?})"),
            s => write!(f, "{s:?}"),
        }
    }
}

/// Whether `from → to` is a transition the controller may take.
pub fn is_legal(from: HandoverState, to: HandoverState) -> bool {
    use HandoverState::*;
    if from.is_done() {
        return false;
    }
    // Watchdog, abort limit and collisions can interrupt any live state.
    if matches!(to, Done(_) | Recovering) {
        return true;
    }
    matches!(
        (from, to),
        (Home, WaitingForObject)
            | (WaitingForObject, Aggregating)
            | (Aggregating, Approaching)
            | (Approaching, SlowApproach)
            | (Approaching, Home)
            | (SlowApproach, Grasping)
            | (SlowApproach, Home)
            | (Grasping, Transporting)
            | (Grasping, Home)
            | (Transporting, Dropping)
            | (Recovering, Home)
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use HandoverState::*;

    #[test]
    fn happy_path_is_legal() {
        let path = [
            Home,
            WaitingForObject,
            Aggregating,
            Approaching,
            SlowApproach,
            Grasping,
            Transporting,
            Dropping,
            Done(Outcome::Success),
        ];
        for w in path.windows(2) {
            assert!(is_legal(w[0], w[1]), "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn illegal_examples() {
        assert!(!is_legal(Home, Grasping));
        assert!(!is_legal(WaitingForObject, Approaching));
        assert!(!is_legal(Done(Outcome::Success), Home));
        assert!(!is_legal(Transporting, Home));
    }

    #[test]
    fn serialized_names() {
        assert_eq!(serde_json::to_string(&WaitingForObject).unwrap(), "\"waiting_for_object\"");
        assert_eq!(serde_json::to_string(&Done(Outcome::GraspFail)).unwrap(), "{\"done\":\"grasp_fail\"}");
    }
}
