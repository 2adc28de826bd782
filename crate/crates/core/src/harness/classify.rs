use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::control::{HandoverState, Outcome};
use crate::scene::{GraspOutcome, Jaws, SceneModel};
use crate::trace::Record;

/// Experiment outcome categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TrialOutcome {
    Success,
    SafetyStop,
    GraspFail,
    DetectionFail,
}

impl TrialOutcome {
    pub const ALL: [TrialOutcome; 4] = [TrialOutcome::Success, TrialOutcome::SafetyStop, TrialOutcome::GraspFail, TrialOutcome::DetectionFail];

    pub fn as_str(&self) -> &'static str {
        match self {
            TrialOutcome::Success => "Success",
            TrialOutcome::SafetyStop => "SafetyStop",
            TrialOutcome::GraspFail => "GraspFail",
            TrialOutcome::DetectionFail => "DetectionFail",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        TrialOutcome::ALL.into_iter().find(|o| o.as_str() == s)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ClassifyError {
    #[error("log has no terminal record")]
    IncompleteLog,
}

/// Closest approach of the jaw volume to a human while not grasping, with its time.
pub fn min_human_clearance(log: &[Record], scene: &SceneModel) -> Option<(f64, f64)> {
    let base = &scene.robot_base;
    let mut best: Option<(f64, f64)> = None;
    for r in log {
        let Record::Tick { t, state, ee_pose, gripper_width, .. } = r else { continue };
        if *state == HandoverState::Grasping {
            continue;
        }
        let snapshot = scene.scene_at(*t);
        if snapshot.humans().next().is_none() {
            continue;
        }
        let pose = ee_pose.pose();
        let jaws = Jaws::new(base.transform_point(&pose.position), base.rotate(&pose.axis_x()));
        let c = jaws.human_clearance(&snapshot, *gripper_width);
        if best.is_none_or(|(b, _)| c < b) {
            best = Some((c, *t));
        }
    }
    best
}

/// Maps a trial log to its outcome. The simulated observer stops the trial
/// when the jaws come within `observer_margin` of a person outside grasping.
pub fn classify_outcome(log: &[Record], scene: &SceneModel, observer_margin: f64) -> Result<TrialOutcome, ClassifyError> {
    let done = log
        .iter()
        .find_map(|r| match r {
            Record::Done { outcome, .. } => Some(*outcome),
            _ => None,
        })
        .ok_or(ClassifyError::IncompleteLog)?;
    let pinched = log.iter().any(|r| matches!(r, Record::GraspAttempt { outcome: GraspOutcome::HumanPinch, .. }));
    if pinched || done == Outcome::SafetyViolation {
        return Ok(TrialOutcome::SafetyStop);
    }
    if min_human_clearance(log, scene).is_some_and(|(c, _)| c < observer_margin) {
        return Ok(TrialOutcome::SafetyStop);
    }
    Ok(match done {
        Outcome::Success => TrialOutcome::Success,
        Outcome::DetectionFail => TrialOutcome::DetectionFail,
        Outcome::GraspFail | Outcome::SafetyViolation => TrialOutcome::GraspFail,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Pose, Vec3};
    use crate::scene::{Label, Primitive, Shape};
    use crate::trace::PoseRecord;

    fn tick(t: f64, x: f64, state: HandoverState) -> Record {
        Record::Tick {
            t,
            t_ns: (t * 1e9) as u64,
            state,
            ee_pose: PoseRecord::from(&Pose::translation(Vec3::new(x, 0.0, 0.0))),
            gripper_width: 0.04,
            speed: 0.0,
        }
    }

    fn done(outcome: Outcome) -> Record {
        Record::Done { t: 1.0, t_ns: 1_000_000_000, outcome, aborts: 0, collisions: 0 }
    }

    fn hand_scene() -> SceneModel {
        let hand = Primitive { shape: Shape::Sphere { center: Vec3::new(1.0, 0.0, 0.0), radius: 0.05 }, label: Label::Hand };
        SceneModel::static_scene(vec![hand], Pose::identity()).unwrap()
    }

    #[test]
    fn incomplete_without_done() {
        assert_eq!(classify_outcome(&[], &hand_scene(), 0.02), Err(ClassifyError::IncompleteLog));
    }

    #[test]
    fn far_from_human_is_success() {
        let log = vec![tick(0.0, 0.0, HandoverState::Approaching), done(Outcome::Success)];
        assert_eq!(classify_outcome(&log, &hand_scene(), 0.02), Ok(TrialOutcome::Success));
    }

    #[test]
    fn close_approach_is_safety_stop() {
        // The 4 cm jaw segment centered at 0.93 reaches the hand surface at 0.95.
        let log = vec![tick(0.0, 0.93, HandoverState::Approaching), done(Outcome::Success)];
        assert_eq!(classify_outcome(&log, &hand_scene(), 0.02), Ok(TrialOutcome::SafetyStop));
        // The same pose while grasping is not judged.
        let log = vec![tick(0.0, 0.93, HandoverState::Grasping), done(Outcome::GraspFail)];
        assert_eq!(classify_outcome(&log, &hand_scene(), 0.02), Ok(TrialOutcome::GraspFail));
    }

    #[test]
    fn done_outcomes_map() {
        let s = hand_scene();
        assert_eq!(classify_outcome(&[done(Outcome::DetectionFail)], &s, 0.02), Ok(TrialOutcome::DetectionFail));
        assert_eq!(classify_outcome(&[done(Outcome::SafetyViolation)], &s, 0.02), Ok(TrialOutcome::SafetyStop));
        assert_eq!(classify_outcome(&[done(Outcome::GraspFail)], &s, 0.02), Ok(TrialOutcome::GraspFail));
    }
}
