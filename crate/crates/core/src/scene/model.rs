use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::shapes::Shape;
use crate::geometry::Pose;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Object { id: u32, name: String },
    Hand,
    Body,
    Background,
}

impl Label {
    pub fn is_human(&self) -> bool {
        matches!(self, Label::Hand | Label::Body)
    }

    pub fn pixel(&self) -> PixelLabel {
        match self {
            Label::Object { id, .. } => PixelLabel::Object(*id),
            Label::Hand => PixelLabel::Hand,
            Label::Body => PixelLabel::Body,
            Label::Background => PixelLabel::Background,
        }
    }
}

/// Per-pixel class, as stored in a rendered class image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub enum PixelLabel {
    #[default]
    Background,
    Object(u32),
    Hand,
    Body,
}

impl PixelLabel {
    /// Code written to class dumps: 0 background, 1 object, 2 hand, 3 body.
    pub fn code(&self) -> u8 {
        match self {
            PixelLabel::Background => 0,
            PixelLabel::Object(_) => 1,
            PixelLabel::Hand => 2,
            PixelLabel::Body => 3,
        }
    }

    pub fn is_human(&self) -> bool {
        matches!(self, PixelLabel::Hand | PixelLabel::Body)
    }

    /// Render tie-break rank when two primitives are hit at the same depth;
    /// human labels win so safety masks are never under-reported.
    pub(crate) fn tie_rank(&self) -> (u8, u32) {
        match self {
            PixelLabel::Hand => (0, 0),
            PixelLabel::Body => (1, 0),
            PixelLabel::Object(id) => (2, *id),
            PixelLabel::Background => (3, 0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Primitive {
    pub shape: Shape,
    pub label: Label,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Keyframe {
    pub t: f64,
    pub pose: Pose,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SceneError {
    #[error("primitive {0} has a non-positive radius or half-extent")]
    DegenerateShape(usize),
    #[error("keyframe times of primitive {0} are not strictly increasing")]
    UnorderedKeyframes(usize),
    #[error("trajectory list has {got} entries for {expected} primitives")]
    TrajectoryCount { expected: usize, got: usize },
    #[error("scene has no object primitive")]
    NoObject,
}

/// Labeled primitives with keyframed motion. Shapes are given in each
/// primitive's local frame; a keyframe pose maps that frame into the world.
/// Primitives without keyframes are static and their shapes are in world coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneModel {
    pub primitives: Vec<Primitive>,
    pub trajectories: Vec<Vec<Keyframe>>,
    pub robot_base: Pose,
}

/// A scene frozen at one instant; shapes are in world coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneSnapshot {
    pub primitives: Vec<Primitive>,
    pub robot_base: Pose,
}

impl SceneModel {
    pub fn new(primitives: Vec<Primitive>, trajectories: Vec<Vec<Keyframe>>, robot_base: Pose) -> Result<Self, SceneError> {
        let scene = SceneModel { primitives, trajectories, robot_base };
        scene.validate()?;
        Ok(scene)
    }

    pub fn static_scene(primitives: Vec<Primitive>, robot_base: Pose) -> Result<Self, SceneError> {
        let n = primitives.len();
        SceneModel::new(primitives, vec![Vec::new(); n], robot_base)
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        if self.trajectories.len() != self.primitives.len() {
            return Err(SceneError::TrajectoryCount { expected: self.primitives.len(), got: self.trajectories.len() });
        }
        for (i, p) in self.primitives.iter().enumerate() {
            if !p.shape.is_valid() {
                return Err(SceneError::DegenerateShape(i));
            }
        }
        for (i, kfs) in self.trajectories.iter().enumerate() {
            if kfs.windows(2).any(|w| !(w[0].t < w[1].t)) {
                return Err(SceneError::UnorderedKeyframes(i));
            }
        }
        Ok(())
    }

    pub fn has_object(&self) -> bool {
        self.primitives.iter().any(|p| matches!(p.label, Label::Object { .. }))
    }

    /// Snapshot at time `t` (seconds); poses are clamped outside the keyframe span.
    pub fn scene_at(&self, t: f64) -> SceneSnapshot {
        let primitives = self
            .primitives
            .iter()
            .zip(&self.trajectories)
            .map(|(prim, kfs)| match pose_at(kfs, t) {
                Some(pose) => Primitive { shape: prim.shape.transformed(&pose), label: prim.label.clone() },
                None => prim.clone(),
            })
            .collect();
        SceneSnapshot { primitives, robot_base: self.robot_base }
    }
}

pub fn pose_at(keyframes: &[Keyframe], t: f64) -> Option<Pose> {
    let first = keyframes.first()?;
    let last = keyframes.last()?;
    if t <= first.t {
        return Some(first.pose);
    }
    if t >= last.t {
        return Some(last.pose);
    }
    let i = keyframes.partition_point(|k| k.t <= t);
    let (a, b) = (&keyframes[i - 1], &keyframes[i]);
    let s = (t - a.t) / (b.t - a.t);
    Some(a.pose.interpolate(&b.pose, s))
}

impl SceneSnapshot {
    pub fn humans(&self) -> impl Iterator<Item = &Primitive> {
        self.primitives.iter().filter(|p| p.label.is_human())
    }

    pub fn object_ids(&self) -> Vec<u32> {
        let mut ids: Vec<u32> = self
            .primitives
            .iter()
            .filter_map(|p| match p.label {
                Label::Object { id, .. } => Some(id),
                _ => None,
            })
            .collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec3;

    fn ball() -> Primitive {
        Primitive {
            shape: Shape::Sphere { center: Vec3::zeros(), radius: 0.05 },
            label: Label::Object { id: 1, name: "plum".into() },
        }
    }

    fn center(s: &SceneSnapshot) -> Vec3 {
        match s.primitives[0].shape {
            Shape::Sphere { center, .. } => center,
            _ => unreachable!(),
        }
    }

    #[test]
    fn static_scene_is_time_invariant() {
        let scene = SceneModel::static_scene(vec![ball()], Pose::identity()).unwrap();
        assert_eq!(scene.scene_at(0.0), scene.scene_at(12.5));
    }

    #[test]
    fn linear_interpolation_and_clamp() {
        let kfs = vec![
            Keyframe { t: 0.0, pose: Pose::identity() },
            Keyframe { t: 1.0, pose: Pose::translation(Vec3::new(0.1, 0.0, 0.0)) },
        ];
        let scene = SceneModel::new(vec![ball()], vec![kfs], Pose::identity()).unwrap();
        assert!((center(&scene.scene_at(0.5)).x - 0.05).abs() < 1e-15);
        assert_eq!(center(&scene.scene_at(2.0)).x, 0.1);
    }

    #[test]
    fn validation() {
        let kfs = vec![Keyframe { t: 1.0, pose: Pose::identity() }, Keyframe { t: 1.0, pose: Pose::identity() }];
        assert_eq!(SceneModel::new(vec![ball()], vec![kfs], Pose::identity()), Err(SceneError::UnorderedKeyframes(0)));
        let flat = Primitive { shape: Shape::Sphere { center: Vec3::zeros(), radius: 0.0 }, label: Label::Hand };
        assert_eq!(SceneModel::static_scene(vec![flat], Pose::identity()), Err(SceneError::DegenerateShape(0)));
    }
}
