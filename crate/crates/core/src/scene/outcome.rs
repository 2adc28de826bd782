//! Physical ground truth for a gripper closing in the scene.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::model::{Label, SceneSnapshot};
use crate::geometry::Vec3;

/// Largest opening of the parallel gripper, meters.
pub const MAX_GRIPPER_WIDTH: f64 = 0.07;
/// Radius of the swept jaw volume, meters.
pub const JAW_RADIUS: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "object", rename_all = "snake_case")]
pub enum GraspOutcome {
    ObjectSecured(u32),
    EmptyClose,
    HumanPinch,
    ObjectTooWide,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OutcomeError {
    #[error("jaw width {0} outside (0, {MAX_GRIPPER_WIDTH}]")]
    InvalidWidth(f64),
}

/// Closing jaws in world coordinates: center point and closing direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jaws {
    pub center: Vec3,
    pub axis: Vec3,
}

impl Jaws {
    pub fn new(center: Vec3, axis: Vec3) -> Self {
        Jaws { center, axis: axis.normalize() }
    }

    pub fn endpoints(&self, width: f64) -> (Vec3, Vec3) {
        let half = self.axis * (width / 2.0);
        (self.center - half, self.center + half)
    }

    /// Distance from the swept jaw capsule to the nearest human primitive (0 when touching).
    pub fn human_clearance(&self, snapshot: &SceneSnapshot, width: f64) -> f64 {
        let (s0, s1) = self.endpoints(width);
        snapshot
            .humans()
            .map(|p| (p.shape.distance_to_segment(&s0, &s1) - JAW_RADIUS).max(0.0))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Outcome of closing jaws of opening `jaw_width` at `jaws`. Human contact is checked first.
pub fn grasp_outcome(snapshot: &SceneSnapshot, jaws: &Jaws, jaw_width: f64) -> Result<GraspOutcome, OutcomeError> {
    if !(jaw_width > 0.0 && jaw_width <= MAX_GRIPPER_WIDTH) {
        return Err(OutcomeError::InvalidWidth(jaw_width));
    }
    let (s0, s1) = jaws.endpoints(jaw_width);
    if snapshot.humans().any(|p| p.shape.distance_to_segment(&s0, &s1) <= JAW_RADIUS) {
        return Ok(GraspOutcome::HumanPinch);
    }

    let half = jaw_width / 2.0;
    // Per object: hull of its chord intervals along the closing line, and whether any overlaps the jaws.
    let mut chords: BTreeMap<u32, (f64, f64, bool)> = BTreeMap::new();
    for prim in &snapshot.primitives {
        let Label::Object { id, .. } = prim.label else { continue };
        let Some((t0, t1)) = prim.shape.line_interval(&jaws.center, &jaws.axis) else { continue };
        let touches = t1 >= -half && t0 <= half;
        let e = chords.entry(id).or_insert((t0, t1, false));
        e.0 = e.0.min(t0);
        e.1 = e.1.max(t1);
        e.2 |= touches;
    }
    let gripped: Vec<(u32, f64)> = chords
        .into_iter()
        .filter(|(_, (_, _, touches))| *touches)
        .map(|(id, (t0, t1, _))| (id, t1 - t0))
        .collect();
    if gripped.iter().any(|&(_, chord)| chord > MAX_GRIPPER_WIDTH) {
        return Ok(GraspOutcome::ObjectTooWide);
    }
    Ok(match gripped.first() {
        Some(&(id, _)) => GraspOutcome::ObjectSecured(id),
        None => GraspOutcome::EmptyClose,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Pose;
    use crate::scene::model::Primitive;
    use crate::scene::shapes::Shape;
    use nalgebra::UnitQuaternion;

    fn snap(prims: Vec<Primitive>) -> SceneSnapshot {
        SceneSnapshot { primitives: prims, robot_base: Pose::identity() }
    }

    fn obj(shape: Shape, id: u32) -> Primitive {
        Primitive { shape, label: Label::Object { id, name: format!("o{id}") } }
    }

    #[test]
    fn small_sphere_is_secured() {
        let s = snap(vec![obj(Shape::Sphere { center: Vec3::zeros(), radius: 0.02 }, 4)]);
        let out = grasp_outcome(&s, &Jaws::new(Vec3::zeros(), Vec3::x()), 0.05).unwrap();
        assert_eq!(out, GraspOutcome::ObjectSecured(4));
    }

    #[test]
    fn hand_in_jaws_dominates() {
        let hand = Primitive {
            shape: Shape::Capsule { a: Vec3::new(0.02, -0.1, 0.0), b: Vec3::new(0.02, 0.1, 0.0), radius: 0.008 },
            label: Label::Hand,
        };
        let s = snap(vec![obj(Shape::Sphere { center: Vec3::zeros(), radius: 0.02 }, 1), hand]);
        assert_eq!(grasp_outcome(&s, &Jaws::new(Vec3::zeros(), Vec3::x()), 0.05).unwrap(), GraspOutcome::HumanPinch);
    }

    #[test]
    fn wide_box_is_too_wide() {
        let b = Shape::Box { center: Vec3::zeros(), half_extents: Vec3::new(0.05, 0.02, 0.02), orientation: UnitQuaternion::identity() };
        let s = snap(vec![obj(b, 1)]);
        assert_eq!(grasp_outcome(&s, &Jaws::new(Vec3::zeros(), Vec3::x()), 0.07).unwrap(), GraspOutcome::ObjectTooWide);
        // Closing across the thin side fits.
        assert_eq!(grasp_outcome(&s, &Jaws::new(Vec3::zeros(), Vec3::y()), 0.07).unwrap(), GraspOutcome::ObjectSecured(1));
    }

    #[test]
    fn nothing_between_jaws() {
        let s = snap(vec![obj(Shape::Sphere { center: Vec3::new(0.0, 0.3, 0.0), radius: 0.02 }, 1)]);
        assert_eq!(grasp_outcome(&s, &Jaws::new(Vec3::zeros(), Vec3::x()), 0.05).unwrap(), GraspOutcome::EmptyClose);
    }

    #[test]
    fn width_is_validated() {
        let s = snap(vec![]);
        let j = Jaws::new(Vec3::zeros(), Vec3::x());
        assert_eq!(grasp_outcome(&s, &j, 0.0), Err(OutcomeError::InvalidWidth(0.0)));
        assert_eq!(grasp_outcome(&s, &j, 0.071), Err(OutcomeError::InvalidWidth(0.071)));
    }

    #[test]
    fn order_independent() {
        let a = obj(Shape::Sphere { center: Vec3::new(0.01, 0.0, 0.0), radius: 0.015 }, 2);
        let b = obj(Shape::Sphere { center: Vec3::new(-0.01, 0.0, 0.0), radius: 0.015 }, 1);
        let j = Jaws::new(Vec3::zeros(), Vec3::x());
        let o1 = grasp_outcome(&snap(vec![a.clone(), b.clone()]), &j, 0.06).unwrap();
        let o2 = grasp_outcome(&snap(vec![b, a]), &j, 0.06).unwrap();
        assert_eq!(o1, o2);
        assert_eq!(o1, GraspOutcome::ObjectSecured(1));
    }
}
