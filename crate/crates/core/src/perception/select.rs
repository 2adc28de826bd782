//! Handover target choice: the foremost non-person detection within reach.

use std::cmp::Ordering;

use super::detect::BoundingBox;
use crate::geometry::{deproject, CameraIntrinsics, DepthImage, Pose};

/// Reach of the arm around its base, meters.
pub const DEFAULT_REACH: f64 = 0.855;

#[derive(Debug, Clone, PartialEq)]
pub struct Target {
    pub bbox: BoundingBox,
    pub mean_depth: f64,
}

/// Mean of the valid depths inside `bbox`, if any.
pub fn mean_box_depth(bbox: &BoundingBox, depth: &DepthImage) -> Option<f64> {
    let (mut sum, mut n) = (0.0, 0usize);
    for (u, v) in bbox.pixels() {
        let d = depth.get(u, v);
        if d > 0.0 {
            sum += d;
            n += 1;
        }
    }
    (n > 0).then(|| sum / n as f64)
}

fn box_order(a: &Target, b: &Target) -> Ordering {
    a.mean_depth
        .total_cmp(&b.mean_depth)
        .then(a.bbox.u_min.cmp(&b.bbox.u_min))
        .then(a.bbox.v_min.cmp(&b.bbox.v_min))
        .then(a.bbox.u_max.cmp(&b.bbox.u_max))
        .then(a.bbox.v_max.cmp(&b.bbox.v_max))
        .then(a.bbox.label.cmp(&b.bbox.label))
        .then(a.bbox.confidence.total_cmp(&b.bbox.confidence))
}

/// Drops "Person" boxes, boxes without depth and boxes out of reach, then
/// returns the one with the smallest mean depth.
pub fn select_target(
    boxes: &[BoundingBox],
    depth: &DepthImage,
    intr: &CameraIntrinsics,
    cam_to_base: &Pose,
    reach: f64,
) -> Option<Target> {
    boxes
        .iter()
        .filter(|b| !b.is_person())
        .filter_map(|b| {
            let mean_depth = mean_box_depth(b, depth)?;
            let center = deproject(b.center(), mean_depth, intr).ok()?;
            let in_base = cam_to_base.transform_point(&center);
            (in_base.norm() <= reach).then(|| Target { bbox: b.clone(), mean_depth })
        })
        .min_by(box_order)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec3;

    fn intr() -> CameraIntrinsics {
        CameraIntrinsics::new(100.0, 100.0, 49.5, 49.5, 100, 100, 0.105, 4.0).unwrap()
    }

    fn bx(u0: usize, v0: usize, u1: usize, v1: usize, label: &str) -> BoundingBox {
        BoundingBox { u_min: u0, v_min: v0, u_max: u1, v_max: v1, label: label.into(), confidence: 0.9 }
    }

    fn fill(depth: &mut DepthImage, b: &BoundingBox, d: f64) {
        for (u, v) in b.pixels() {
            depth.set(u, v, d);
        }
    }

    #[test]
    fn person_is_never_a_target() {
        let b = bx(40, 40, 60, 60, "Person");
        let mut depth = DepthImage::filled(100, 100, 0.0);
        fill(&mut depth, &b, 0.5);
        assert!(select_target(&[b], &depth, &intr(), &Pose::identity(), DEFAULT_REACH).is_none());
    }

    #[test]
    fn foremost_box_wins() {
        let near = bx(10, 10, 20, 20, "object:1");
        let far = bx(60, 60, 70, 70, "object:2");
        let mut depth = DepthImage::filled(100, 100, 0.0);
        fill(&mut depth, &near, 0.6);
        fill(&mut depth, &far, 0.9);
        let boxes = [far.clone(), near.clone()];
        let t = select_target(&boxes, &depth, &intr(), &Pose::identity(), 2.0).unwrap();
        assert_eq!(t.bbox, near);
        assert!((t.mean_depth - 0.6).abs() < 1e-12);
    }

    #[test]
    fn out_of_reach_box_dropped() {
        let b = bx(45, 45, 54, 54, "object:1");
        let mut depth = DepthImage::filled(100, 100, 0.0);
        fill(&mut depth, &b, 0.5);
        // Camera 0.7 m in front of the base: the box center lands ~1.2 m away.
        let cam = Pose::translation(Vec3::new(0.0, 0.0, 0.7));
        assert!(select_target(std::slice::from_ref(&b), &depth, &intr(), &cam, DEFAULT_REACH).is_none());
        assert!(select_target(&[b], &depth, &intr(), &cam, 1.3).is_some());
    }

    #[test]
    fn box_without_depth_dropped() {
        let b = bx(45, 45, 54, 54, "object:1");
        let depth = DepthImage::filled(100, 100, 0.0);
        assert!(select_target(&[b], &depth, &intr(), &Pose::identity(), 2.0).is_none());
    }

    #[test]
    fn ties_break_on_coordinates() {
        let a = bx(30, 10, 35, 15, "object:1");
        let b = bx(10, 50, 15, 55, "object:2");
        let mut depth = DepthImage::filled(100, 100, 0.0);
        fill(&mut depth, &a, 0.7);
        fill(&mut depth, &b, 0.7);
        let t1 = select_target(&[a.clone(), b.clone()], &depth, &intr(), &Pose::identity(), 2.0).unwrap();
        let t2 = select_target(&[b.clone(), a], &depth, &intr(), &Pose::identity(), 2.0).unwrap();
        assert_eq!(t1, t2);
        assert_eq!(t1.bbox, b);
    }
}
