use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use super::map::GraspMap;
use super::GraspError;
use crate::geometry::{deproject, plane_basis, wrap_half_turn, CameraIntrinsics, DepthImage, Pose, Vec3};
use crate::pgm;

pub const DEFAULT_Q_MIN: f64 = 0.1;

/// A top-down parallel-jaw grasp expressed in the robot base frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraspPose {
    pub point_base: Vec3,
    /// Closing direction about `approach_axis`, measured in `plane_basis(approach_axis)`.
    pub yaw: f64,
    pub approach_axis: Vec3,
    pub width: f64,
    pub quality: f64,
    pub source_pixel: (usize, usize),
}

impl GraspPose {
    pub fn closing_axis(&self) -> Vec3 {
        closing_axis(&self.approach_axis, self.yaw)
    }
}

pub fn closing_axis(approach: &Vec3, yaw: f64) -> Vec3 {
    let (e1, e2) = plane_basis(approach);
    e1 * yaw.cos() + e2 * yaw.sin()
}

/// Yaw of `closing` (projected onto the plane normal to `approach`), in `[0, π)`.
pub fn yaw_of(approach: &Vec3, closing: &Vec3) -> f64 {
    let (e1, e2) = plane_basis(approach);
    wrap_half_turn(closing.dot(&e2).atan2(closing.dot(&e1)))
}

/// Highest-quality pixel of `map` as a base-frame grasp. Ties go to the lowest row-major index.
pub fn select_best(map: &GraspMap, depth: &DepthImage, intr: &CameraIntrinsics, cam_to_base: &Pose, q_min: f64) -> Result<GraspPose, GraspError> {
    if depth.width != map.width || depth.height != map.height {
        return Err(GraspError::DimensionMismatch);
    }
    let mut best = 0usize;
    for (i, &q) in map.quality.iter().enumerate() {
        if q > map.quality[best] {
            best = i;
        }
    }
    let quality = map.quality.get(best).copied().unwrap_or(0.0);
    if quality < q_min || quality <= 0.0 {
        return Err(GraspError::NoValidGrasp { best: quality });
    }
    let (u, v) = (best % map.width, best / map.width);
    let p_cam = deproject((u as f64, v as f64), depth.get(u, v), intr)?;
    let theta = map.angle[best];
    let closing_cam = Vec3::new(theta.cos() / intr.fx, theta.sin() / intr.fy, 0.0).normalize();
    let approach_axis = cam_to_base.rotate(&Vec3::z());
    let yaw = yaw_of(&approach_axis, &cam_to_base.rotate(&closing_cam));
    Ok(GraspPose {
        point_base: cam_to_base.transform_point(&p_cam),
        yaw,
        approach_axis,
        width: map.grip_width[best],
        quality,
        source_pixel: (u, v),
    })
}

/// Quality, angle and width maps as three 16-bit PGM images.
pub fn dump<Q: Write, A: Write, W: Write>(map: &GraspMap, quality: Q, angle: A, width: W) -> io::Result<()> {
    let scale = |vals: &[f64], k: f64| -> Vec<u16> { vals.iter().map(|x| (x * k).round().clamp(0.0, 65535.0) as u16).collect() };
    pgm::write_u16(quality, map.width, map.height, &scale(&map.quality, 65535.0))?;
    pgm::write_u16(angle, map.width, map.height, &scale(&map.angle, 65535.0 / std::f64::consts::PI))?;
    pgm::write_u16(width, map.width, map.height, &scale(&map.grip_width, 1000.0))
}
