//! Per-pixel antipodal grasp map.
//!
//! For every pixel in front of the background plane, the object run through
//! that pixel is measured along 16 in-plane directions. The narrowest run
//! that fits the gripper gives the pixel's quality, angle and opening width.

use std::f64::consts::PI;

use crate::geometry::{CameraIntrinsics, DepthImage};
use crate::scene::MAX_GRIPPER_WIDTH;

pub const ANGLE_COUNT: usize = 16;
/// Pixels closer than `plane − OBJECT_TOLERANCE` belong to the object set.
pub const OBJECT_TOLERANCE: f64 = 0.005;
/// Clearance added to the measured width when opening the gripper.
pub const WIDTH_MARGIN: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct GraspMap {
    pub width: usize,
    pub height: usize,
    /// In `[0, 1]`.
    pub quality: Vec<f64>,
    /// Closing direction in the image, radians in `[0, π)`.
    pub angle: Vec<f64>,
    /// Gripper opening, meters in `[0, 0.07]`.
    pub grip_width: Vec<f64>,
}

impl GraspMap {
    pub fn zeros(width: usize, height: usize) -> Self {
        let n = width * height;
        GraspMap { width, height, quality: vec![0.0; n], angle: vec![0.0; n], grip_width: vec![0.0; n] }
    }

    pub fn max_quality(&self) -> f64 {
        self.quality.iter().copied().fold(0.0, f64::max)
    }
}

pub fn angle_of(k: usize) -> f64 {
    k as f64 * PI / ANGLE_COUNT as f64
}

/// Rounded pixel offsets `(round(s·cos θ), round(s·sin θ))` for `s = 1..=len`.
fn direction_offsets(k: usize, len: usize) -> Vec<(i64, i64)> {
    let (sin, cos) = angle_of(k).sin_cos();
    (1..=len).map(|s| ((s as f64 * cos).round() as i64, (s as f64 * sin).round() as i64)).collect()
}

enum Run {
    /// Count of consecutive object pixels stepped over before leaving the set.
    Inside(usize),
    /// Hit the image border, or grew past `cap`.
    Rejected,
}

#[allow(clippy::too_many_arguments)]
fn march(in_object: &[bool], width: usize, height: usize, u: usize, v: usize, offsets: &[(i64, i64)], sign: i64, cap: usize) -> Run {
    for (s, &(du, dv)) in offsets.iter().enumerate() {
        if s >= cap {
            return Run::Rejected;
        }
        let (x, y) = (u as i64 + sign * du, v as i64 + sign * dv);
        if x < 0 || y < 0 || x >= width as i64 || y >= height as i64 {
            return Run::Rejected;
        }
        if !in_object[y as usize * width + x as usize] {
            return Run::Inside(s);
        }
    }
    Run::Rejected
}

/// Grasp map of a plane-filled depth image.
pub fn grasp_map(depth: &DepthImage, plane_depth: f64, intr: &CameraIntrinsics) -> GraspMap {
    debug_assert!(intr.has_square_pixels(), "grasp widths assume fx ≈ fy");
    let (w, h) = (depth.width, depth.height);
    let mut map = GraspMap::zeros(w, h);
    let threshold = plane_depth - OBJECT_TOLERANCE;
    let in_object: Vec<bool> = depth.data.iter().map(|&d| d > 0.0 && d < threshold).collect();
    let longest = w.max(h) + 1;
    let offsets: Vec<Vec<(i64, i64)>> = (0..ANGLE_COUNT).map(|k| direction_offsets(k, longest)).collect();

    for v in 0..h {
        for u in 0..w {
            let i = v * w + u;
            if !in_object[i] {
                continue;
            }
            let d = depth.data[i];
            let px_width = |n: usize| n as f64 * d / intr.fx;
            // Smallest run length already too wide for the gripper.
            let mut cap = 1usize;
            while px_width(cap) <= MAX_GRIPPER_WIDTH {
                cap += 1;
            }
            let mut best: Option<(f64, usize, f64)> = None;
            for (k, offs) in offsets.iter().enumerate() {
                let Run::Inside(fwd) = march(&in_object, w, h, u, v, offs, 1, cap) else { continue };
                let Run::Inside(back) = march(&in_object, w, h, u, v, offs, -1, cap) else { continue };
                let run = fwd + back + 1;
                let width = px_width(run);
                if width > MAX_GRIPPER_WIDTH {
                    continue;
                }
                let q = 1.0 - width / MAX_GRIPPER_WIDTH;
                if best.is_none_or(|(bq, _, _)| q > bq) {
                    best = Some((q, k, width));
                }
            }
            if let Some((q, k, width)) = best {
                map.quality[i] = q;
                map.angle[i] = angle_of(k);
                map.grip_width[i] = (width + WIDTH_MARGIN).min(MAX_GRIPPER_WIDTH);
            }
        }
    }
    map
}

#[cfg(test)]
mod tests {
    use super::*;

    fn intr(w: usize, h: usize, f: f64) -> CameraIntrinsics {
        CameraIntrinsics::new(f, f, (w / 2) as f64, (h / 2) as f64, w, h, 0.105, 4.0).unwrap()
    }

    #[test]
    fn background_has_zero_quality() {
        let depth = DepthImage::filled(20, 20, 0.65);
        let map = grasp_map(&depth, 0.65, &intr(20, 20, 500.0));
        assert!(map.quality.iter().all(|&q| q == 0.0));
    }

    #[test]
    fn vertical_bar_width() {
        // 10 px wide, 30 px tall bar at 0.5 m on a 0.65 m plane.
        let mut depth = DepthImage::filled(60, 60, 0.65);
        for v in 15..45 {
            for u in 20..30 {
                depth.set(u, v, 0.5);
            }
        }
        let map = grasp_map(&depth, 0.65, &intr(60, 60, 500.0));
        let i = 30 * 60 + 25;
        let expected_w: f64 = 10.0 * 0.5 / 500.0;
        assert!((expected_w - 0.01).abs() < 1e-15);
        assert_eq!(map.angle[i], 0.0);
        assert_eq!(map.quality[i], 1.0 - expected_w / 0.07);
        assert!((map.quality[i] - 0.857142857).abs() < 1e-8);
        assert!((map.grip_width[i] - 0.02).abs() < 1e-15);
    }

    #[test]
    fn too_wide_everywhere_is_rejected() {
        // 0.2 m disc of object at 0.5 m: every chord through the center exceeds 0.07 m.
        let mut depth = DepthImage::filled(200, 200, 0.65);
        for v in 0..200 {
            for u in 0..200 {
                let (du, dv) = (u as f64 - 100.0, v as f64 - 100.0);
                if du * du + dv * dv <= 100.0 * 100.0 {
                    depth.set(u, v, 0.5);
                }
            }
        }
        let map = grasp_map(&depth, 0.65, &intr(200, 200, 250.0));
        assert_eq!(map.quality[100 * 200 + 100], 0.0);
    }

    #[test]
    fn run_touching_border_is_invalid() {
        let mut depth = DepthImage::filled(10, 10, 0.65);
        for u in 0..10 {
            depth.set(u, 5, 0.5);
        }
        // The horizontal run hits both borders. Steep directions leave the row
        // after one step; k = 3 is the first with round(sin θ) = 1.
        let map = grasp_map(&depth, 0.65, &intr(10, 10, 500.0));
        let i = 5 * 10 + 5;
        assert_eq!(map.quality[i], 1.0 - (0.5 / 500.0) / 0.07);
        assert_eq!(map.angle[i], angle_of(3));
    }
}
