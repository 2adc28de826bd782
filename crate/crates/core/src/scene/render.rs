//! Brute-force pinhole raycaster over labeled primitives.

use super::model::{PixelLabel, SceneSnapshot};
use super::shapes::Shape;
use crate::geometry::{CameraIntrinsics, DepthImage, Pose, Vec3};

#[derive(Debug, Clone, PartialEq)]
pub struct RenderOutput {
    pub depth: DepthImage,
    pub class_image: Vec<PixelLabel>,
}

impl RenderOutput {
    pub fn width(&self) -> usize {
        self.depth.width
    }

    pub fn height(&self) -> usize {
        self.depth.height
    }

    pub fn label(&self, u: usize, v: usize) -> PixelLabel {
        self.class_image[v * self.depth.width + u]
    }

    /// Pixels whose label is human but whose depth was lost to the blind spot.
    pub fn is_blind_human(&self, i: usize) -> bool {
        self.depth.data[i] == 0.0 && self.class_image[i].is_human()
    }
}

/// Nearest hit along a pixel ray: z-depth (may be below the sensor floor) and label.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayHit {
    pub z: f64,
    pub label: PixelLabel,
}

/// A snapshot expressed in a camera frame, ready for ray casting.
pub struct CameraScene {
    shapes: Vec<(Shape, PixelLabel)>,
    intr: CameraIntrinsics,
}

impl CameraScene {
    /// `camera_pose` maps camera coordinates into the world.
    pub fn new(snapshot: &SceneSnapshot, camera_pose: &Pose, intr: &CameraIntrinsics) -> Self {
        let world_to_cam = camera_pose.inverse();
        let shapes = snapshot
            .primitives
            .iter()
            .map(|p| (p.shape.transformed(&world_to_cam), p.label.pixel()))
            .collect();
        CameraScene { shapes, intr: *intr }
    }

    /// First surface crossed by the ray through pixel `(u, v)` in front of the camera.
    /// A camera inside a primitive reports a hit at z = 0.
    pub fn cast(&self, u: f64, v: f64) -> Option<RayHit> {
        let dir = self.intr.ray_direction(u, v);
        let origin = Vec3::zeros();
        let mut best: Option<RayHit> = None;
        for (shape, label) in &self.shapes {
            let Some((t0, t1)) = shape.line_interval(&origin, &dir) else { continue };
            if t1 < 0.0 {
                continue;
            }
            let z = t0.max(0.0);
            let better = match best {
                None => true,
                Some(b) => z < b.z || (z == b.z && label.tie_rank() < b.label.tie_rank()),
            };
            if better {
                best = Some(RayHit { z, label: *label });
            }
        }
        best
    }

    /// Sensor reading at a pixel: `(depth, label)` after blind-spot and far-clip rules.
    pub fn sample(&self, u: f64, v: f64) -> (f64, PixelLabel) {
        match self.cast(u, v) {
            None => (0.0, PixelLabel::Background),
            Some(hit) if hit.z < self.intr.min_depth => (0.0, hit.label),
            Some(hit) if hit.z <= self.intr.max_depth => (hit.z, hit.label),
            Some(_) => (0.0, PixelLabel::Background),
        }
    }
}

pub fn render(snapshot: &SceneSnapshot, camera_pose: &Pose, intr: &CameraIntrinsics) -> RenderOutput {
    let scene = CameraScene::new(snapshot, camera_pose, intr);
    let n = intr.pixel_count();
    let mut depth = Vec::with_capacity(n);
    let mut class_image = Vec::with_capacity(n);
    for v in 0..intr.height {
        for u in 0..intr.width {
            let (d, l) = scene.sample(u as f64, v as f64);
            depth.push(d);
            class_image.push(l);
        }
    }
    RenderOutput { depth: DepthImage { width: intr.width, height: intr.height, data: depth }, class_image }
}
