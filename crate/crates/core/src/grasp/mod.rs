//! Grasp synthesis on a single depth frame: background plane insertion,
//! per-pixel grasp map, human-pixel filtering and best-grasp extraction.

pub mod filter;
pub mod map;
pub mod plane;
pub mod pose;

pub use filter::{dilate_chebyshev, filter_human, DEFAULT_MARGIN_PX};
pub use map::{grasp_map, GraspMap, ANGLE_COUNT, OBJECT_TOLERANCE, WIDTH_MARGIN};
pub use plane::{insert_plane, DEFAULT_PLANE_OFFSET};
pub use pose::{select_best, GraspPose, DEFAULT_Q_MIN};

use thiserror::Error;

use crate::geometry::GeometryError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraspError {
    #[error("target box holds no valid depth")]
    EmptyTarget,
    #[error("image dimensions do not match")]
    DimensionMismatch,
    #[error("no grasp reaches the quality threshold (best {best})")]
    NoValidGrasp { best: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

use crate::geometry::{CameraIntrinsics, DepthImage, Pose};
use crate::perception::{BoundingBox, SegMask};

/// Tunables of the single-frame grasp synthesis chain.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GraspParams {
    pub plane_offset_m: f64,
    pub human_margin_px: usize,
    pub q_min: f64,
}

impl Default for GraspParams {
    fn default() -> Self {
        GraspParams { plane_offset_m: DEFAULT_PLANE_OFFSET, human_margin_px: DEFAULT_MARGIN_PX, q_min: DEFAULT_Q_MIN }
    }
}

/// Plane insertion, grasp map, human filtering and best-grasp extraction on one frame.
pub fn synthesize(
    depth: &DepthImage,
    target: &BoundingBox,
    hand: &SegMask,
    body: &SegMask,
    intr: &CameraIntrinsics,
    cam_to_base: &Pose,
    params: &GraspParams,
) -> Result<GraspPose, GraspError> {
    let (filled, plane) = insert_plane(depth, target, params.plane_offset_m)?;
    let map = grasp_map(&filled, plane, intr);
    let map = filter_human(&map, hand, body, params.human_margin_px)?;
    select_best(&map, &filled, intr, cam_to_base, params.q_min)
}
