//! Pinhole camera model, rigid poses and depth images.
//!
//! Conventions used throughout the crate:
//! - camera frame: x to the right (image u), y down (image v), z along the
//!   optical axis;
//! - depth is the z coordinate in the camera frame, not the ray length;
//! - pixel `(u, v)` refers to the pixel center, `u` being the column.

use nalgebra::{Matrix3, Quaternion, Unit, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Vec3 = Vector3<f64>;

/// Blind-spot floor of the depth sensor, meters.
pub const DEFAULT_MIN_DEPTH: f64 = 0.105;
/// Far clip, meters.
pub const DEFAULT_MAX_DEPTH: f64 = 4.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("pixel ({u}, {v}) is outside the {width}x{height} image")]
    OutOfBounds { u: f64, v: f64, width: usize, height: usize },
    #[error("depth {0} is invalid")]
    InvalidDepth(f64),
    #[error("zero-norm quaternion")]
    ZeroQuaternion,
    #[error("invalid intrinsics: {0}")]
    InvalidIntrinsics(String),
    #[error("buffer of length {actual} does not match {width}x{height}")]
    DimensionMismatch { width: usize, height: usize, actual: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
    pub min_depth: f64,
    pub max_depth: f64,
}

impl Default for CameraIntrinsics {
    /// A 640x480 RGB-D sensor with a ~55 degree horizontal field of view.
    fn default() -> Self {
        CameraIntrinsics {
            fx: 615.0,
            fy: 615.0,
            cx: 319.5,
            cy: 239.5,
            width: 640,
            height: 480,
            min_depth: DEFAULT_MIN_DEPTH,
            max_depth: DEFAULT_MAX_DEPTH,
        }
    }
}

impl CameraIntrinsics {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        width: usize,
        height: usize,
        min_depth: f64,
        max_depth: f64,
    ) -> Result<Self, GeometryError> {
        let intr = CameraIntrinsics { fx, fy, cx, cy, width, height, min_depth, max_depth };
        intr.validate()?;
        Ok(intr)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let bad = |msg: &str| Err(GeometryError::InvalidIntrinsics(msg.to_string()));
        if !(self.fx > 0.0 && self.fy > 0.0) {
            return bad("focal lengths must be positive");
        }
        if self.width == 0 || self.height == 0 {
            return bad("image must be non-empty");
        }
        if !(self.cx >= 0.0 && self.cx < self.width as f64 && self.cy >= 0.0 && self.cy < self.height as f64) {
            return bad("principal point must lie inside the image");
        }
        if !(self.min_depth >= 0.0 && self.min_depth < self.max_depth) {
            return bad("min_depth must be non-negative and below max_depth");
        }
        Ok(())
    }

    /// Grasp widths are converted with `fx` alone, which needs square pixels.
    pub fn has_square_pixels(&self) -> bool {
        ((self.fx - self.fy) / self.fx).abs() < 0.01
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn contains(&self, u: f64, v: f64) -> bool {
        u >= 0.0 && v >= 0.0 && u <= (self.width - 1) as f64 && v <= (self.height - 1) as f64
    }

    pub fn depth_in_range(&self, depth: f64) -> bool {
        depth != 0.0 && depth >= self.min_depth && depth <= self.max_depth
    }

    /// Direction of the ray through pixel `(u, v)`, scaled so that its z component is 1.
    pub fn ray_direction(&self, u: f64, v: f64) -> Vec3 {
        Vec3::new((u - self.cx) / self.fx, (v - self.cy) / self.fy, 1.0)
    }

    /// Continuous pixel coordinates and depth of a camera-frame point, if it is in front of the camera.
    pub fn project(&self, p: &Vec3) -> Option<(f64, f64, f64)> {
        if p.z <= 0.0 {
            return None;
        }
        Some((self.fx * p.x / p.z + self.cx, self.fy * p.y / p.z + self.cy, p.z))
    }

    /// Nearest pixel to a projected point, if it falls inside the image.
    pub fn project_to_pixel(&self, p: &Vec3) -> Option<(usize, usize)> {
        let (u, v, _) = self.project(p)?;
        let (ur, vr) = (u.round(), v.round());
        if ur < 0.0 || vr < 0.0 || ur >= self.width as f64 || vr >= self.height as f64 {
            return None;
        }
        Some((ur as usize, vr as usize))
    }
}

/// Camera-frame point seen at pixel `(u, v)` with z-depth `depth`.
pub fn deproject(pixel: (f64, f64), depth: f64, intr: &CameraIntrinsics) -> Result<Vec3, GeometryError> {
    let (u, v) = pixel;
    if !intr.contains(u, v) {
        return Err(GeometryError::OutOfBounds { u, v, width: intr.width, height: intr.height });
    }
    if !intr.depth_in_range(depth) {
        return Err(GeometryError::InvalidDepth(depth));
    }
    Ok(Vec3::new((u - intr.cx) * depth / intr.fx, (v - intr.cy) * depth / intr.fy, depth))
}

/// Rigid transform: position in meters plus a unit quaternion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub position: Vec3,
    pub orientation: UnitQuaternion<f64>,
}

impl Default for Pose {
    fn default() -> Self {
        Pose::identity()
    }
}

impl Pose {
    pub fn identity() -> Self {
        Pose { position: Vec3::zeros(), orientation: UnitQuaternion::identity() }
    }

    /// Builds a pose from a `[w, x, y, z]` quaternion, renormalizing it.
    pub fn new(position: Vec3, wxyz: [f64; 4]) -> Result<Self, GeometryError> {
        let q = Quaternion::new(wxyz[0], wxyz[1], wxyz[2], wxyz[3]);
        let norm = q.norm();
        if !(norm > 1e-12) || !norm.is_finite() {
            return Err(GeometryError::ZeroQuaternion);
        }
        Ok(Pose { position, orientation: UnitQuaternion::new_normalize(q) })
    }

    pub fn from_parts(position: Vec3, orientation: UnitQuaternion<f64>) -> Self {
        Pose { position, orientation }
    }

    pub fn translation(position: Vec3) -> Self {
        Pose { position, orientation: UnitQuaternion::identity() }
    }

    /// Pose whose rotation has the given columns (images of the x, y and z axes).
    pub fn from_axes(position: Vec3, x: Vec3, y: Vec3, z: Vec3) -> Self {
        let m = Matrix3::from_columns(&[x, y, z]);
        let rot = nalgebra::Rotation3::from_matrix(&m);
        Pose { position, orientation: UnitQuaternion::from_rotation_matrix(&rot) }
    }

    pub fn wxyz(&self) -> [f64; 4] {
        let q = self.orientation.quaternion();
        [q.w, q.i, q.j, q.k]
    }

    pub fn rotate(&self, v: &Vec3) -> Vec3 {
        self.orientation.transform_vector(v)
    }

    pub fn transform_point(&self, p: &Vec3) -> Vec3 {
        self.orientation.transform_vector(p) + self.position
    }

    pub fn inverse(&self) -> Pose {
        let inv = self.orientation.inverse();
        Pose { position: -(inv.transform_vector(&self.position)), orientation: inv }
    }

    /// `self ∘ other`: first apply `other`, then `self`.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            position: self.transform_point(&other.position),
            orientation: self.orientation * other.orientation,
        }
    }

    pub fn axis_x(&self) -> Vec3 {
        self.rotate(&Vec3::x())
    }

    pub fn axis_z(&self) -> Vec3 {
        self.rotate(&Vec3::z())
    }

    /// Positions lerped, orientations slerped along the shorter arc.
    pub fn interpolate(&self, other: &Pose, s: f64) -> Pose {
        let position = self.position + (other.position - self.position) * s;
        let mut target = other.orientation;
        if self.orientation.coords.dot(&target.coords) < 0.0 {
            target = UnitQuaternion::new_unchecked(-target.into_inner());
        }
        let orientation = self
            .orientation
            .try_slerp(&target, s, 1e-12)
            .unwrap_or_else(|| UnitQuaternion::new_normalize(self.orientation.lerp(&target, s)));
        Pose { position, orientation }
    }

    /// Rotation by `angle` about a world-frame `axis` through the pose origin.
    pub fn rotated_about(&self, axis: &Vec3, angle: f64) -> Pose {
        let r = UnitQuaternion::from_axis_angle(&Unit::new_normalize(*axis), angle);
        Pose { position: self.position, orientation: r * self.orientation }
    }
}

pub fn transform_point(pose: &Pose, p: &Vec3) -> Vec3 {
    pose.transform_point(p)
}

/// Orthonormal basis `(e1, e2)` of the plane perpendicular to `axis`, chosen
/// deterministically so yaw angles about `axis` have a fixed reference.
pub fn plane_basis(axis: &Vec3) -> (Vec3, Vec3) {
    let a = axis.normalize();
    let reference = if a.cross(&Vec3::z()).norm() > 1e-6 { Vec3::z() } else { Vec3::x() };
    let e1 = a.cross(&reference).normalize();
    let e2 = a.cross(&e1);
    (e1, e2)
}

/// Folds an angle into `[0, π)`; parallel-jaw grasps are symmetric under π.
pub fn wrap_half_turn(angle: f64) -> f64 {
    let pi = std::f64::consts::PI;
    let w = angle.rem_euclid(pi);
    if w >= pi {
        0.0
    } else {
        w
    }
}

/// Smallest signed difference `target − current` between two π-periodic angles, in `[-π/2, π/2)`.
pub fn half_turn_error(target: f64, current: f64) -> f64 {
    let pi = std::f64::consts::PI;
    let d = (target - current).rem_euclid(pi);
    if d >= pi / 2.0 {
        d - pi
    } else {
        d
    }
}

/// Per-pixel metric depth, 0 marks invalid pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl DepthImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self, GeometryError> {
        if data.len() != width * height {
            return Err(GeometryError::DimensionMismatch { width, height, actual: data.len() });
        }
        Ok(DepthImage { width, height, data })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        DepthImage { width, height, data: vec![value; width * height] }
    }

    #[inline]
    pub fn index(&self, u: usize, v: usize) -> usize {
        v * self.width + u
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.data[v * self.width + u]
    }

    #[inline]
    pub fn set(&mut self, u: usize, v: usize, d: f64) {
        let i = self.index(u, v);
        self.data[i] = d;
    }

    pub fn is_valid(&self, u: usize, v: usize) -> bool {
        self.get(u, v) > 0.0
    }

    /// True when every nonzero value lies in the sensor range of `intr`.
    pub fn respects_range(&self, intr: &CameraIntrinsics) -> bool {
        self.data.iter().all(|&d| d == 0.0 || (d >= intr.min_depth && d <= intr.max_depth))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_pose(rng: &mut ChaCha8Rng) -> Pose {
        let q = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let t = Vec3::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        Pose::new(t, q).unwrap()
    }

    #[test]
    fn principal_point_maps_to_optical_axis() {
        let intr = CameraIntrinsics::default();
        let p = deproject((intr.cx, intr.cy), 0.5, &intr).unwrap();
        assert_eq!(p, Vec3::new(0.0, 0.0, 0.5));
    }

    #[test]
    fn one_focal_length_off_axis() {
        let intr = CameraIntrinsics::default();
        let p = deproject((intr.cx + intr.fx, intr.cy), 1.0, &CameraIntrinsics { width: 2000, ..intr }).unwrap();
        assert!((p - Vec3::new(1.0, 0.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn deproject_errors() {
        let intr = CameraIntrinsics::default();
        assert!(matches!(deproject((-1.0, 10.0), 0.5, &intr), Err(GeometryError::OutOfBounds { .. })));
        assert!(matches!(deproject((640.0, 10.0), 0.5, &intr), Err(GeometryError::OutOfBounds { .. })));
        assert_eq!(deproject((10.0, 10.0), 0.0, &intr), Err(GeometryError::InvalidDepth(0.0)));
        assert_eq!(deproject((10.0, 10.0), 0.1, &intr), Err(GeometryError::InvalidDepth(0.1)));
        assert_eq!(deproject((10.0, 10.0), 9.0, &intr), Err(GeometryError::InvalidDepth(9.0)));
    }

    #[test]
    fn project_deproject_round_trip() {
        let intr = CameraIntrinsics::default();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10_000 {
            let u = rng.gen_range(0.0..(intr.width - 1) as f64);
            let v = rng.gen_range(0.0..(intr.height - 1) as f64);
            let d = rng.gen_range(intr.min_depth..intr.max_depth);
            let p = deproject((u, v), d, &intr).unwrap();
            let (pu, pv, pd) = intr.project(&p).unwrap();
            assert!((pu - u).abs() < 1e-9 && (pv - v).abs() < 1e-9 && (pd - d).abs() < 1e-9);
        }
    }

    #[test]
    fn transform_examples() {
        let p = Vec3::new(1.0, 2.0, 3.0);
        assert_eq!(transform_point(&Pose::identity(), &p), p);
        let t = Pose::translation(Vec3::new(0.0, 0.0, 0.5));
        assert_eq!(transform_point(&t, &Vec3::zeros()), Vec3::new(0.0, 0.0, 0.5));
    }

    #[test]
    fn rigid_transforms_preserve_distances() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10_000 {
            let pose = random_pose(&mut rng);
            let a = Vec3::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            let b = Vec3::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            let d0 = (a - b).norm();
            let d1 = (pose.transform_point(&a) - pose.transform_point(&b)).norm();
            assert!((d0 - d1).abs() < 1e-9);
        }
    }

    #[test]
    fn pose_with_inverse_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let pose = random_pose(&mut rng);
            let id = pose.compose(&pose.inverse());
            assert!(id.position.norm() < 1e-9);
            assert!(id.orientation.angle() < 1e-9);
            let id2 = pose.inverse().compose(&pose);
            assert!(id2.position.norm() < 1e-9);
        }
    }

    #[test]
    fn quaternion_normalized_and_zero_rejected() {
        let p = Pose::new(Vec3::zeros(), [2.0, 0.0, 0.0, 0.0]).unwrap();
        assert!((p.orientation.quaternion().norm() - 1.0).abs() < 1e-12);
        assert_eq!(Pose::new(Vec3::zeros(), [0.0; 4]), Err(GeometryError::ZeroQuaternion));
    }

    #[test]
    fn intrinsics_validation() {
        assert!(CameraIntrinsics::new(0.0, 1.0, 1.0, 1.0, 4, 4, 0.1, 1.0).is_err());
        assert!(CameraIntrinsics::new(1.0, 1.0, 4.0, 1.0, 4, 4, 0.1, 1.0).is_err());
        assert!(CameraIntrinsics::new(1.0, 1.0, 1.0, 1.0, 4, 4, 1.0, 1.0).is_err());
        assert!(CameraIntrinsics::new(1.0, 1.0, 1.0, 1.0, 4, 4, 0.105, 1.0).is_ok());
    }

    #[test]
    fn half_turn_helpers() {
        let pi = std::f64::consts::PI;
        assert!((wrap_half_turn(pi + 0.1) - 0.1).abs() < 1e-12);
        assert!((wrap_half_turn(-0.1) - (pi - 0.1)).abs() < 1e-12);
        assert!((half_turn_error(0.1, pi - 0.1) - 0.2).abs() < 1e-12);
        assert!((half_turn_error(pi - 0.1, 0.1) + 0.2).abs() < 1e-12);
    }

    #[test]
    fn interpolation_endpoints() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_pose(&mut rng);
        let b = random_pose(&mut rng);
        let m0 = a.interpolate(&b, 0.0);
        let m1 = a.interpolate(&b, 1.0);
        assert!((m0.position - a.position).norm() < 1e-12);
        assert!(m0.orientation.angle_to(&a.orientation) < 1e-9);
        assert!(m1.orientation.angle_to(&b.orientation) < 1e-9);
    }
}
