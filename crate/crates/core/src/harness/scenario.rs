//! Scenario files: JSON with unit-suffixed field names; unknown fields are rejected.

use std::path::{Path, PathBuf};

use nalgebra::{Unit, UnitQuaternion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aggregate::WindowConfig;
use crate::control::ControllerConfig;
use crate::geometry::{CameraIntrinsics, Pose, Vec3, DEFAULT_MAX_DEPTH, DEFAULT_MIN_DEPTH};
use crate::grasp::GraspParams;
use crate::perception::{PerceptionNoise, DEFAULT_REACH};
use crate::pipeline::PipelineConfig;
use crate::scene::{Keyframe, Label, Primitive, SceneModel, Shape};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{file}:{line}:{column}: at `{field}`: {message}")]
    Parse { file: String, line: usize, column: usize, field: String, message: String },
    #[error("{file}: {message}")]
    Invalid { file: String, message: String },
    #[error("{file}: {source}")]
    Io { file: String, source: std::io::Error },
}

impl ScenarioError {
    pub fn is_io(&self) -> bool {
        matches!(self, ScenarioError::Io { .. })
    }
}

fn identity_wxyz() -> [f64; 4] {
    [1.0, 0.0, 0.0, 0.0]
}

fn default_trials() -> u32 {
    1
}

fn default_observer_margin() -> f64 {
    0.02
}

/// A pose given either as a quaternion or by its x and z axes (y completes the right-handed frame).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseSpec {
    pub position_m: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wxyz: Option<[f64; 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_axis: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_axis: Option<[f64; 3]>,
}

impl PoseSpec {
    pub fn at(position_m: [f64; 3]) -> Self {
        PoseSpec { position_m, wxyz: None, x_axis: None, z_axis: None }
    }

    pub fn resolve(&self) -> Result<Pose, String> {
        let p = Vec3::from(self.position_m);
        match (self.wxyz, self.x_axis, self.z_axis) {
            (None, None, None) => Ok(Pose::translation(p)),
            (Some(q), None, None) => Pose::new(p, q).map_err(|e| e.to_string()),
            (None, Some(x), Some(z)) => {
                let (x, z) = (Vec3::from(x), Vec3::from(z));
                if x.norm() == 0.0 || z.norm() == 0.0 || x.normalize().dot(&z.normalize()).abs() > 1e-6 {
                    return Err("x_axis and z_axis must be nonzero and perpendicular".into());
                }
                let (x, z) = (x.normalize(), z.normalize());
                Ok(Pose::from_axes(p, x, z.cross(&x), z))
            }
            _ => Err("give either wxyz or both x_axis and z_axis".into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum ShapeSpec {
    Sphere {
        center_m: [f64; 3],
        radius_m: f64,
    },
    Capsule {
        a_m: [f64; 3],
        b_m: [f64; 3],
        radius_m: f64,
    },
    Box {
        center_m: [f64; 3],
        half_extents_m: [f64; 3],
        #[serde(default = "identity_wxyz")]
        wxyz: [f64; 4],
    },
}

impl ShapeSpec {
    pub fn resolve(&self) -> Result<Shape, String> {
        Ok(match self {
            ShapeSpec::Sphere { center_m, radius_m } => Shape::Sphere { center: Vec3::from(*center_m), radius: *radius_m },
            ShapeSpec::Capsule { a_m, b_m, radius_m } => Shape::Capsule { a: Vec3::from(*a_m), b: Vec3::from(*b_m), radius: *radius_m },
            ShapeSpec::Box { center_m, half_extents_m, wxyz } => Shape::Box {
                center: Vec3::from(*center_m),
                half_extents: Vec3::from(*half_extents_m),
                orientation: Pose::new(Vec3::zeros(), *wxyz).map_err(|e| e.to_string())?.orientation,
            },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum LabelSpec {
    Object { id: u32, name: String },
    Hand,
    Body,
}

impl LabelSpec {
    fn resolve(&self) -> Label {
        match self {
            LabelSpec::Object { id, name } => Label::Object { id: *id, name: name.clone() },
            LabelSpec::Hand => Label::Hand,
            LabelSpec::Body => Label::Body,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KeyframeSpec {
    pub t_s: f64,
    pub position_m: [f64; 3],
    #[serde(default = "identity_wxyz")]
    pub wxyz: [f64; 4],
}

/// One labeled primitive. Without keyframes the shape is static in world
/// coordinates; with keyframes it is given in a local frame moved by them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrimitiveSpec {
    pub label: LabelSpec,
    pub shape: ShapeSpec,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub keyframes: Vec<KeyframeSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraSpec {
    pub width_px: usize,
    pub height_px: usize,
    pub fx_px: f64,
    pub fy_px: f64,
    pub cx_px: f64,
    pub cy_px: f64,
    #[serde(default = "default_min_depth")]
    pub min_depth_m: f64,
    #[serde(default = "default_max_depth")]
    pub max_depth_m: f64,
}

fn default_min_depth() -> f64 {
    DEFAULT_MIN_DEPTH
}

fn default_max_depth() -> f64 {
    DEFAULT_MAX_DEPTH
}

impl Default for CameraSpec {
    fn default() -> Self {
        let d = CameraIntrinsics::default();
        CameraSpec {
            width_px: d.width,
            height_px: d.height,
            fx_px: d.fx,
            fy_px: d.fy,
            cx_px: d.cx,
            cy_px: d.cy,
            min_depth_m: d.min_depth,
            max_depth_m: d.max_depth,
        }
    }
}

impl CameraSpec {
    pub fn resolve(&self) -> Result<CameraIntrinsics, String> {
        let i = CameraIntrinsics::new(self.fx_px, self.fy_px, self.cx_px, self.cy_px, self.width_px, self.height_px, self.min_depth_m, self.max_depth_m)
            .map_err(|e| e.to_string())?;
        if !i.has_square_pixels() {
            return Err("grasp widths need |fx - fy| / fx < 0.01".into());
        }
        Ok(i)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotSpec {
    #[serde(default = "base_at_origin")]
    pub base: PoseSpec,
    pub home: PoseSpec,
    pub drop: PoseSpec,
    #[serde(default = "default_reach")]
    pub reach_m: f64,
}

fn base_at_origin() -> PoseSpec {
    PoseSpec::at([0.0; 3])
}

fn default_reach() -> f64 {
    DEFAULT_REACH
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSpec {
    pub miss_prob: f64,
    pub bbox_jitter_px: u32,
    pub mask_flip_prob: f64,
}

impl NoiseSpec {
    pub fn with_seed(&self, seed: u64) -> PerceptionNoise {
        PerceptionNoise { miss_prob: self.miss_prob, bbox_jitter_px: self.bbox_jitter_px, mask_flip_prob: self.mask_flip_prob, seed }
    }
}

/// Per-trial randomization of where the person presents the object.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VariationSpec {
    /// Whole-scene shift, uniform in `[-j, j]` per axis.
    pub offset_jitter_m: [f64; 3],
    /// Rotation of the object primitives about `rotation_axis` through their centroid, uniform in `[-r, r]`.
    pub object_rotation_rad: f64,
    pub rotation_axis: [f64; 3],
    /// Shift of every keyframe time of moving primitives, uniform in `[-j, j]`.
    pub keyframe_time_jitter_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default = "default_trials")]
    pub trials: u32,
    #[serde(default)]
    pub camera: CameraSpec,
    pub robot: RobotSpec,
    pub scene: Vec<PrimitiveSpec>,
    #[serde(default)]
    pub variation: VariationSpec,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default)]
    pub pipeline: PipelineConfig,
    #[serde(default)]
    pub controller: ControllerConfig,
    #[serde(default)]
    pub window: WindowConfig,
    #[serde(default)]
    pub grasp: GraspParams,
    #[serde(default = "default_observer_margin")]
    pub observer_margin_m: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub collision_events_s: Vec<f64>,
}

/// A scenario with every nested value resolved and checked.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub intrinsics: CameraIntrinsics,
    pub base: Pose,
    pub home: Pose,
    pub drop: Pose,
    pub primitives: Vec<Primitive>,
    pub trajectories: Vec<Vec<Keyframe>>,
}

fn variation_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ 0x7661_7269_6174_696f)
}

impl Scenario {
    pub fn from_json(text: &str, file: &str) -> Result<Self, ScenarioError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let scenario: Scenario = serde_path_to_error::deserialize(de).map_err(|e| {
            let field = e.path().to_string();
            let inner = e.into_inner();
            ScenarioError::Parse { file: file.to_string(), line: inner.line(), column: inner.column(), field, message: inner.to_string() }
        })?;
        scenario.resolve().map_err(|message| ScenarioError::Invalid { file: file.to_string(), message })?;
        Ok(scenario)
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let file = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io { file: file.clone(), source })?;
        Scenario::from_json(&text, &file)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// Checks everything and converts to simulation types.
    pub fn resolve(&self) -> Result<Resolved, String> {
        if self.trials == 0 {
            return Err("trials must be at least 1".into());
        }
        if !(self.observer_margin_m > 0.0) {
            return Err("observer_margin_m must be positive".into());
        }
        if self.collision_events_s.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
            return Err("collision_events_s must be finite and nonnegative".into());
        }
        let noise = self.noise.with_seed(0);
        if !noise.is_valid() {
            return Err("noise probabilities must lie in [0, 1]".into());
        }
        let v = &self.variation;
        if v.offset_jitter_m.iter().any(|j| !(*j >= 0.0)) || !(v.object_rotation_rad >= 0.0) || !(v.keyframe_time_jitter_s >= 0.0) {
            return Err("variation magnitudes must be nonnegative".into());
        }
        if v.object_rotation_rad > 0.0 && Vec3::from(v.rotation_axis).norm() == 0.0 {
            return Err("variation.rotation_axis must be nonzero".into());
        }
        self.pipeline.compile().map_err(|e| format!("pipeline: {e}"))?;
        self.controller.validate().map_err(|e| format!("controller: {e}"))?;
        self.window.validate().map_err(|e| format!("window: {e}"))?;
        if !(self.grasp.q_min > 0.0 && self.grasp.q_min < 1.0) || !(self.grasp.plane_offset_m > 0.0) {
            return Err("grasp: need 0 < q_min < 1 and plane_offset_m > 0".into());
        }
        let intrinsics = self.camera.resolve().map_err(|e| format!("camera: {e}"))?;
        let base = self.robot.base.resolve().map_err(|e| format!("robot.base: {e}"))?;
        let home = self.robot.home.resolve().map_err(|e| format!("robot.home: {e}"))?;
        let drop = self.robot.drop.resolve().map_err(|e| format!("robot.drop: {e}"))?;
        if !(self.robot.reach_m > 0.0) {
            return Err("robot.reach_m must be positive".into());
        }
        let mut primitives = Vec::new();
        let mut trajectories = Vec::new();
        for (i, p) in self.scene.iter().enumerate() {
            let shape = p.shape.resolve().map_err(|e| format!("scene[{i}]: {e}"))?;
            primitives.push(Primitive { shape, label: p.label.resolve() });
            let mut kfs = Vec::new();
            for k in &p.keyframes {
                let pose = Pose::new(Vec3::from(k.position_m), k.wxyz).map_err(|e| format!("scene[{i}] keyframe: {e}"))?;
                kfs.push(Keyframe { t: k.t_s, pose });
            }
            trajectories.push(kfs);
        }
        let resolved = Resolved { intrinsics, base, home, drop, primitives, trajectories };
        SceneModel::new(resolved.primitives.clone(), resolved.trajectories.clone(), base).map_err(|e| e.to_string())?;
        Ok(resolved)
    }

    /// Scene of one trial, with the variation drawn from `seed`.
    pub fn scene_for(&self, seed: u64) -> Result<SceneModel, String> {
        let r = self.resolve()?;
        let v = &self.variation;
        let mut rng = variation_rng(seed);
        let offset = Vec3::from_fn(|i, _| {
            let j = v.offset_jitter_m[i];
            if j > 0.0 {
                rng.gen_range(-j..=j)
            } else {
                0.0
            }
        });
        let angle = if v.object_rotation_rad > 0.0 { rng.gen_range(-v.object_rotation_rad..=v.object_rotation_rad) } else { 0.0 };
        let lag = if v.keyframe_time_jitter_s > 0.0 { rng.gen_range(-v.keyframe_time_jitter_s..=v.keyframe_time_jitter_s) } else { 0.0 };

        let object_centers: Vec<Vec3> = r
            .primitives
            .iter()
            .filter(|p| matches!(p.label, Label::Object { .. }))
            .map(|p| match p.shape {
                Shape::Sphere { center, .. } | Shape::Box { center, .. } => center,
                Shape::Capsule { a, b, .. } => (a + b) / 2.0,
            })
            .collect();
        let pivot = if object_centers.is_empty() { Vec3::zeros() } else { object_centers.iter().sum::<Vec3>() / object_centers.len() as f64 };
        let spin = if angle != 0.0 {
            let rot = UnitQuaternion::from_axis_angle(&Unit::new_normalize(Vec3::from(v.rotation_axis)), angle);
            // Rotation about the pivot: p -> pivot + R (p - pivot).
            Pose::from_parts(pivot - rot * pivot, rot)
        } else {
            Pose::identity()
        };
        let shift = Pose::translation(offset);

        let mut primitives = Vec::new();
        let mut trajectories = Vec::new();
        for (p, kfs) in r.primitives.iter().zip(&r.trajectories) {
            let is_object = matches!(p.label, Label::Object { .. });
            let placement = if is_object { shift.compose(&spin) } else { shift };
            if kfs.is_empty() {
                primitives.push(Primitive { shape: p.shape.transformed(&placement), label: p.label.clone() });
                trajectories.push(Vec::new());
            } else {
                primitives.push(p.clone());
                trajectories.push(kfs.iter().map(|k| Keyframe { t: k.t + lag, pose: placement.compose(&k.pose) }).collect());
            }
        }
        SceneModel::new(primitives, trajectories, r.base).map_err(|e| e.to_string())
    }
}

/// Scenario plus the file it came from.
#[derive(Debug, Clone)]
pub struct LoadedScenario {
    pub path: PathBuf,
    pub scenario: Scenario,
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const MINIMAL: &str = r#"{
        "name": "minimal",
        "robot": {
            "home": {"position_m": [0.3, 0.0, 0.4], "x_axis": [0, -1, 0], "z_axis": [1, 0, 0]},
            "drop": {"position_m": [0.0, 0.45, 0.35]}
        },
        "scene": [
            {"label": {"object": {"id": 1, "name": "ball"}}, "shape": {"sphere": {"center_m": [0.62, 0, 0.4], "radius_m": 0.03}}}
        ]
    }"#;

    #[test]
    fn minimal_parses_with_defaults() {
        let s = Scenario::from_json(MINIMAL, "minimal.json").unwrap();
        assert_eq!(s.trials, 1);
        assert_eq!(s.observer_margin_m, 0.02);
        assert_eq!(s.controller, ControllerConfig::default());
        let r = s.resolve().unwrap();
        assert!((r.home.rotate(&Vec3::z()) - Vec3::x()).norm() < 1e-12);
        assert!((r.home.rotate(&Vec3::y()) + Vec3::z()).norm() < 1e-12);
    }

    #[test]
    fn unknown_field_reports_location() {
        let text = MINIMAL.replace("\"radius_m\": 0.03", "\"radius_m\": 0.03, \"radius\": 1");
        match Scenario::from_json(&text, "x.json") {
            Err(ScenarioError::Parse { line, field, message, .. }) => {
                assert_eq!(line, 8);
                assert!(field.starts_with("scene[0].shape"), "{field}");
                assert!(message.contains("radius"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn invalid_values_rejected() {
        let text = MINIMAL.replace("\"name\": \"minimal\",", "\"name\": \"minimal\", \"trials\": 0,");
        assert!(matches!(Scenario::from_json(&text, "x.json"), Err(ScenarioError::Invalid { .. })));
        let text = MINIMAL.replace("0.03}", "-0.03}");
        assert!(matches!(Scenario::from_json(&text, "x.json"), Err(ScenarioError::Invalid { .. })));
    }

    #[test]
    fn variation_is_seeded() {
        let mut s = Scenario::from_json(MINIMAL, "m.json").unwrap();
        s.variation.offset_jitter_m = [0.01, 0.01, 0.0];
        let a = s.scene_for(3).unwrap();
        assert_eq!(a, s.scene_for(3).unwrap());
        assert_ne!(a, s.scene_for(4).unwrap());
    }

    #[test]
    fn round_trips_through_json() {
        let s = Scenario::from_json(MINIMAL, "m.json").unwrap();
        assert_eq!(Scenario::from_json(&s.to_json(), "again.json").unwrap(), s);
    }
}
