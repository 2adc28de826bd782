//! Labeled-primitive world model, depth/class rendering and grasp ground truth.

pub mod model;
pub mod outcome;
pub mod render;
pub mod shapes;

pub use model::{pose_at, Keyframe, Label, PixelLabel, Primitive, SceneError, SceneModel, SceneSnapshot};
pub use outcome::{grasp_outcome, GraspOutcome, Jaws, OutcomeError, JAW_RADIUS, MAX_GRIPPER_WIDTH};
pub use render::{render, CameraScene, RayHit, RenderOutput};
pub use shapes::Shape;
