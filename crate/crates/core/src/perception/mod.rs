//! Ground-truth stand-ins for the detector and the two segmentation networks.
//!
//! Each provider sits behind a trait so a learned model can replace it.

pub mod detect;
pub mod noise;
pub mod segment;
pub mod select;

pub use detect::{connected_components, detect_objects, BoundingBox, Component, PERSON_LABEL};
pub use noise::{noise_rng, NoiseStage, PerceptionNoise};
pub use segment::{segment_body, segment_hand, SegMask};
pub use select::{mean_box_depth, select_target, Target, DEFAULT_REACH};

use crate::scene::RenderOutput;

pub trait ObjectDetector: Send + Sync {
    fn detect(&self, render: &RenderOutput, frame_index: u64) -> Vec<BoundingBox>;
}

pub trait HandSegmenter: Send + Sync {
    fn segment_hand(&self, render: &RenderOutput, frame_index: u64) -> SegMask;
}

pub trait BodySegmenter: Send + Sync {
    fn segment_body(&self, render: &RenderOutput, frame_index: u64) -> SegMask;
}

/// Derives outputs from rendered ground truth with configurable noise.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Oracle {
    pub noise: PerceptionNoise,
}

impl ObjectDetector for Oracle {
    fn detect(&self, render: &RenderOutput, frame_index: u64) -> Vec<BoundingBox> {
        detect_objects(render, &self.noise, frame_index)
    }
}

impl HandSegmenter for Oracle {
    fn segment_hand(&self, render: &RenderOutput, frame_index: u64) -> SegMask {
        segment::segment_hand(render, &self.noise, frame_index)
    }
}

impl BodySegmenter for Oracle {
    fn segment_body(&self, render: &RenderOutput, frame_index: u64) -> SegMask {
        segment::segment_body(render, &self.noise, frame_index)
    }
}

/// The three providers used by the pipeline.
pub struct Perception {
    pub detector: Box<dyn ObjectDetector>,
    pub hand: Box<dyn HandSegmenter>,
    pub body: Box<dyn BodySegmenter>,
}

impl Perception {
    pub fn oracle(noise: PerceptionNoise) -> Self {
        let o = Oracle { noise };
        Perception { detector: Box::new(o), hand: Box::new(o), body: Box::new(o) }
    }
}
