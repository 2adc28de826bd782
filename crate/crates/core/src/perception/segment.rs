//! Oracle hand and body segmentation.

use rand::Rng;

use super::noise::{noise_rng, NoiseStage, PerceptionNoise};
use crate::scene::{PixelLabel, RenderOutput};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegMask {
    pub width: usize,
    pub height: usize,
    pub bits: Vec<bool>,
}

impl SegMask {
    pub fn empty(width: usize, height: usize) -> Self {
        SegMask { width, height, bits: vec![false; width * height] }
    }

    pub fn get(&self, u: usize, v: usize) -> bool {
        self.bits[v * self.width + u]
    }

    pub fn set(&mut self, u: usize, v: usize, on: bool) {
        let w = self.width;
        self.bits[v * w + u] = on;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn same_shape(&self, other: &SegMask) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn union(&self, other: &SegMask) -> SegMask {
        debug_assert!(self.same_shape(other));
        let bits = self.bits.iter().zip(&other.bits).map(|(a, b)| *a || *b).collect();
        SegMask { width: self.width, height: self.height, bits }
    }
}

fn segment(render: &RenderOutput, noise: &PerceptionNoise, frame_index: u64, stage: NoiseStage, class: impl Fn(PixelLabel) -> bool) -> SegMask {
    let mut mask = SegMask {
        width: render.width(),
        height: render.height(),
        bits: render.class_image.iter().map(|&l| class(l)).collect(),
    };
    if noise.mask_flip_prob > 0.0 {
        let mut rng = noise_rng(noise.seed, frame_index, stage);
        for i in 0..mask.bits.len() {
            let flip = rng.gen_bool(noise.mask_flip_prob);
            // Blind-spot human pixels are safety ground truth and stay set.
            if flip && !(render.depth.data[i] == 0.0 && mask.bits[i]) {
                mask.bits[i] = !mask.bits[i];
            }
        }
    }
    mask
}

/// Pixels labeled Hand, each flipped with `mask_flip_prob`.
pub fn segment_hand(render: &RenderOutput, noise: &PerceptionNoise, frame_index: u64) -> SegMask {
    segment(render, noise, frame_index, NoiseStage::HandSegmenter, |l| l == PixelLabel::Hand)
}

/// Pixels labeled Body or Hand, each flipped with `mask_flip_prob`.
pub fn segment_body(render: &RenderOutput, noise: &PerceptionNoise, frame_index: u64) -> SegMask {
    segment(render, noise, frame_index, NoiseStage::BodySegmenter, |l| l.is_human())
}
