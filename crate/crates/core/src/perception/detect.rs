//! Oracle object detector over rendered class images.

use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::noise::{noise_rng, NoiseStage, PerceptionNoise};
use crate::scene::{PixelLabel, RenderOutput};

pub const PERSON_LABEL: &str = "Person";

/// Inclusive pixel rectangle with a class label and detector confidence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub u_min: usize,
    pub v_min: usize,
    pub u_max: usize,
    pub v_max: usize,
    pub label: String,
    pub confidence: f64,
}

impl BoundingBox {
    pub fn is_person(&self) -> bool {
        self.label == PERSON_LABEL
    }

    pub fn center(&self) -> (f64, f64) {
        ((self.u_min + self.u_max) as f64 / 2.0, (self.v_min + self.v_max) as f64 / 2.0)
    }

    pub fn pixels(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (self.v_min..=self.v_max).flat_map(move |v| (self.u_min..=self.u_max).map(move |u| (u, v)))
    }

    pub fn fits(&self, width: usize, height: usize) -> bool {
        self.u_min <= self.u_max && self.v_min <= self.v_max && self.u_max < width && self.v_max < height
    }
}

/// Tight rectangle of one connected component.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Component {
    pub u_min: usize,
    pub v_min: usize,
    pub u_max: usize,
    pub v_max: usize,
}

/// 8-connected components of pixels satisfying `member`, in row-major order of their first pixel.
pub fn connected_components(width: usize, height: usize, member: impl Fn(usize) -> bool) -> Vec<Component> {
    let mut seen = vec![false; width * height];
    let mut out = Vec::new();
    let mut stack = Vec::new();
    for start in 0..width * height {
        if seen[start] || !member(start) {
            continue;
        }
        seen[start] = true;
        stack.push(start);
        let (su, sv) = (start % width, start / width);
        let mut c = Component { u_min: su, v_min: sv, u_max: su, v_max: sv };
        while let Some(i) = stack.pop() {
            let (u, v) = (i % width, i / width);
            c.u_min = c.u_min.min(u);
            c.u_max = c.u_max.max(u);
            c.v_min = c.v_min.min(v);
            c.v_max = c.v_max.max(v);
            for dv in -1i64..=1 {
                for du in -1i64..=1 {
                    let (nu, nv) = (u as i64 + du, v as i64 + dv);
                    if nu < 0 || nv < 0 || nu >= width as i64 || nv >= height as i64 {
                        continue;
                    }
                    let j = nv as usize * width + nu as usize;
                    if !seen[j] && member(j) {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        out.push(c);
    }
    out
}

fn jittered<R: Rng>(c: Component, jitter: u32, width: usize, height: usize, rng: &mut R) -> (usize, usize, usize, usize) {
    let j = jitter as i64;
    let mut shift = |x: usize, max: usize| -> usize {
        let d = if j > 0 { rng.gen_range(-j..=j) } else { 0 };
        (x as i64 + d).clamp(0, max as i64 - 1) as usize
    };
    let u0 = shift(c.u_min, width);
    let v0 = shift(c.v_min, height);
    let u1 = shift(c.u_max, width);
    let v1 = shift(c.v_max, height);
    (u0.min(u1), v0.min(v1), u0.max(u1), v0.max(v1))
}

/// One box per connected component of each object id, plus one "Person" box around all human pixels.
pub fn detect_objects(render: &RenderOutput, noise: &PerceptionNoise, frame_index: u64) -> Vec<BoundingBox> {
    let mut rng = noise_rng(noise.seed, frame_index, NoiseStage::Detector);
    if noise.miss_prob > 0.0 && rng.gen_bool(noise.miss_prob) {
        return Vec::new();
    }
    let (w, h) = (render.width(), render.height());
    let ids: BTreeSet<u32> = render
        .class_image
        .iter()
        .filter_map(|l| match l {
            PixelLabel::Object(id) => Some(*id),
            _ => None,
        })
        .collect();

    let mut boxes = Vec::new();
    for id in ids {
        for c in connected_components(w, h, |i| render.class_image[i] == PixelLabel::Object(id)) {
            let (u_min, v_min, u_max, v_max) = jittered(c, noise.bbox_jitter_px, w, h, &mut rng);
            let confidence = rng.gen_range(0.3..1.0);
            boxes.push(BoundingBox { u_min, v_min, u_max, v_max, label: format!("object:{id}"), confidence });
        }
    }

    let mut person: Option<Component> = None;
    for (i, l) in render.class_image.iter().enumerate() {
        if !l.is_human() {
            continue;
        }
        let (u, v) = (i % w, i / w);
        person = Some(match person {
            None => Component { u_min: u, v_min: v, u_max: u, v_max: v },
            Some(c) => Component { u_min: c.u_min.min(u), v_min: c.v_min.min(v), u_max: c.u_max.max(u), v_max: c.v_max.max(v) },
        });
    }
    if let Some(c) = person {
        let (u_min, v_min, u_max, v_max) = jittered(c, noise.bbox_jitter_px, w, h, &mut rng);
        let confidence = rng.gen_range(0.3..1.0);
        boxes.push(BoundingBox { u_min, v_min, u_max, v_max, label: PERSON_LABEL.to_string(), confidence });
    }
    boxes
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DepthImage;

    fn render_with(w: usize, h: usize, paint: impl Fn(usize, usize) -> PixelLabel) -> RenderOutput {
        let mut class_image = vec![PixelLabel::Background; w * h];
        let mut depth = vec![0.0; w * h];
        for v in 0..h {
            for u in 0..w {
                let l = paint(u, v);
                class_image[v * w + u] = l;
                if l != PixelLabel::Background {
                    depth[v * w + u] = 0.5;
                }
            }
        }
        RenderOutput { depth: DepthImage::new(w, h, depth).unwrap(), class_image }
    }

    #[test]
    fn tight_box_without_noise() {
        let r = render_with(100, 100, |u, v| {
            if (50..60).contains(&u) && (60..70).contains(&v) {
                PixelLabel::Object(3)
            } else {
                PixelLabel::Background
            }
        });
        let boxes = detect_objects(&r, &PerceptionNoise::none(), 0);
        assert_eq!(boxes.len(), 1);
        let b = &boxes[0];
        assert_eq!((b.u_min, b.v_min, b.u_max, b.v_max), (50, 60, 59, 69));
        assert!(!b.is_person());
    }

    #[test]
    fn certain_miss_returns_nothing() {
        let r = render_with(20, 20, |_, _| PixelLabel::Object(1));
        let noise = PerceptionNoise { miss_prob: 1.0, ..PerceptionNoise::none() };
        assert!(detect_objects(&r, &noise, 5).is_empty());
    }

    #[test]
    fn person_box_covers_all_human_pixels() {
        let r = render_with(30, 30, |u, v| match (u, v) {
            (2, 3) => PixelLabel::Hand,
            (20, 25) => PixelLabel::Body,
            _ => PixelLabel::Background,
        });
        let boxes = detect_objects(&r, &PerceptionNoise::none(), 0);
        assert_eq!(boxes.len(), 1);
        assert!(boxes[0].is_person());
        assert_eq!((boxes[0].u_min, boxes[0].v_min, boxes[0].u_max, boxes[0].v_max), (2, 3, 20, 25));
    }

    #[test]
    fn diagonal_pixels_are_connected() {
        let r = render_with(10, 10, |u, v| if u == v { PixelLabel::Object(1) } else { PixelLabel::Background });
        assert_eq!(detect_objects(&r, &PerceptionNoise::none(), 0).len(), 1);
    }

    #[test]
    fn jitter_stays_in_bounds_and_ordered() {
        let r = render_with(12, 12, |u, v| if u < 2 && v > 9 { PixelLabel::Object(1) } else { PixelLabel::Background });
        let noise = PerceptionNoise { bbox_jitter_px: 5, seed: 9, ..PerceptionNoise::none() };
        for f in 0..200 {
            for b in detect_objects(&r, &noise, f) {
                assert!(b.fits(12, 12));
                assert!((0.0..=1.0).contains(&b.confidence));
            }
        }
    }
}
