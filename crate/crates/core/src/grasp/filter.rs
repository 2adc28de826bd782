use super::map::GraspMap;
use super::GraspError;
use crate::perception::SegMask;

/// Keep-out distance around human pixels, in pixels.
pub const DEFAULT_MARGIN_PX: usize = 5;

/// Pixels within Chebyshev distance `radius` of a set bit (square structuring element).
pub fn dilate_chebyshev(mask: &SegMask, radius: usize) -> Vec<bool> {
    let (w, h) = (mask.width, mask.height);
    let mut rows = vec![false; w * h];
    let mut prefix = vec![0usize; w.max(h) + 1];
    for v in 0..h {
        for u in 0..w {
            prefix[u + 1] = prefix[u] + mask.bits[v * w + u] as usize;
        }
        for u in 0..w {
            let lo = u.saturating_sub(radius);
            let hi = (u + radius).min(w - 1);
            rows[v * w + u] = prefix[hi + 1] > prefix[lo];
        }
    }
    let mut out = vec![false; w * h];
    for u in 0..w {
        for v in 0..h {
            prefix[v + 1] = prefix[v] + rows[v * w + u] as usize;
        }
        for v in 0..h {
            let lo = v.saturating_sub(radius);
            let hi = (v + radius).min(h - 1);
            out[v * w + u] = prefix[hi + 1] > prefix[lo];
        }
    }
    out
}

/// Zeroes grasp quality within `margin_px` (Chebyshev) of any hand or body pixel.
pub fn filter_human(map: &GraspMap, hand: &SegMask, body: &SegMask, margin_px: usize) -> Result<GraspMap, GraspError> {
    let dims = |m: &SegMask| m.width == map.width && m.height == map.height;
    if !dims(hand) || !dims(body) {
        return Err(GraspError::DimensionMismatch);
    }
    let keep_out = dilate_chebyshev(&hand.union(body), margin_px);
    let mut out = map.clone();
    for (q, &blocked) in out.quality.iter_mut().zip(&keep_out) {
        if blocked {
            *q = 0.0;
        }
    }
    Ok(out)
}
