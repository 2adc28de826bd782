use super::GraspError;
use crate::geometry::DepthImage;
use crate::perception::BoundingBox;

/// Distance behind the front of the target at which the plane is placed, meters.
pub const DEFAULT_PLANE_OFFSET: f64 = 0.15;

/// Nearest-rank 5th percentile of the depths inside `target`. Dropouts
/// count as infinitely far, so filling them in later leaves the result unchanged.
fn near_depth(depth: &DepthImage, target: &BoundingBox) -> Option<f64> {
    let mut readings: Vec<f64> = target
        .pixels()
        .map(|(u, v)| depth.get(u, v))
        .map(|d| if d > 0.0 { d } else { f64::INFINITY })
        .collect();
    readings.sort_by(f64::total_cmp);
    let rank = (readings.len() * 5).div_ceil(100).max(1);
    let d = readings[rank - 1];
    if d.is_finite() {
        return Some(d);
    }
    // Mostly dropouts: fall back to the percentile of the valid readings alone.
    let valid: Vec<f64> = readings.into_iter().filter(|d| d.is_finite()).collect();
    if valid.is_empty() {
        return None;
    }
    let rank = (valid.len() * 5).div_ceil(100).max(1);
    Some(valid[rank - 1])
}

/// Replaces everything behind the target (and every dropout) with a
/// fronto-parallel plane at `d_near + offset`.
pub fn insert_plane(depth: &DepthImage, target: &BoundingBox, offset: f64) -> Result<(DepthImage, f64), GraspError> {
    if !target.fits(depth.width, depth.height) {
        return Err(GraspError::DimensionMismatch);
    }
    let d_near = near_depth(depth, target).ok_or(GraspError::EmptyTarget)?;
    let plane = d_near + offset;
    let data = depth.data.iter().map(|&d| if d == 0.0 || d > plane { plane } else { d }).collect();
    Ok((DepthImage { width: depth.width, height: depth.height, data }, plane))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bx(u0: usize, v0: usize, u1: usize, v1: usize) -> BoundingBox {
        BoundingBox { u_min: u0, v_min: v0, u_max: u1, v_max: v1, label: "object:1".into(), confidence: 1.0 }
    }

    #[test]
    fn background_replaced_by_plane() {
        let mut depth = DepthImage::filled(40, 30, 2.0);
        for v in 10..20 {
            for u in 10..20 {
                depth.set(u, v, 0.5);
            }
        }
        let (out, plane) = insert_plane(&depth, &bx(8, 8, 21, 21), 0.15).unwrap();
        assert!((plane - 0.65).abs() < 1e-12);
        for v in 0..30 {
            for u in 0..40 {
                let expect = if (10..20).contains(&u) && (10..20).contains(&v) { 0.5 } else { plane };
                assert_eq!(out.get(u, v), expect);
            }
        }
    }

    #[test]
    fn near_pixels_unchanged_invalid_filled() {
        let mut depth = DepthImage::filled(10, 10, 0.4);
        depth.set(0, 0, 0.0);
        let (out, plane) = insert_plane(&depth, &bx(2, 2, 7, 7), 0.15).unwrap();
        assert_eq!(out.get(0, 0), plane);
        assert!(out.data[1..].iter().all(|&d| d == 0.4));
    }

    #[test]
    fn empty_target_rejected() {
        let depth = DepthImage::filled(10, 10, 0.0);
        assert_eq!(insert_plane(&depth, &bx(0, 0, 3, 3), 0.15), Err(GraspError::EmptyTarget));
    }

    fn per_pixel_oracle(depth: &DepthImage, plane: f64) -> Vec<f64> {
        let mut out = Vec::new();
        for &d in &depth.data {
            out.push(if d == 0.0 || d > plane { plane } else { d });
        }
        out
    }

    proptest! {
        #[test]
        fn matches_per_pixel_rule_and_is_idempotent(
            values in prop::collection::vec(prop_oneof![Just(0.0), 0.2f64..3.0], 16 * 12),
            u0 in 0usize..8, v0 in 0usize..6, du in 0usize..8, dv in 0usize..6,
        ) {
            let depth = DepthImage::new(16, 12, values).unwrap();
            let target = bx(u0, v0, u0 + du, v0 + dv);
            match insert_plane(&depth, &target, 0.15) {
                Err(GraspError::EmptyTarget) => {
                    prop_assert!(target.pixels().all(|(u, v)| depth.get(u, v) == 0.0));
                }
                Err(e) => prop_assert!(false, "unexpected {e}"),
                Ok((out, plane)) => {
                    prop_assert_eq!(&out.data, &per_pixel_oracle(&depth, plane));
                    prop_assert!(out.data.iter().all(|&d| d > 0.0 && d <= plane));
                    let (again, plane2) = insert_plane(&out, &target, 0.15).unwrap();
                    let mostly_dropouts = target.pixels().filter(|&(u, v)| depth.get(u, v) > 0.0).count() * 20
                        < target.pixels().count();
                    if !mostly_dropouts {
                        prop_assert_eq!(plane, plane2);
                        prop_assert_eq!(again, out);
                    }
                }
            }
        }
    }
}
