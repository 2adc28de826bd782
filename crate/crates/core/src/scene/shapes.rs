//! Convex primitives: line intersection intervals, signed distances and
//! segment distances.

use nalgebra::UnitQuaternion;

use crate::geometry::{Pose, Vec3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Sphere { center: Vec3, radius: f64 },
    Capsule { a: Vec3, b: Vec3, radius: f64 },
    Box { center: Vec3, half_extents: Vec3, orientation: UnitQuaternion<f64> },
}

/// Closed parameter interval `[enter, exit]` along a line.
pub type Interval = (f64, f64);

impl Shape {
    pub fn is_valid(&self) -> bool {
        match self {
            Shape::Sphere { radius, .. } | Shape::Capsule { radius, .. } => *radius > 0.0 && radius.is_finite(),
            Shape::Box { half_extents, .. } => half_extents.iter().all(|&h| h > 0.0 && h.is_finite()),
        }
    }

    pub fn transformed(&self, pose: &Pose) -> Shape {
        match *self {
            Shape::Sphere { center, radius } => Shape::Sphere { center: pose.transform_point(&center), radius },
            Shape::Capsule { a, b, radius } => Shape::Capsule {
                a: pose.transform_point(&a),
                b: pose.transform_point(&b),
                radius,
            },
            Shape::Box { center, half_extents, orientation } => Shape::Box {
                center: pose.transform_point(&center),
                half_extents,
                orientation: pose.orientation * orientation,
            },
        }
    }

    /// Interval of `t` for which `origin + t·dir` lies inside the shape, over all real `t`.
    pub fn line_interval(&self, origin: &Vec3, dir: &Vec3) -> Option<Interval> {
        match *self {
            Shape::Sphere { center, radius } => sphere_interval(origin, dir, &center, radius),
            Shape::Capsule { a, b, radius } => capsule_interval(origin, dir, &a, &b, radius),
            Shape::Box { center, half_extents, orientation } => {
                let inv = orientation.inverse();
                let o = inv.transform_vector(&(origin - center));
                let d = inv.transform_vector(dir);
                aabb_interval(&o, &d, &half_extents)
            }
        }
    }

    /// Signed distance: negative inside, positive outside.
    pub fn sdf(&self, p: &Vec3) -> f64 {
        match *self {
            Shape::Sphere { center, radius } => (p - center).norm() - radius,
            Shape::Capsule { a, b, radius } => point_segment_distance(p, &a, &b) - radius,
            Shape::Box { center, half_extents, orientation } => {
                let local = orientation.inverse().transform_vector(&(p - center));
                box_sdf(&local, &half_extents)
            }
        }
    }

    /// Euclidean distance between the shape and segment `s0–s1`; zero when they touch.
    pub fn distance_to_segment(&self, s0: &Vec3, s1: &Vec3) -> f64 {
        let d = match *self {
            Shape::Sphere { center, radius } => point_segment_distance(&center, s0, s1) - radius,
            Shape::Capsule { a, b, radius } => segment_segment_distance(s0, s1, &a, &b) - radius,
            Shape::Box { .. } => {
                // The SDF of a convex set is convex along any line.
                let f = |t: f64| self.sdf(&(s0 + (s1 - s0) * t));
                let t = golden_section_min(f, 0.0, 1.0);
                f(t).min(f(0.0)).min(f(1.0))
            }
        };
        d.max(0.0)
    }
}

fn sphere_interval(o: &Vec3, d: &Vec3, c: &Vec3, r: f64) -> Option<Interval> {
    let oc = o - c;
    let a = d.dot(d);
    let b = oc.dot(d);
    let cc = oc.dot(&oc) - r * r;
    let disc = b * b - a * cc;
    if disc < 0.0 || a == 0.0 {
        return None;
    }
    let s = disc.sqrt();
    // Stable root pair: avoids cancellation in whichever root would subtract.
    let q = if b >= 0.0 { -(b + s) } else { -b + s };
    if q == 0.0 {
        return Some((0.0, 0.0));
    }
    let (t0, t1) = (q / a, cc / q);
    Some(if t0 <= t1 { (t0, t1) } else { (t1, t0) })
}

fn capsule_interval(o: &Vec3, d: &Vec3, a: &Vec3, b: &Vec3, r: f64) -> Option<Interval> {
    let mut hull: Option<Interval> = None;
    let mut merge = |iv: Option<Interval>| {
        if let Some((t0, t1)) = iv {
            hull = Some(match hull {
                None => (t0, t1),
                Some((h0, h1)) => (h0.min(t0), h1.max(t1)),
            });
        }
    };
    merge(sphere_interval(o, d, a, r));
    merge(sphere_interval(o, d, b, r));
    let axis = b - a;
    let len = axis.norm();
    if len > 0.0 {
        let n = axis / len;
        let oa = o - a;
        let d_perp = d - n * d.dot(&n);
        let o_perp = oa - n * oa.dot(&n);
        let qa = d_perp.dot(&d_perp);
        let qb = o_perp.dot(&d_perp);
        let qc = o_perp.dot(&o_perp) - r * r;
        let cyl = if qa <= 1e-300 {
            if qc <= 0.0 {
                Some((f64::NEG_INFINITY, f64::INFINITY))
            } else {
                None
            }
        } else {
            let disc = qb * qb - qa * qc;
            if disc < 0.0 {
                None
            } else {
                let s = disc.sqrt();
                let q = if qb >= 0.0 { -(qb + s) } else { -qb + s };
                if q == 0.0 {
                    Some((0.0, 0.0))
                } else {
                    let (t0, t1) = (q / qa, qc / q);
                    Some(if t0 <= t1 { (t0, t1) } else { (t1, t0) })
                }
            }
        };
        let dn = d.dot(&n);
        let on = oa.dot(&n);
        let slab = if dn.abs() <= 1e-300 {
            if (0.0..=len).contains(&on) {
                Some((f64::NEG_INFINITY, f64::INFINITY))
            } else {
                None
            }
        } else {
            let t0 = -on / dn;
            let t1 = (len - on) / dn;
            Some(if t0 <= t1 { (t0, t1) } else { (t1, t0) })
        };
        if let (Some(c), Some(s)) = (cyl, slab) {
            let lo = c.0.max(s.0);
            let hi = c.1.min(s.1);
            if lo <= hi {
                merge(Some((lo, hi)));
            }
        }
    }
    hull
}

fn aabb_interval(o: &Vec3, d: &Vec3, h: &Vec3) -> Option<Interval> {
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for i in 0..3 {
        if d[i].abs() <= 1e-300 {
            if o[i].abs() > h[i] {
                return None;
            }
            continue;
        }
        let t0 = (-h[i] - o[i]) / d[i];
        let t1 = (h[i] - o[i]) / d[i];
        let (t0, t1) = if t0 <= t1 { (t0, t1) } else { (t1, t0) };
        lo = lo.max(t0);
        hi = hi.min(t1);
        if lo > hi {
            return None;
        }
    }
    Some((lo, hi))
}

fn box_sdf(p: &Vec3, h: &Vec3) -> f64 {
    let q = p.abs() - h;
    let outside = q.map(|x| x.max(0.0)).norm();
    let inside = q.x.max(q.y).max(q.z).min(0.0);
    outside + inside
}

pub fn point_segment_distance(p: &Vec3, a: &Vec3, b: &Vec3) -> f64 {
    let ab = b - a;
    let denom = ab.dot(&ab);
    let t = if denom > 0.0 { ((p - a).dot(&ab) / denom).clamp(0.0, 1.0) } else { 0.0 };
    (p - (a + ab * t)).norm()
}

/// Closest distance between segments `p1–q1` and `p2–q2`.
pub fn segment_segment_distance(p1: &Vec3, q1: &Vec3, p2: &Vec3, q2: &Vec3) -> f64 {
    let d1 = q1 - p1;
    let d2 = q2 - p2;
    let r = p1 - p2;
    let a = d1.dot(&d1);
    let e = d2.dot(&d2);
    let f = d2.dot(&r);
    const EPS: f64 = 1e-18;
    let (s, t);
    if a <= EPS && e <= EPS {
        return r.norm();
    }
    if a <= EPS {
        s = 0.0;
        t = (f / e).clamp(0.0, 1.0);
    } else {
        let c = d1.dot(&r);
        if e <= EPS {
            t = 0.0;
            s = (-c / a).clamp(0.0, 1.0);
        } else {
            let b = d1.dot(&d2);
            let denom = a * e - b * b;
            let mut s0 = if denom > EPS { ((b * f - c * e) / denom).clamp(0.0, 1.0) } else { 0.0 };
            let mut t0 = (b * s0 + f) / e;
            if t0 < 0.0 {
                t0 = 0.0;
                s0 = (-c / a).clamp(0.0, 1.0);
            } else if t0 > 1.0 {
                t0 = 1.0;
                s0 = ((b - c) / a).clamp(0.0, 1.0);
            }
            s = s0;
            t = t0;
        }
    }
    ((p1 + d1 * s) - (p2 + d2 * t)).norm()
}

fn golden_section_min<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..90 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_on_axis() {
        let s = Shape::Sphere { center: Vec3::new(0.0, 0.0, 1.0), radius: 0.1 };
        let (t0, t1) = s.line_interval(&Vec3::zeros(), &Vec3::z()).unwrap();
        assert!((t0 - 0.9).abs() < 1e-15 && (t1 - 1.1).abs() < 1e-15);
        assert!(s.line_interval(&Vec3::new(0.2, 0.0, 0.0), &Vec3::z()).is_none());
    }

    #[test]
    fn capsule_side_and_cap_hits() {
        let c = Shape::Capsule { a: Vec3::new(-0.5, 0.0, 1.0), b: Vec3::new(0.5, 0.0, 1.0), radius: 0.05 };
        let (t0, t1) = c.line_interval(&Vec3::zeros(), &Vec3::z()).unwrap();
        assert!((t0 - 0.95).abs() < 1e-12 && (t1 - 1.05).abs() < 1e-12);
        // Along the axis: spans both caps.
        let (t0, t1) = c.line_interval(&Vec3::new(-1.0, 0.0, 1.0), &Vec3::x()).unwrap();
        assert!((t0 - 0.45).abs() < 1e-12 && (t1 - 1.55).abs() < 1e-12);
    }

    #[test]
    fn rotated_box_interval() {
        let q = UnitQuaternion::from_axis_angle(&Vec3::z_axis(), std::f64::consts::FRAC_PI_4);
        let b = Shape::Box { center: Vec3::new(0.0, 0.0, 2.0), half_extents: Vec3::new(0.1, 0.1, 0.1), orientation: q };
        let (t0, t1) = b.line_interval(&Vec3::zeros(), &Vec3::z()).unwrap();
        assert!((t0 - 1.9).abs() < 1e-12 && (t1 - 2.1).abs() < 1e-12);
        // Along x the rotated square spans its diagonal.
        let (t0, t1) = b.line_interval(&Vec3::new(-1.0, 0.0, 2.0), &Vec3::x()).unwrap();
        let half_diag = 0.1 * 2f64.sqrt();
        assert!((t1 - t0 - 2.0 * half_diag).abs() < 1e-12);
    }

    #[test]
    fn sdf_signs() {
        let b = Shape::Box { center: Vec3::zeros(), half_extents: Vec3::new(1.0, 2.0, 3.0), orientation: UnitQuaternion::identity() };
        assert!((b.sdf(&Vec3::zeros()) + 1.0).abs() < 1e-15);
        assert!((b.sdf(&Vec3::new(2.0, 0.0, 0.0)) - 1.0).abs() < 1e-15);
        assert!((b.sdf(&Vec3::new(2.0, 3.0, 0.0)) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn segment_distances() {
        let d = segment_segment_distance(
            &Vec3::new(0.0, 0.0, 0.0),
            &Vec3::new(1.0, 0.0, 0.0),
            &Vec3::new(0.5, 1.0, -1.0),
            &Vec3::new(0.5, 1.0, 1.0),
        );
        assert!((d - 1.0).abs() < 1e-12);
        let b = Shape::Box { center: Vec3::zeros(), half_extents: Vec3::new(0.1, 0.1, 0.1), orientation: UnitQuaternion::identity() };
        let d = b.distance_to_segment(&Vec3::new(-1.0, 0.3, 0.0), &Vec3::new(1.0, 0.3, 0.0));
        assert!((d - 0.2).abs() < 1e-9);
        let d = b.distance_to_segment(&Vec3::new(-1.0, 0.0, 0.0), &Vec3::new(1.0, 0.0, 0.0));
        assert_eq!(d, 0.0);
        let s = Shape::Sphere { center: Vec3::new(0.0, 0.5, 0.0), radius: 0.1 };
        assert!((s.distance_to_segment(&Vec3::new(-1.0, 0.0, 0.0), &Vec3::new(1.0, 0.0, 0.0)) - 0.4).abs() < 1e-12);
    }
}
