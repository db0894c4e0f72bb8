//! Small vector helpers on top of `nalgebra`.

use nalgebra::{Matrix3, Rotation3, Vector3};
use num_traits::Float;

pub type Vec3 = Vector3<f64>;

pub const PI: f64 = core::f64::consts::PI;
pub const TAU: f64 = core::f64::consts::TAU;

#[inline]
pub fn vec3(x: f64, y: f64, z: f64) -> Vec3 {
    Vec3::new(x, y, z)
}

/// Euclidean remainder: the result lies in `[0, m)` for `m > 0`.
pub fn rem_euclid(x: f64, m: f64) -> f64 {
    let r = x % m;
    if r >= 0.0 {
        return r;
    }
    let w = r + m;
    if w >= m {
        0.0
    } else {
        w
    }
}

/// Rotation matrix for a rotation vector (axis times angle).
pub fn rotation_from_vector(rv: &Vec3) -> Matrix3<f64> {
    Rotation3::new(*rv).into_inner()
}

/// Any unit vector orthogonal to `w`.
pub fn any_orthogonal(w: &Vec3) -> Vec3 {
    let a = if w.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let p = a - w * w.dot(&a);
    p / p.norm()
}

/// Signed angle from `a` to `b` about `axis` (all assumed orthogonal to `axis`).
pub fn signed_angle(a: &Vec3, b: &Vec3, axis: &Vec3) -> f64 {
    let s = axis.dot(&a.cross(b));
    let c = a.dot(b);
    Float::atan2(s, c)
}

/// Closest points between segments `[p0, p1]` and `[q0, q1]`.
/// Returns `(distance, t, u)` with the segment parameters of the closest pair.
pub fn segment_segment(p0: &Vec3, p1: &Vec3, q0: &Vec3, q1: &Vec3) -> (f64, f64, f64) {
    let d1 = p1 - p0;
    let d2 = q1 - q0;
    let r = p0 - q0;
    let a = d1.dot(&d1);
    let e = d2.dot(&d2);
    let f = d2.dot(&r);
    let eps = 1e-300;
    let (mut s, mut t);
    if a <= eps && e <= eps {
        return (r.norm(), 0.0, 0.0);
    }
    if a <= eps {
        s = 0.0;
        t = (f / e).clamp(0.0, 1.0);
    } else {
        let c = d1.dot(&r);
        if e <= eps {
            t = 0.0;
            s = (-c / a).clamp(0.0, 1.0);
        } else {
            let b = d1.dot(&d2);
            let denom = a * e - b * b;
            s = if denom > 1e-14 * a * e {
                ((b * f - c * e) / denom).clamp(0.0, 1.0)
            } else {
                0.0
            };
            t = (b * s + f) / e;
            if t < 0.0 {
                t = 0.0;
                s = (-c / a).clamp(0.0, 1.0);
            } else if t > 1.0 {
                t = 1.0;
                s = ((b - c) / a).clamp(0.0, 1.0);
            }
        }
    }
    let cp = p0 + d1 * s;
    let cq = q0 + d2 * t;
    ((cp - cq).norm(), s, t)
}

/// Distance from `p` to the segment `[a, b]` and the parameter of the foot point.
pub fn point_segment(p: &Vec3, a: &Vec3, b: &Vec3) -> (f64, f64) {
    let d = b - a;
    let l2 = d.norm_squared();
    let t = if l2 > 0.0 { ((p - a).dot(&d) / l2).clamp(0.0, 1.0) } else { 0.0 };
    ((a + d * t - p).norm(), t)
}

/// Area of triangle `(a, b, c)`.
#[inline]
pub fn triangle_area(a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    0.5 * (b - a).cross(&(c - a)).norm()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segment_distance_cases() {
        let (d, _, _) = segment_segment(
            &vec3(0.0, 0.0, 0.0),
            &vec3(1.0, 0.0, 0.0),
            &vec3(0.5, 1.0, -1.0),
            &vec3(0.5, 1.0, 1.0),
        );
        assert!((d - 1.0).abs() < 1e-15);
        // parallel segments
        let (d, _, _) = segment_segment(
            &vec3(0.0, 0.0, 0.0),
            &vec3(1.0, 0.0, 0.0),
            &vec3(2.0, 0.5, 0.0),
            &vec3(3.0, 0.5, 0.0),
        );
        assert!((d - (1.0f64 + 0.25).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn signed_angle_quadrants() {
        let a = Vec3::x();
        let b = Vec3::y();
        assert!((signed_angle(&a, &b, &Vec3::z()) - PI / 2.0).abs() < 1e-15);
        assert!((signed_angle(&b, &a, &Vec3::z()) + PI / 2.0).abs() < 1e-15);
    }
}
