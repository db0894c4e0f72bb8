use alloc::vec::Vec;
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ClosedPolyline;
use crate::math::{any_orthogonal, segment_segment, signed_angle, Vec3, PI, TAU};
use crate::rod::FramedCurve;
use crate::{Error, Result};

const TOUCH_DISTANCE: f64 = 1e-9;
const PROJECTION_SEED: u64 = 0x6b70_6c69_6e6b;
const PROJECTION_RETRIES: usize = 16;

/// Signed solid angle subtended by the segment pair `(p1 p2, p3 p4)`,
/// i.e. `4 pi` times its exact contribution to the Gauss double integral.
fn pair_solid_angle(p1: &Vec3, p2: &Vec3, p3: &Vec3, p4: &Vec3) -> f64 {
    let r13 = p3 - p1;
    let r14 = p4 - p1;
    let r23 = p3 - p2;
    let r24 = p4 - p2;
    let sgn = (p4 - p3).cross(&(p2 - p1)).dot(&r13);
    if sgn == 0.0 {
        return 0.0;
    }
    let mut n = [r13.cross(&r14), r14.cross(&r24), r24.cross(&r23), r23.cross(&r13)];
    for v in n.iter_mut() {
        let l = v.norm();
        if !(l > 0.0) {
            return 0.0;
        }
        *v /= l;
    }
    let asin = |x: f64| Float::asin(x.clamp(-1.0, 1.0));
    let om = asin(n[0].dot(&n[1])) + asin(n[1].dot(&n[2])) + asin(n[2].dot(&n[3])) + asin(n[3].dot(&n[0]));
    if sgn > 0.0 {
        om
    } else {
        -om
    }
}

fn row_sum(c1: &ClosedPolyline, c2: &ClosedPolyline, i: usize) -> (f64, f64) {
    let (p1, p2) = c1.segment(i);
    let mut sum = 0.0;
    let mut dmin = f64::INFINITY;
    for j in 0..c2.len() {
        let (p3, p4) = c2.segment(j);
        dmin = dmin.min(segment_segment(&p1, &p2, &p3, &p4).0);
        sum += pair_solid_angle(&p1, &p2, &p3, &p4);
    }
    (sum, dmin)
}

/// Gauss linking integral of two disjoint closed polygons, evaluated exactly
/// per segment pair (signed solid angles). Integer-valued up to rounding.
pub fn gauss_linking_number(c1: &ClosedPolyline, c2: &ClosedPolyline) -> Result<f64> {
    #[cfg(feature = "parallel")]
    let rows: Vec<(f64, f64)> = {
        use rayon::prelude::*;
        (0..c1.len()).into_par_iter().map(|i| row_sum(c1, c2, i)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let rows: Vec<(f64, f64)> = (0..c1.len()).map(|i| row_sum(c1, c2, i)).collect();
    let mut total = 0.0;
    let mut dmin = f64::INFINITY;
    for (s, d) in rows {
        total += s;
        dmin = dmin.min(d);
    }
    if dmin <= TOUCH_DISTANCE {
        return Err(Error::CurvesTouch(dmin));
    }
    Ok(total / (4.0 * PI))
}

/// [`gauss_linking_number`] rounded to the nearest integer.
pub fn rounded_linking_number(c1: &ClosedPolyline, c2: &ClosedPolyline) -> Result<i64> {
    Ok(Float::round(gauss_linking_number(c1, c2)?) as i64)
}

/// Writhe: Gauss self-integral of a closed polygon, adjacent segment pairs
/// excluded (they are coplanar and contribute nothing).
pub fn writhe(c: &ClosedPolyline) -> f64 {
    let n = c.len();
    let row = |i: usize| {
        let (p1, p2) = c.segment(i);
        let mut sum = 0.0;
        for j in i + 2..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            let (p3, p4) = c.segment(j);
            sum += pair_solid_angle(&p1, &p2, &p3, &p4);
        }
        sum
    };
    #[cfg(feature = "parallel")]
    let rows: Vec<f64> = {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(row).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let rows: Vec<f64> = (0..n).map(row).collect();
    2.0 * rows.iter().sum::<f64>() / (4.0 * PI)
}

enum Projection {
    Count(i64),
    Degenerate,
}

fn project_count(c1: &ClosedPolyline, c2: &ClosedPolyline, dir: &Vec3) -> Projection {
    let e1 = any_orthogonal(dir);
    let e2 = dir.cross(&e1);
    let proj = |p: &Vec3| (p.dot(&e1), p.dot(&e2), p.dot(dir));
    let a: Vec<_> = c1.points().iter().map(proj).collect();
    let b: Vec<_> = c2.points().iter().map(proj).collect();
    let scale = c1
        .points()
        .iter()
        .chain(c2.points())
        .fold(0.0f64, |m, p| m.max(p.norm()))
        .max(1e-300);
    let eps = 1e-10;
    let (n, m) = (a.len(), b.len());
    let mut twice = 0i64;
    for i in 0..n {
        let (a0, a1) = (a[i], a[(i + 1) % n]);
        let da = (a1.0 - a0.0, a1.1 - a0.1);
        let la = Float::hypot(da.0, da.1);
        if la < eps * scale {
            return Projection::Degenerate;
        }
        for j in 0..m {
            let (b0, b1) = (b[j], b[(j + 1) % m]);
            let db = (b1.0 - b0.0, b1.1 - b0.1);
            let lb = Float::hypot(db.0, db.1);
            if lb < eps * scale {
                return Projection::Degenerate;
            }
            // cheap box rejection
            if a0.0.min(a1.0) > b0.0.max(b1.0) || a0.0.max(a1.0) < b0.0.min(b1.0) {
                continue;
            }
            if a0.1.min(a1.1) > b0.1.max(b1.1) || a0.1.max(a1.1) < b0.1.min(b1.1) {
                continue;
            }
            let denom = da.0 * db.1 - da.1 * db.0;
            let w = (b0.0 - a0.0, b0.1 - a0.1);
            if denom.abs() <= eps * la * lb {
                // parallel: degenerate only if collinear and overlapping
                let off = (w.0 * da.1 - w.1 * da.0).abs() / la;
                if off < eps * scale {
                    return Projection::Degenerate;
                }
                continue;
            }
            let t = (w.0 * db.1 - w.1 * db.0) / denom;
            let u = (w.0 * da.1 - w.1 * da.0) / denom;
            let tol = 1e-9;
            if t < -tol || t > 1.0 + tol || u < -tol || u > 1.0 + tol {
                continue;
            }
            if t < tol || t > 1.0 - tol || u < tol || u > 1.0 - tol {
                return Projection::Degenerate;
            }
            let ha = a0.2 + t * (a1.2 - a0.2);
            let hb = b0.2 + u * (b1.2 - b0.2);
            if (ha - hb).abs() < eps * scale {
                return Projection::Degenerate;
            }
            // 3D tangents projected: crossing sign from the 2D cross product,
            // oriented by which strand is on top
            let s = if denom > 0.0 { 1 } else { -1 };
            twice += if ha > hb { s } else { -s };
        }
    }
    Projection::Count(twice)
}

/// Linking number as half the signed crossing count of the two polygons
/// projected along `dir`. Non-generic directions are perturbed with a fixed
/// pseudo-random sequence.
pub fn crossing_linking_number(c1: &ClosedPolyline, c2: &ClosedPolyline, dir: &Vec3) -> Result<i64> {
    let mut rng = ChaCha8Rng::seed_from_u64(PROJECTION_SEED);
    let base = dir.try_normalize(0.0).ok_or(Error::InvalidInput("projection direction must be non-zero"))?;
    let mut d = base;
    for _ in 0..=PROJECTION_RETRIES {
        match project_count(c1, c2, &d) {
            Projection::Count(twice) => {
                debug_assert!(twice % 2 == 0);
                return Ok(twice / 2);
            }
            Projection::Degenerate => {
                let jitter = Vec3::new(
                    rng.random::<f64>() - 0.5,
                    rng.random::<f64>() - 0.5,
                    rng.random::<f64>() - 0.5,
                );
                d = (base + jitter * 0.05).normalize();
            }
        }
    }
    Err(Error::DegenerateProjection(PROJECTION_RETRIES))
}

/// Total twist of the directors about the midline in turns, measured by
/// parallel transport of `u` between consecutive nodes.
pub fn twist(fc: &FramedCurve) -> f64 {
    let f = fc.frames();
    let mut total = 0.0;
    for i in 0..f.len() - 1 {
        let (w0, w1) = (f[i].w, f[i + 1].w);
        // rotate u_i by the minimal rotation taking w_i to w_{i+1}
        let axis = w0.cross(&w1);
        let s = axis.norm();
        let c = w0.dot(&w1);
        let transported = if s < 1e-300 {
            f[i].u
        } else {
            let k = axis / s;
            let u = f[i].u;
            u * c + k.cross(&u) * s + k * (k.dot(&u) * (1.0 - c))
        };
        total += signed_angle(&transported, &f[i + 1].u, &w1);
    }
    total / TAU
}

/// Self-linking number of a closed framed rod: linking number of the
/// midline with its push-off `r + offset u`. The frame need not close, so
/// the seam angle is spread uniformly along the rod before pushing off; the
/// result jumps when the seam angle crosses pi.
pub fn self_linking(fc: &FramedCurve, offset: f64) -> Result<i64> {
    if !(offset > 0.0) {
        return Err(Error::InvalidInput("push-off offset must be positive"));
    }
    let pts = fc.loop_points();
    let n = pts.len() as f64;
    let seam = fc.seam_angle();
    let mid = ClosedPolyline::new(pts.to_vec())?;
    let push = ClosedPolyline::new(
        pts.iter()
            .zip(fc.frames())
            .enumerate()
            .map(|(i, (p, f))| {
                let (sn, cs) = Float::sin_cos(-seam * i as f64 / n);
                p + (f.u * cs + f.v * sn) * offset
            })
            .collect(),
    )?;
    let gap = mid.min_distance(&push);
    if gap < 0.5 * offset {
        return Err(Error::OffsetTooLarge { offset, distance: gap });
    }
    rounded_linking_number(&mid, &push)
}
