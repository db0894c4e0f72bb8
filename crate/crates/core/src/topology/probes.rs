use alloc::vec::Vec;
use num_traits::Float;

use super::{crossing_linking_number, ClosedPolyline};
use crate::film::TriMesh;
use crate::math::{segment_segment, Vec3, TAU};
use crate::rod::Tube;
use crate::{Error, Result};

const LOOP_POINTS: usize = 32;
const PREFERRED_RADIUS: f64 = 2.5;
const MIN_RADIUS: f64 = 1.3;

/// Provenance of a probe loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProbeTag {
    /// Small loop around `rod` near arc length `s`, linking it once.
    Simple { rod: usize, s: f64 },
    /// Band sum of simple loops around both rods.
    DClass { s1: f64, s2: f64 },
}

/// How many probes to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProbeCounts {
    /// Simple loops per rod, at evenly spaced stations.
    pub per_rod: usize,
    /// Include the band-sum loop (two rods only).
    pub d_class: bool,
}

impl Default for ProbeCounts {
    fn default() -> Self {
        Self { per_rod: 8, d_class: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeFamily {
    pub loops: Vec<ClosedPolyline>,
    pub tags: Vec<ProbeTag>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificateReport {
    /// Number of triangles each probe crosses.
    pub hits: Vec<usize>,
    pub tags: Vec<ProbeTag>,
    pub pass: bool,
}

fn midline(t: &Tube) -> Result<ClosedPolyline> {
    ClosedPolyline::new(t.curve.loop_points().to_vec())
}

fn curvature_at(t: &Tube, s: f64) -> f64 {
    let h = t.curve.spacing();
    let i = Float::round(s / h) as usize;
    let d = t.curve.densities()[i.min(t.curve.len() - 1)];
    Float::hypot(d[0], d[1])
}

fn circle_loop(t: &Tube, s: f64, radius: f64) -> Result<ClosedPolyline> {
    let (r, f) = t.curve.state_at(s);
    let pts = (0..LOOP_POINTS)
        .map(|k| {
            // offset keeps vertices off the frame axes, where symmetric films lie
            let th = TAU * (k as f64 + 0.5) / LOOP_POINTS as f64;
            r + (f.u * Float::cos(th) + f.v * Float::sin(th)) * radius
        })
        .collect();
    ClosedPolyline::new(pts)
}

fn probe_direction(t: &Tube, s: f64) -> Vec3 {
    let (_, f) = t.curve.state_at(s);
    f.u + f.v * 0.37 + f.w * 0.21
}

fn clears(lp: &ClosedPolyline, tubes: &[Tube], mids: &[ClosedPolyline]) -> bool {
    tubes.iter().zip(mids).all(|(t, m)| lp.min_distance(m) > 1.02 * t.radius())
}

/// Oriented simple loop around rod `k` at `s`, shrunk until it clears all
/// tubes and links rod `k` exactly once.
fn simple_loop(tubes: &[Tube], mids: &[ClosedPolyline], k: usize, s: f64) -> Result<ClosedPolyline> {
    let t = &tubes[k];
    let a = t.radius();
    let (r, _) = t.curve.state_at(s);
    let mut rho = PREFERRED_RADIUS * a;
    let kappa = curvature_at(t, s);
    if kappa > 0.0 {
        rho = rho.min(0.5 / kappa);
    }
    for (j, (o, m)) in tubes.iter().zip(mids).enumerate() {
        if j == k {
            continue;
        }
        let d = (0..m.len())
            .map(|i| {
                let (p, q) = m.segment(i);
                crate::math::point_segment(&r, &p, &q).0
            })
            .fold(f64::INFINITY, f64::min);
        let room = d - o.radius();
        rho = rho.min(room - 0.25 * (room - a).max(0.0));
    }
    for _ in 0..4 {
        if rho < MIN_RADIUS * a {
            break;
        }
        let lp = circle_loop(t, s, rho)?;
        if clears(&lp, tubes, mids) {
            let dir = probe_direction(t, s);
            let lk = crossing_linking_number(&lp, &mids[k], &dir)?;
            let others_zero = mids
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != k)
                .all(|(_, m)| crossing_linking_number(&lp, m, &dir).map(|v| v == 0).unwrap_or(false));
            if others_zero && lk.abs() == 1 {
                return Ok(if lk == 1 { lp } else { lp.reversed() });
            }
        }
        rho = 0.5 * (rho + MIN_RADIUS * a);
    }
    Err(Error::ProbeConstructionFailed("no clearance for a simple loop"))
}

fn closest_stations(t1: &Tube, t2: &Tube) -> (f64, f64) {
    let (p, q) = (t1.curve.loop_points(), t2.curve.loop_points());
    let (h1, h2) = (t1.curve.spacing(), t2.curve.spacing());
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for i in 0..p.len() {
        let (a0, a1) = (p[i], p[(i + 1) % p.len()]);
        for j in 0..q.len() {
            let (b0, b1) = (q[j], q[(j + 1) % q.len()]);
            let (d, s, t) = segment_segment(&a0, &a1, &b0, &b1);
            if d < best.0 {
                best = (d, (i as f64 + s) * h1, (j as f64 + t) * h2);
            }
        }
    }
    (best.1.min(t1.length()), best.2.min(t2.length()))
}

fn band_sum(a: &ClosedPolyline, b: &ClosedPolyline) -> Result<ClosedPolyline> {
    let ca = a.points().iter().sum::<Vec3>() / a.len() as f64;
    let cb = b.points().iter().sum::<Vec3>() / b.len() as f64;
    let nearest = |lp: &ClosedPolyline, target: &Vec3| {
        (0..lp.len())
            .min_by(|&x, &y| (lp.points()[x] - target).norm().total_cmp(&(lp.points()[y] - target).norm()))
            .unwrap()
    };
    let i = nearest(a, &cb);
    let j = nearest(b, &ca);
    let mut pts = Vec::with_capacity(a.len() + b.len());
    for k in 1..=a.len() {
        pts.push(a.points()[(i + k) % a.len()]);
    }
    for k in 1..=b.len() {
        pts.push(b.points()[(j + k) % b.len()]);
    }
    ClosedPolyline::new(pts)
}

/// Builds the probe loops for one or two closed tubes: `per_rod` simple
/// links per rod and, for a linked pair, one loop linking both rods once.
pub fn make_probe_family(tubes: &[Tube], counts: ProbeCounts) -> Result<ProbeFamily> {
    if tubes.is_empty() || tubes.len() > 2 {
        return Err(Error::InvalidInput("probe family needs one or two tubes"));
    }
    if tubes.iter().any(|t| !t.is_closed()) {
        let (dr, dt) = tubes.iter().find(|t| !t.is_closed()).unwrap().curve.closure_residual();
        return Err(Error::NotClosed { position: dr, tangent: dt });
    }
    let mids = tubes.iter().map(midline).collect::<Result<Vec<_>>>()?;
    let mut fam = ProbeFamily { loops: Vec::new(), tags: Vec::new() };
    for (k, t) in tubes.iter().enumerate() {
        for j in 0..counts.per_rod {
            let s = (j as f64 + 0.5) * t.length() / counts.per_rod as f64;
            fam.loops.push(simple_loop(tubes, &mids, k, s)?);
            fam.tags.push(ProbeTag::Simple { rod: k, s });
        }
    }
    if counts.d_class && tubes.len() == 2 {
        let lk = super::rounded_linking_number(&mids[0], &mids[1])?;
        if lk == 0 {
            return Err(Error::ProbeConstructionFailed("band-sum loop needs linked rods"));
        }
        let (s1, s2) = closest_stations(&tubes[0], &tubes[1]);
        let a = simple_loop(tubes, &mids, 0, s1)?;
        let b = simple_loop(tubes, &mids, 1, s2)?;
        let d = band_sum(&a, &b)?;
        if !clears(&d, tubes, &mids) {
            return Err(Error::ProbeConstructionFailed("band-sum loop meets a tube"));
        }
        let dir = probe_direction(&tubes[0], s1);
        for m in &mids {
            if crossing_linking_number(&d, m, &dir)? != 1 {
                return Err(Error::ProbeConstructionFailed("band-sum loop has the wrong linking"));
            }
        }
        fam.loops.push(d);
        fam.tags.push(ProbeTag::DClass { s1, s2 });
    }
    Ok(fam)
}

/// Segment/triangle crossing, endpoints and edges included with a small slack.
fn segment_hits_triangle(p: &Vec3, q: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> bool {
    let d = q - p;
    let e1 = b - a;
    let e2 = c - a;
    let h = d.cross(&e2);
    let det = e1.dot(&h);
    let scale = e1.norm() * e2.norm() * d.norm();
    if det.abs() <= 1e-14 * scale {
        return false;
    }
    let inv = 1.0 / det;
    let sv = p - a;
    const SLACK: f64 = 1e-12;
    let u = sv.dot(&h) * inv;
    if !(-SLACK..=1.0 + SLACK).contains(&u) {
        return false;
    }
    let qv = sv.cross(&e1);
    let v = d.dot(&qv) * inv;
    if v < -SLACK || u + v > 1.0 + SLACK {
        return false;
    }
    let t = e2.dot(&qv) * inv;
    (-SLACK..=1.0 + SLACK).contains(&t)
}

/// Counts film triangles crossed by each probe. Passes when every probe
/// meets the film at least once.
pub fn spanning_certificate(mesh: &TriMesh, probes: &ProbeFamily) -> CertificateReport {
    let boxes: Vec<(Vec3, Vec3)> = mesh
        .triangles
        .iter()
        .map(|t| {
            let [a, b, c] = t.map(|i| mesh.vertices[i]);
            (a.inf(&b).inf(&c), a.sup(&b).sup(&c))
        })
        .collect();
    let count = |lp: &ClosedPolyline| {
        let mut n = 0;
        for i in 0..lp.len() {
            let (p, q) = lp.segment(i);
            let (lo, hi) = (p.inf(&q), p.sup(&q));
            for (ti, t) in mesh.triangles.iter().enumerate() {
                let (blo, bhi) = boxes[ti];
                if (0..3).any(|k| lo[k] > bhi[k] || hi[k] < blo[k]) {
                    continue;
                }
                let [a, b, c] = t.map(|i| mesh.vertices[i]);
                if segment_hits_triangle(&p, &q, &a, &b, &c) {
                    n += 1;
                }
            }
        }
        n
    };
    #[cfg(feature = "parallel")]
    let hits: Vec<usize> = {
        use rayon::prelude::*;
        probes.loops.par_iter().map(count).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let hits: Vec<usize> = probes.loops.iter().map(count).collect();
    let pass = !hits.is_empty() && hits.iter().all(|&h| h > 0);
    CertificateReport { hits, tags: probes.tags.clone(), pass }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::vec3;

    #[test]
    fn triangle_crossing() {
        let (a, b, c) = (vec3(0.0, 0.0, 0.0), vec3(1.0, 0.0, 0.0), vec3(0.0, 1.0, 0.0));
        assert!(segment_hits_triangle(&vec3(0.2, 0.2, -1.0), &vec3(0.2, 0.2, 1.0), &a, &b, &c));
        assert!(!segment_hits_triangle(&vec3(0.2, 0.2, 0.5), &vec3(0.2, 0.2, 1.0), &a, &b, &c));
        assert!(!segment_hits_triangle(&vec3(0.8, 0.8, -1.0), &vec3(0.8, 0.8, 1.0), &a, &b, &c));
    }
}
