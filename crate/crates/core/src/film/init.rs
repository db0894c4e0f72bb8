use alloc::vec::Vec;
use num_traits::Float;

use super::mesh::{Attachment, TriMesh};
use crate::math::{rem_euclid, segment_segment, Vec3};
use crate::rod::Tube;
use crate::topology::{make_probe_family, spanning_certificate, ProbeCounts};
use crate::{Error, Result};

/// Resolution of a lofted band between two tubes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LoftOptions {
    /// Boundary vertices on each tube.
    pub stations: usize,
    /// Vertex rows across the band including both boundaries; 0 picks a
    /// count that keeps the cells roughly square.
    pub rows: usize,
}

impl Default for LoftOptions {
    fn default() -> Self {
        Self { stations: 64, rows: 0 }
    }
}

/// Angle on tube `t` at station `s` of the surface point facing `target`.
fn facing(t: &Tube, s: f64, target: &Vec3) -> f64 {
    let (r, f) = t.curve.state_at(s);
    let d = target - r;
    Float::atan2(d.dot(&f.v), d.dot(&f.u))
}

fn attached(t: &Tube, rod: usize, s: f64, theta: f64) -> (Vec3, Attachment) {
    let (s, theta) = t.wrap(s, theta);
    (t.surface_point(s, theta), Attachment::Tube { rod, s, theta })
}

/// Triangulates the strip between two closed vertex rings. Each ring entry
/// is `(vertex, parameter in [0, 1))`, parameters increasing.
fn zip_rings(inner: &[(usize, f64)], outer: &[(usize, f64)], tris: &mut Vec<[usize; 3]>) {
    let (n, m) = (inner.len(), outer.len());
    let start = (0..m)
        .min_by(|&a, &b| {
            let da = (outer[a].1 - inner[0].1).abs().min(1.0 - (outer[a].1 - inner[0].1).abs());
            let db = (outer[b].1 - inner[0].1).abs().min(1.0 - (outer[b].1 - inner[0].1).abs());
            da.total_cmp(&db)
        })
        .unwrap();
    let base = inner[0].1;
    let unwrap = |p: f64| rem_euclid(p - base, 1.0);
    let pin = |i: usize| if i == n { 1.0 } else { unwrap(inner[i].1) };
    let pout = |k: usize| {
        let mut q = unwrap(outer[(start + k) % m].1);
        if k == 0 && q > 0.5 {
            q -= 1.0;
        } else if k == m && q < 0.5 {
            q += 1.0;
        }
        q
    };
    let (mut i, mut k) = (0usize, 0usize);
    while i < n || k < m {
        let a = inner[i % n].0;
        let b = outer[(start + k) % m].0;
        let advance_inner = if i == n {
            false
        } else if k == m {
            true
        } else {
            let ni = 0.5 * (pin(i) + pin(i + 1));
            let nk = 0.5 * (pout(k) + pout(k + 1));
            ni <= nk
        };
        if advance_inner {
            tris.push([a, b, inner[(i + 1) % n].0]);
            i += 1;
        } else {
            tris.push([a, b, outer[(start + k + 1) % m].0]);
            k += 1;
        }
    }
}

/// Spoke-and-ring disk spanning a single closed tube. Boundary vertices sit
/// on the tube surface facing the centroid of the midline.
pub fn disk_mesh(tube: &Tube, rod: usize, stations: usize) -> Result<TriMesh> {
    if stations < 8 {
        return Err(Error::InvalidInput("disk needs at least 8 boundary stations"));
    }
    if !tube.is_closed() {
        let (p, t) = tube.curve.closure_residual();
        return Err(Error::NotClosed { position: p, tangent: t });
    }
    let lp = tube.curve.loop_points();
    let centre = lp.iter().sum::<Vec3>() / lp.len() as f64;
    let l = tube.length();
    let mut vertices = Vec::new();
    let mut attach = Vec::new();
    let mut boundary = Vec::with_capacity(stations);
    for j in 0..stations {
        let s = l * j as f64 / stations as f64;
        let (p, a) = attached(tube, rod, s, facing(tube, s, &centre));
        boundary.push(p);
        vertices.push(p);
        attach.push(a);
    }
    let radius = boundary.iter().map(|p| (p - centre).norm()).sum::<f64>() / stations as f64;
    let spacing = l / stations as f64;
    let rings = (Float::round(radius / spacing) as usize).max(2);
    let at_param = |t: f64| {
        let x = t * stations as f64;
        let j = (Float::floor(x) as usize).min(stations - 1);
        let f = x - j as f64;
        boundary[j] * (1.0 - f) + boundary[(j + 1) % stations] * f
    };
    let mut tris = Vec::new();
    let outer_ring: Vec<(usize, f64)> = (0..stations).map(|j| (j, j as f64 / stations as f64)).collect();
    let centre_id = vertices.len();
    vertices.push(centre);
    attach.push(Attachment::Free);
    let mut prev: Option<Vec<(usize, f64)>> = None;
    for k in 1..rings {
        let count = (Float::round(stations as f64 * k as f64 / rings as f64) as usize).max(6);
        let ring: Vec<(usize, f64)> = (0..count)
            .map(|i| {
                let t = i as f64 / count as f64;
                let p = centre + (at_param(t) - centre) * (k as f64 / rings as f64);
                vertices.push(p);
                attach.push(Attachment::Free);
                (vertices.len() - 1, t)
            })
            .collect();
        match &prev {
            None => {
                for i in 0..count {
                    tris.push([centre_id, ring[i].0, ring[(i + 1) % count].0]);
                }
            }
            Some(inner) => zip_rings(inner, &ring, &mut tris),
        }
        prev = Some(ring);
    }
    zip_rings(prev.as_ref().unwrap(), &outer_ring, &mut tris);
    Ok(TriMesh::new(vertices, tris, attach))
}

/// Smallest distance between non-adjacent rulings of a station matching.
fn ruling_clearance(p: &[Vec3], q: &[Vec3], shift: usize, reverse: bool) -> f64 {
    let m = p.len();
    let idx = |j: usize| if reverse { (shift + m - j) % m } else { (shift + j) % m };
    let mut best = f64::INFINITY;
    for i in 0..m {
        for j in i + 2..m {
            if i == 0 && j == m - 1 {
                continue;
            }
            let d = segment_segment(&p[i], &q[idx(i)], &p[j], &q[idx(j)]).0;
            best = best.min(d);
        }
    }
    best
}

/// Band of ruled quads joining two closed tubes. Stations of the second
/// tube are matched to those of the first by the cyclic shift and direction
/// that keeps the rulings farthest apart.
pub fn loft_mesh(t1: &Tube, t2: &Tube, opts: LoftOptions) -> Result<TriMesh> {
    let m = opts.stations;
    if m < 8 {
        return Err(Error::InvalidInput("loft needs at least 8 stations"));
    }
    for t in [t1, t2] {
        if !t.is_closed() {
            let (p, tn) = t.curve.closure_residual();
            return Err(Error::NotClosed { position: p, tangent: tn });
        }
    }
    let (l1, l2) = (t1.length(), t2.length());
    // choose the matching on a coarse sample
    let mc = m.min(32);
    let coarse = |t: &Tube, l: f64| (0..mc).map(|j| t.curve.state_at(l * j as f64 / mc as f64).0).collect::<Vec<_>>();
    let (p, q) = (coarse(t1, l1), coarse(t2, l2));
    let mut best = (f64::NEG_INFINITY, 0usize, false);
    for reverse in [false, true] {
        for shift in 0..mc {
            let c = ruling_clearance(&p, &q, shift, reverse);
            if c > best.0 {
                best = (c, shift, reverse);
            }
        }
    }
    let (_, shift, reverse) = best;
    let offset = l2 * shift as f64 / mc as f64;
    let s1 = |j: usize| l1 * j as f64 / m as f64;
    let s2 = |j: usize| {
        let x = l2 * j as f64 / m as f64;
        rem_euclid(if reverse { offset - x } else { offset + x }, l2)
    };
    let mut rows = opts.rows;
    if rows == 0 {
        let mean = (0..m)
            .map(|j| (t1.curve.state_at(s1(j)).0 - t2.curve.state_at(s2(j)).0).norm())
            .sum::<f64>()
            / m as f64;
        rows = (Float::round(mean / (0.5 * (l1 + l2) / m as f64)) as usize + 1).max(3);
    }
    if rows < 2 {
        return Err(Error::InvalidInput("loft needs at least 2 rows"));
    }
    let mut vertices = Vec::with_capacity(rows * m);
    let mut attach = Vec::with_capacity(rows * m);
    let mut b1 = Vec::with_capacity(m);
    let mut b2 = Vec::with_capacity(m);
    for j in 0..m {
        let c1 = t1.curve.state_at(s1(j)).0;
        let c2 = t2.curve.state_at(s2(j)).0;
        b1.push(attached(t1, 0, s1(j), facing(t1, s1(j), &c2)));
        b2.push(attached(t2, 1, s2(j), facing(t2, s2(j), &c1)));
    }
    for r in 0..rows {
        let f = r as f64 / (rows - 1) as f64;
        for j in 0..m {
            if r == 0 {
                vertices.push(b1[j].0);
                attach.push(b1[j].1);
            } else if r == rows - 1 {
                vertices.push(b2[j].0);
                attach.push(b2[j].1);
            } else {
                vertices.push(b1[j].0 * (1.0 - f) + b2[j].0 * f);
                attach.push(Attachment::Free);
            }
        }
    }
    let id = |r: usize, j: usize| r * m + j % m;
    let mut tris = Vec::with_capacity(2 * (rows - 1) * m);
    for r in 0..rows - 1 {
        for j in 0..m {
            tris.push([id(r, j), id(r, j + 1), id(r + 1, j + 1)]);
            tris.push([id(r, j), id(r + 1, j + 1), id(r + 1, j)]);
        }
    }
    Ok(TriMesh::new(vertices, tris, attach))
}

/// Initial spanning film for one ring (disk) or a linked pair (band), checked
/// against the spanning certificate.
pub fn init_spanning_mesh(tubes: &[Tube], resolution: usize) -> Result<TriMesh> {
    let mesh = match tubes {
        [t] => disk_mesh(t, 0, resolution)?,
        [t1, t2] => {
            let gap = crate::constraints::tube_gap(t1, t2);
            if gap <= 0.0 {
                return Err(Error::InitFailed("tubes intersect"));
            }
            loft_mesh(t1, t2, LoftOptions { stations: resolution, rows: 0 })?
        }
        _ => return Err(Error::InvalidInput("film needs one or two tubes")),
    };
    let probes = make_probe_family(tubes, ProbeCounts::default()).map_err(|e| match e {
        Error::ProbeConstructionFailed(msg) => Error::InitFailed(msg),
        other => other,
    })?;
    if !spanning_certificate(&mesh, &probes).pass {
        return Err(Error::InitFailed("seed film fails the spanning certificate"));
    }
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{vec3, PI, TAU};
    use crate::rod::{integrate_frame, CrossSection, DensityField, Frame, Placement};

    pub(crate) fn ring_tube(a: f64, origin: Vec3, frame: Frame, n: usize) -> Tube {
        let df = DensityField::constant(TAU, n, 1.0, 0.0, 0.0).unwrap();
        let fc = integrate_frame(&df, &Placement::new(origin, frame).unwrap()).unwrap();
        Tube::new(fc, CrossSection::disk(a, a).unwrap())
    }

    #[test]
    fn disk_spans_ring() {
        let t = ring_tube(0.01, vec3(-1.0, 0.0, 0.0), Frame::identity(), 257);
        let mesh = disk_mesh(&t, 0, 64).unwrap();
        assert!(mesh.is_valid());
        assert_eq!(mesh.euler_characteristic(), 1);
        assert!(mesh.attachment_defect(&[t.clone()]) < 1e-12);
        let expected = PI * 0.99 * 0.99;
        assert!((mesh.area() - expected).abs() / expected < 0.01, "{}", mesh.area());
        assert!(mesh.min_quality() > 0.3, "{}", mesh.min_quality());
        assert!(init_spanning_mesh(&[t], 64).is_ok());
    }

    #[test]
    fn zipped_rings_are_consistent() {
        let mut tris = Vec::new();
        let inner: Vec<_> = (0..5).map(|i| (i, i as f64 / 5.0)).collect();
        let outer: Vec<_> = (0..12).map(|i| (5 + i, (i as f64 + 0.3) / 12.0)).collect();
        zip_rings(&inner, &outer, &mut tris);
        assert_eq!(tris.len(), 17);
        let mesh = TriMesh::unattached(alloc::vec![Vec3::zeros(); 17], tris);
        assert!(mesh.is_valid());
        assert_eq!(mesh.euler_characteristic(), 0);
    }

    #[test]
    fn coaxial_rings_loft_to_a_cylinder() {
        let f = Frame::identity();
        let t1 = ring_tube(0.01, vec3(-1.0, 0.0, 0.0), f, 257);
        // second ring runs the other way round; the matching must cope
        let g = Frame::new(-f.u, -f.v, f.w).unwrap();
        let t2 = ring_tube(0.01, vec3(1.0, 1.0, 0.0), g, 257);
        let mesh = loft_mesh(&t1, &t2, LoftOptions::default()).unwrap();
        assert!(mesh.is_valid());
        assert_eq!(mesh.euler_characteristic(), 0);
        let expected = TAU * 0.99 * 1.0;
        assert!((mesh.area() - expected).abs() / expected < 0.02, "{}", mesh.area());
    }
}
