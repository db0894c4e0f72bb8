use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use super::mesh::{Attachment, TriMesh};
use crate::math::Vec3;
use crate::rod::Tube;
use crate::topology::{spanning_certificate, ProbeFamily};
use crate::{Error, Result};

const MAX_PASSES: usize = 12;
const SQRT3: f64 = 1.732_050_807_568_877_2;

fn normal(m: &TriMesh, t: &[usize; 3]) -> Vec3 {
    let [a, b, c] = t.map(|i| m.vertices[i]);
    (b - a).cross(&(c - a))
}

fn quality_of(m: &TriMesh, t: &[usize; 3]) -> f64 {
    let [a, b, c] = t.map(|i| m.vertices[i]);
    let l2 = (b - a).norm_squared() + (c - b).norm_squared() + (a - c).norm_squared();
    if l2 == 0.0 {
        return 0.0;
    }
    2.0 * SQRT3 * (b - a).cross(&(c - a)).norm() / l2
}


/// Rotates `t` so that it starts with the directed edge between `a` and `b`
/// (in whichever order the triangle uses); returns `(x, y, z)`.
fn around_edge(t: &[usize; 3], a: usize, b: usize) -> (usize, usize, usize) {
    for k in 0..3 {
        let (x, y, z) = (t[k], t[(k + 1) % 3], t[(k + 2) % 3]);
        if (x == a && y == b) || (x == b && y == a) {
            return (x, y, z);
        }
    }
    unreachable!("edge not in triangle")
}

fn split_pass(m: &mut TriMesh, tubes: &[Tube], max_len: f64) -> usize {
    let edges = m.edge_map();
    let mut long: Vec<((usize, usize), f64)> = edges
        .keys()
        .map(|&(a, b)| ((a, b), (m.vertices[a] - m.vertices[b]).norm()))
        .filter(|&(_, l)| l > max_len)
        .collect();
    long.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
    let mut touched = alloc::vec![false; m.triangles.len()];
    let mut count = 0;
    for ((a, b), _) in long {
        let tris = &edges[&(a, b)];
        if tris.iter().any(|&t| touched[t]) {
            continue;
        }
        let mid = (m.vertices[a] + m.vertices[b]) * 0.5;
        let (p, att) = match (m.attach[a], m.attach[b]) {
            (Attachment::Tube { rod: r1, .. }, Attachment::Tube { rod: r2, .. }) if r1 == r2 && tris.len() == 1 => {
                let (s, theta) = tubes[r1].project(&mid);
                (tubes[r1].surface_point(s, theta), Attachment::Tube { rod: r1, s, theta })
            }
            _ => (mid, Attachment::Free),
        };
        let v = m.vertices.len();
        m.vertices.push(p);
        m.attach.push(att);
        for &t in tris {
            let (x, y, z) = around_edge(&m.triangles[t], a, b);
            m.triangles[t] = [x, v, z];
            m.triangles.push([v, y, z]);
            touched[t] = true;
            touched.push(true);
        }
        count += 1;
    }
    count
}

fn vertex_triangles(m: &TriMesh) -> Vec<Vec<usize>> {
    let mut vt = alloc::vec![Vec::new(); m.vertices.len()];
    for (i, t) in m.triangles.iter().enumerate() {
        for &v in t {
            vt[v].push(i);
        }
    }
    vt
}

fn boundary_vertices(m: &TriMesh) -> Vec<bool> {
    let mut on = alloc::vec![false; m.vertices.len()];
    for (&(a, b), ts) in m.edge_map().iter() {
        if ts.len() == 1 {
            on[a] = true;
            on[b] = true;
        }
    }
    on
}

fn collapse_pass(m: &mut TriMesh, min_len: f64, max_len: f64) -> usize {
    let edges = m.edge_map();
    let vt = vertex_triangles(m);
    let on_boundary = boundary_vertices(m);
    let mut short: Vec<((usize, usize), f64)> = edges
        .keys()
        .map(|&(a, b)| ((a, b), (m.vertices[a] - m.vertices[b]).norm()))
        .filter(|&(_, l)| l < min_len)
        .collect();
    short.sort_by(|x, y| x.1.total_cmp(&y.1).then(x.0.cmp(&y.0)));
    let mut dirty = alloc::vec![false; m.vertices.len()];
    let mut dead = alloc::vec![false; m.triangles.len()];
    let mut count = 0;
    for ((a, b), _) in short {
        if dirty[a] || dirty[b] {
            continue;
        }
        let tris = &edges[&(a, b)];
        let boundary_edge = tris.len() == 1;
        let (keep, gone) = match (m.attach[a], m.attach[b]) {
            (Attachment::Tube { rod: r1, .. }, Attachment::Tube { rod: r2, .. }) => {
                if !(boundary_edge && r1 == r2) {
                    continue;
                }
                (a, b)
            }
            (Attachment::Free, Attachment::Tube { .. }) => (b, a),
            (Attachment::Tube { .. }, Attachment::Free) => (a, b),
            (Attachment::Free, Attachment::Free) => {
                if on_boundary[a] && on_boundary[b] && !boundary_edge {
                    continue;
                }
                if on_boundary[b] && !on_boundary[a] {
                    (b, a)
                } else {
                    (a, b)
                }
            }
        };
        if on_boundary[gone] && !on_boundary[keep] {
            continue;
        }
        if on_boundary[a] && on_boundary[b] && !boundary_edge {
            continue;
        }
        // link condition
        let link = |v: usize| -> BTreeSet<usize> {
            vt[v].iter().flat_map(|&t| m.triangles[t]).filter(|&x| x != v).collect()
        };
        let common: BTreeSet<usize> = link(a).intersection(&link(b)).copied().collect();
        let opposite: BTreeSet<usize> = tris.iter().map(|&t| around_edge(&m.triangles[t], a, b).2).collect();
        if common != opposite {
            continue;
        }
        // geometric checks on the triangles that survive; the worst shape
        // around the edge must not get worse
        let worst = vt[a].iter().chain(&vt[b]).map(|&t| quality_of(m, &m.triangles[t])).fold(f64::INFINITY, f64::min);
        let floor = worst.min(0.1);
        let mut ok = true;
        for &t in &vt[gone] {
            if tris.contains(&t) {
                continue;
            }
            let old = m.triangles[t];
            let new = old.map(|v| if v == gone { keep } else { v });
            let (n0, n1) = (normal(m, &old), normal(m, &new));
            if n0.dot(&n1) <= 0.5 * n0.norm() * n1.norm() || quality_of(m, &new) <= floor {
                ok = false;
                break;
            }
            if new.iter().any(|&v| v != keep && (m.vertices[v] - m.vertices[keep]).norm() > max_len) {
                ok = false;
                break;
            }
        }
        if !ok {
            continue;
        }
        for &t in &tris[..] {
            dead[t] = true;
        }
        for &t in &vt[gone] {
            if !dead[t] {
                for v in m.triangles[t].iter_mut() {
                    if *v == gone {
                        *v = keep;
                    }
                }
            }
            for &v in &m.triangles[t] {
                dirty[v] = true;
            }
        }
        dirty[a] = true;
        dirty[b] = true;
        count += 1;
    }
    let mut k = 0;
    m.triangles.retain(|_| {
        k += 1;
        !dead[k - 1]
    });
    count
}

fn flip_pass(m: &mut TriMesh) -> usize {
    let edges = m.edge_map();
    let vt = vertex_triangles(m);
    let mut touched = alloc::vec![false; m.triangles.len()];
    let mut count = 0;
    let mut existing: BTreeSet<(usize, usize)> = edges.keys().copied().collect();
    for (&(a, b), tris) in edges.iter() {
        if tris.len() != 2 || touched[tris[0]] || touched[tris[1]] {
            continue;
        }
        if vt[a].len() < 4 || vt[b].len() < 4 {
            continue;
        }
        let (x1, y1, c) = around_edge(&m.triangles[tris[0]], a, b);
        let (_, _, d) = around_edge(&m.triangles[tris[1]], a, b);
        if c == d || existing.contains(&(c.min(d), c.max(d))) {
            continue;
        }
        // orient so the first triangle runs x1 -> y1 -> c
        let (t1, t2) = ([x1, d, c], [d, y1, c]);
        let old = [m.triangles[tris[0]], m.triangles[tris[1]]];
        let (n0, n1) = (normal(m, &old[0]), normal(m, &old[1]));
        if n0.dot(&n1) < 0.95 * n0.norm() * n1.norm() {
            continue;
        }
        let (m0, m1) = (normal(m, &t1), normal(m, &t2));
        let avg = n0 + n1;
        if m0.dot(&avg) <= 0.0 || m1.dot(&avg) <= 0.0 {
            continue;
        }
        let before = quality_of(m, &old[0]).min(quality_of(m, &old[1]));
        let after = quality_of(m, &t1).min(quality_of(m, &t2));
        if after <= 1.05 * before {
            continue;
        }
        m.triangles[tris[0]] = t1;
        m.triangles[tris[1]] = t2;
        touched[tris[0]] = true;
        touched[tris[1]] = true;
        existing.remove(&(a, b));
        existing.insert((c.min(d), c.max(d)));
        count += 1;
    }
    count
}

/// Splits edges longer than `1.5 target`, collapses edges shorter than
/// `0.5 target` and flips edges to improve triangle shape. Attached vertices
/// keep their tube coordinates; new boundary vertices are projected onto
/// the tube surface.
pub fn remesh(mesh: &TriMesh, tubes: &[Tube], target_edge: f64) -> Result<TriMesh> {
    if !(target_edge > 0.0) {
        return Err(Error::InvalidInput("target edge length must be positive"));
    }
    if !mesh.is_valid() {
        return Err(Error::InvalidInput("invalid film mesh"));
    }
    let mut m = mesh.clone();
    for _ in 0..MAX_PASSES {
        let mut changes = split_pass(&mut m, tubes, 1.5 * target_edge);
        changes += collapse_pass(&mut m, 0.5 * target_edge, 1.5 * target_edge);
        changes += flip_pass(&mut m);
        if changes == 0 {
            break;
        }
    }
    m.compact();
    debug_assert!(m.is_valid());
    Ok(m)
}

/// [`remesh`] followed by the spanning certificate.
pub fn remesh_verified(mesh: &TriMesh, tubes: &[Tube], target_edge: f64, probes: &ProbeFamily) -> Result<TriMesh> {
    let out = remesh(mesh, tubes, target_edge)?;
    if !spanning_certificate(&out, probes).pass {
        return Err(Error::InvariantBroken("remeshed film fails the spanning certificate"));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::film::disk_mesh;
    use crate::math::TAU;
    use crate::rod::{integrate_frame, CrossSection, DensityField, Placement};

    fn ring(a: f64) -> Tube {
        let df = DensityField::constant(TAU, 257, 1.0, 0.0, 0.0).unwrap();
        let fc = integrate_frame(&df, &Placement::identity()).unwrap();
        Tube::new(fc, CrossSection::disk(a, a).unwrap())
    }

    fn edge_lengths(m: &TriMesh) -> Vec<f64> {
        m.edge_map().keys().map(|&(a, b)| (m.vertices[a] - m.vertices[b]).norm()).collect()
    }

    #[test]
    fn refined_disk_keeps_area_and_attachments() {
        let t = ring(0.01);
        let tubes = [t.clone()];
        let disk = disk_mesh(&t, 0, 128).unwrap();
        let target = TAU / 128.0 / 1.6;
        let fine = remesh(&disk, &tubes, target).unwrap();
        assert!(fine.is_valid());
        assert_eq!(fine.euler_characteristic(), 1);
        assert!(fine.triangles.len() > 2 * disk.triangles.len());
        assert!((fine.area() - disk.area()).abs() / disk.area() < 1e-3);
        assert!(fine.attachment_defect(&tubes) < 1e-10);
        let lens = edge_lengths(&fine);
        let inside = lens.iter().filter(|&&l| l >= 0.5 * target && l <= 1.5 * target).count();
        assert!(inside as f64 > 0.9 * lens.len() as f64);
    }

    #[test]
    fn mesh_at_target_is_nearly_unchanged() {
        let t = ring(0.01);
        let disk = disk_mesh(&t, 0, 48).unwrap();
        let target = TAU / 48.0;
        let out = remesh(&disk, &[t], target).unwrap();
        let ratio = out.triangles.len() as f64 / disk.triangles.len() as f64;
        assert!((ratio - 1.0).abs() < 0.1, "{ratio}");
        assert_eq!(out.euler_characteristic(), 1);
    }

    #[test]
    fn coarsening_collapses_short_edges() {
        let t = ring(0.01);
        let tubes = [t.clone()];
        let disk = disk_mesh(&t, 0, 64).unwrap();
        let out = remesh(&disk, &tubes, TAU / 24.0).unwrap();
        assert!(out.is_valid());
        assert!(out.triangles.len() < disk.triangles.len());
        assert_eq!(out.euler_characteristic(), 1);
        assert!(out.attachment_defect(&tubes) < 1e-10);
    }
}
