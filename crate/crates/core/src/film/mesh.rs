use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use num_traits::Float;

use crate::math::{triangle_area, Vec3};
use crate::rod::Tube;

/// How a film vertex is tied to the rods.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Attachment {
    Free,
    /// Sliding contact on the surface of tube `rod` at station `s`, angle `theta`.
    Tube { rod: usize, s: f64, theta: f64 },
}

impl Attachment {
    pub fn is_free(&self) -> bool {
        matches!(self, Attachment::Free)
    }
}

/// Triangle mesh with per-vertex tube attachments.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TriMesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[usize; 3]>,
    pub attach: Vec<Attachment>,
}

impl TriMesh {
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[usize; 3]>, attach: Vec<Attachment>) -> Self {
        Self { vertices, triangles, attach }
    }

    pub fn unattached(vertices: Vec<Vec3>, triangles: Vec<[usize; 3]>) -> Self {
        let attach = alloc::vec![Attachment::Free; vertices.len()];
        Self { vertices, triangles, attach }
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        triangle_area(&self.vertices[a], &self.vertices[b], &self.vertices[c])
    }

    pub fn area(&self) -> f64 {
        area(self)
    }

    /// Undirected edges with the triangles that use them.
    pub fn edge_map(&self) -> BTreeMap<(usize, usize), Vec<usize>> {
        let mut map: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                map.entry((a.min(b), a.max(b))).or_default().push(t);
            }
        }
        map
    }

    pub fn euler_characteristic(&self) -> i64 {
        let used = {
            let mut seen = alloc::vec![false; self.vertices.len()];
            for t in &self.triangles {
                for &v in t {
                    seen[v] = true;
                }
            }
            seen.iter().filter(|&&s| s).count()
        };
        used as i64 - self.edge_map().len() as i64 + self.triangles.len() as i64
    }

    /// Structural checks: valid indices, no repeated corner, every edge in at
    /// most two triangles, consistent orientation across shared edges.
    pub fn is_valid(&self) -> bool {
        let n = self.vertices.len();
        if self.attach.len() != n {
            return false;
        }
        for t in &self.triangles {
            if t.iter().any(|&v| v >= n) || t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
                return false;
            }
        }
        let mut directed: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for t in &self.triangles {
            for k in 0..3 {
                *directed.entry((t[k], t[(k + 1) % 3])).or_default() += 1;
            }
        }
        if directed.values().any(|&c| c > 1) {
            return false;
        }
        self.edge_map().values().all(|ts| ts.len() <= 2)
    }

    /// `4 sqrt(3) area / sum of squared edge lengths`; 1 for equilateral.
    pub fn triangle_quality(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        let (pa, pb, pc) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        let l2 = (pb - pa).norm_squared() + (pc - pb).norm_squared() + (pa - pc).norm_squared();
        if l2 == 0.0 {
            return 0.0;
        }
        4.0 * Float::sqrt(3.0) * triangle_area(&pa, &pb, &pc) / l2
    }

    pub fn min_quality(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_quality(t)).fold(1.0, f64::min)
    }

    /// Largest distance of an attached vertex from its tube-surface position.
    pub fn attachment_defect(&self, tubes: &[Tube]) -> f64 {
        self.vertices
            .iter()
            .zip(&self.attach)
            .filter_map(|(p, a)| match *a {
                Attachment::Tube { rod, s, theta } => Some((tubes[rod].surface_point(s, theta) - p).norm()),
                Attachment::Free => None,
            })
            .fold(0.0, f64::max)
    }

    /// Moves every attached vertex back onto its tube surface.
    pub fn reattach(&mut self, tubes: &[Tube]) {
        for (p, a) in self.vertices.iter_mut().zip(&self.attach) {
            if let Attachment::Tube { rod, s, theta } = *a {
                *p = tubes[rod].surface_point(s, theta);
            }
        }
    }

    /// Mean edge length; zero for an empty mesh.
    pub fn mean_edge(&self) -> f64 {
        let edges = self.edge_map();
        if edges.is_empty() {
            return 0.0;
        }
        edges.keys().map(|&(a, b)| (self.vertices[a] - self.vertices[b]).norm()).sum::<f64>() / edges.len() as f64
    }

    /// Drops vertices not referenced by any triangle.
    pub fn compact(&mut self) {
        let mut map = alloc::vec![usize::MAX; self.vertices.len()];
        let mut verts = Vec::new();
        let mut att = Vec::new();
        for t in &mut self.triangles {
            for v in t.iter_mut() {
                if map[*v] == usize::MAX {
                    map[*v] = verts.len();
                    verts.push(self.vertices[*v]);
                    att.push(self.attach[*v]);
                }
                *v = map[*v];
            }
        }
        self.vertices = verts;
        self.attach = att;
    }
}

/// Moves the film with its rods: attached vertices are re-attached and
/// free vertices within `reach` of an attached one follow it with weight
/// `(1 - d / reach)^2`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BoundaryCarrier {
    /// `(free vertex, nearest attached vertex, weight)`.
    links: Vec<(usize, usize, f64)>,
}

impl BoundaryCarrier {
    pub fn new(mesh: &TriMesh, reach: f64) -> Self {
        let anchors: Vec<usize> = (0..mesh.vertices.len()).filter(|&i| !mesh.attach[i].is_free()).collect();
        let mut links = Vec::new();
        if !(reach > 0.0) {
            return Self { links };
        }
        for (i, p) in mesh.vertices.iter().enumerate() {
            if !mesh.attach[i].is_free() {
                continue;
            }
            let nearest = anchors
                .iter()
                .map(|&j| ((mesh.vertices[j] - p).norm(), j))
                .fold((f64::INFINITY, usize::MAX), |a, b| if b.0 < a.0 { b } else { a });
            if nearest.0 < reach {
                let t = 1.0 - nearest.0 / reach;
                links.push((i, nearest.1, t * t));
            }
        }
        Self { links }
    }

    /// `mesh` must be the mesh the carrier was built from.
    pub fn carry(&self, mesh: &TriMesh, tubes: &[Tube]) -> TriMesh {
        let mut out = mesh.clone();
        out.reattach(tubes);
        for &(i, j, w) in &self.links {
            let shift = (out.vertices[j] - mesh.vertices[j]) * w;
            out.vertices[i] += shift;
        }
        out
    }
}

/// Sum of triangle areas.
pub fn area(mesh: &TriMesh) -> f64 {
    (0..mesh.triangles.len()).map(|t| mesh.triangle_area(t)).sum()
}

#[cfg(test)]
pub(crate) fn unit_square() -> TriMesh {
    use crate::math::vec3;
    TriMesh::unattached(
        alloc::vec![vec3(0.0, 0.0, 0.0), vec3(1.0, 0.0, 0.0), vec3(1.0, 1.0, 0.0), vec3(0.0, 1.0, 0.0)],
        alloc::vec![[0, 1, 2], [0, 2, 3]],
    )
}
