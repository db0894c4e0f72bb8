//! OBJ meshes and CSV solve traces.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use kplateau_core::film::TriMesh;
use kplateau_core::math::Vec3;
use kplateau_core::solver::SolveTrace;

/// Column order of the trace CSV.
pub const TRACE_COLUMNS: [&str; 13] = [
    "iter", "e_el1", "e_el2", "e_g1", "e_g2", "e_film", "e_total", "penalties", "lk12", "n1", "n2", "area", "hausdorff_step",
];

/// OBJ text: a comment header, `v x y z` lines with 17 significant digits,
/// then `f i j k` lines with 1-based indices.
pub fn mesh_to_obj(mesh: &TriMesh) -> String {
    let mut out = String::from("# kplateau triangle mesh\n");
    for v in &mesh.vertices {
        writeln!(out, "v {:.16e} {:.16e} {:.16e}", v.x, v.y, v.z).unwrap();
    }
    for t in &mesh.triangles {
        writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1).unwrap();
    }
    out
}

pub fn export_mesh(mesh: &TriMesh, path: &Path) -> io::Result<()> {
    fs::write(path, mesh_to_obj(mesh))
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("line {line}: {reason}")]
pub struct ObjError {
    pub line: usize,
    pub reason: &'static str,
}

/// Reads the `v` and `f` lines of an OBJ file (triangles only, `i/j/k`
/// index forms are accepted and reduced to the vertex index).
pub fn read_obj(text: &str) -> Result<(Vec<Vec3>, Vec<[usize; 3]>), ObjError> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let err = |reason| ObjError { line: i + 1, reason };
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("v") => {
                let xs: Vec<f64> = parts.map(|p| p.parse::<f64>()).collect::<Result<_, _>>().map_err(|_| err("bad coordinate"))?;
                if xs.len() < 3 {
                    return Err(err("vertex needs three coordinates"));
                }
                vertices.push(Vec3::new(xs[0], xs[1], xs[2]));
            }
            Some("f") => {
                let idx: Vec<usize> = parts
                    .map(|p| p.split('/').next().unwrap_or("").parse::<usize>())
                    .collect::<Result<_, _>>()
                    .map_err(|_| err("bad face index"))?;
                if idx.len() != 3 {
                    return Err(err("only triangles are supported"));
                }
                if idx.iter().any(|&k| k == 0 || k > vertices.len()) {
                    return Err(err("face index out of range"));
                }
                faces.push([idx[0] - 1, idx[1] - 1, idx[2] - 1]);
            }
            _ => {}
        }
    }
    Ok((vertices, faces))
}

/// CSV with a header row and one row per trace entry, columns in
/// [`TRACE_COLUMNS`] order.
pub fn trace_to_csv(trace: &SolveTrace) -> String {
    let mut out = TRACE_COLUMNS.join(",");
    out.push('\n');
    for r in &trace.rows {
        let e = &r.energy;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.iter,
            e.e_el1,
            e.e_el2,
            e.e_g1,
            e.e_g2,
            e.e_film,
            e.e_total,
            r.penalty,
            r.invariants.lk12,
            r.invariants.n1,
            r.invariants.n2,
            r.area,
            r.hausdorff_step
        )
        .unwrap();
    }
    out
}

pub fn export_trace(trace: &SolveTrace, path: &Path) -> io::Result<()> {
    fs::write(path, trace_to_csv(trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use kplateau_core::math::vec3;

    fn square() -> TriMesh {
        let v = vec![vec3(0.0, 0.0, 0.0), vec3(1.0, 0.0, 0.0), vec3(1.0, 1.0, 0.0), vec3(0.0, 1.0, 1.0 / 3.0)];
        TriMesh::unattached(v, vec![[0, 1, 2], [0, 2, 3]])
    }

    #[test]
    fn two_triangle_square() {
        let obj = mesh_to_obj(&square());
        assert_eq!(obj.lines().filter(|l| l.starts_with("v ")).count(), 4);
        assert_eq!(obj.lines().filter(|l| l.starts_with("f ")).count(), 2);
        assert!(obj.contains("\nf 1 3 4\n"));
        assert!(obj.contains("v 0.0000000000000000e0 1.0000000000000000e0 3.3333333333333331e-1\n"));
    }

    #[test]
    fn reader_reproduces_vertices_exactly() {
        let m = square();
        let (v, f) = read_obj(&mesh_to_obj(&m)).unwrap();
        assert_eq!(v, m.vertices);
        assert_eq!(f, m.triangles);
    }

    #[test]
    fn empty_mesh_is_header_only() {
        let obj = mesh_to_obj(&TriMesh::default());
        assert_eq!(obj, "# kplateau triangle mesh\n");
        assert_eq!(read_obj(&obj).unwrap(), (vec![], vec![]));
    }

    #[test]
    fn reader_rejects_bad_faces() {
        assert_eq!(read_obj("v 0 0 0\nf 1 2 3\n").unwrap_err().line, 2);
        assert_eq!(read_obj("v 0 0\n").unwrap_err().reason, "vertex needs three coordinates");
    }
}
