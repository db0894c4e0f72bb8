//! Triangulated spanning films.
//!
//! The film is a single oriented manifold-with-boundary mesh. Boundary
//! vertices are attached to tube surfaces by `(rod, s, theta)` coordinates
//! and slide on them; interior vertices move freely.

mod init;
mod mesh;
mod relax;
mod remesh;

pub use init::{disk_mesh, init_spanning_mesh, loft_mesh, LoftOptions};
pub use mesh::{area, Attachment, BoundaryCarrier, TriMesh};
pub use relax::{relax_area, RelaxOptions, RelaxReport};
pub use remesh::{remesh, remesh_verified};
