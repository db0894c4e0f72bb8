//! Equilibrium configurations of two linked Kirchhoff rods spanned by a
//! liquid film.
//!
//! Each rod is an inextensible, unshearable elastic loop described by its
//! strain densities (two flexural densities and a twist density) sampled on
//! a uniform arc-length grid. Integrating the director-frame system turns
//! those densities into a framed midline; the solid tube around it is the
//! rod. A triangulated film attaches to the tube surfaces with sliding
//! contact, and the total energy
//!
//! ```text
//! E = E_el(rod 1) + E_el(rod 2) + E_g(rod 1) + E_g(rod 2) + 2 sigma area(film)
//! ```
//!
//! is minimized over admissible configurations: closed midlines, local and
//! global non-interpenetration, disjoint tubes and fixed topological
//! invariants (inter-rod linking number, self-linking of each rod).
//!
//! The crate is `no_std` and only needs `alloc`. File formats, presets and
//! the command-line front end live in the companion `kplateau-cli` crate.
//!
//! Module map:
//!
//! * [`rod`]: density fields, frame integration, tube map and tube meshes.
//! * [`topology`]: linking numbers, writhe, self-linking, probe loops and
//!   the spanning certificate, Hausdorff distance.
//! * [`constraints`]: admissibility checks.
//! * [`energy`]: elastic, gravity and film energies, parameter gradients.
//! * [`film`]: spanning-surface meshes, area relaxation and remeshing.
//! * [`solver`]: alternating film/rod minimization with penalties.

#![no_std]

extern crate alloc;

pub mod constraints;
pub mod energy;
mod error;
pub mod film;
pub mod math;
pub mod rod;
pub mod solver;
pub mod topology;

pub use error::{Error, Result};
pub use math::Vec3;
