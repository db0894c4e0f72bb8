//! Rods as sampled strain-density fields.
//!
//! A rod is described by its flexural densities `k1`, `k2` and its twist
//! density `twist` on a uniform arc-length grid. [`integrate_frame`] turns
//! the densities and a placement (position and director frame at `s = 0`)
//! into a [`FramedCurve`]; [`Tube`] evaluates the solid tube around it.
//!
//! Frame convention: the directors `(u, v, w)` form a right-handed
//! orthonormal triple with `w` the unit tangent. They rotate with angular
//! velocity `Omega = k1 v - k2 u + twist w`, so the curvature vector is
//! `w' = k1 u + k2 v` and the Jacobian of the tube map
//! `(s, z1, z2) -> r(s) + z1 u(s) + z2 v(s)` is `1 - z1 k1 - z2 k2`.

mod integrate;
mod tube;

use alloc::vec::Vec;
use num_traits::Float;

use crate::math::{Vec3, TAU};
use crate::{Error, Result};

pub use integrate::{closure_residual, integrate_frame};
pub use tube::{tube_mesh, tube_point, Tube};

/// Default upper bound for `max_thickness / length`.
pub const DEFAULT_SLENDERNESS: f64 = 0.1;

/// Closure tolerance on `|r(L) - r(0)|`, relative to the rod length.
pub const CLOSURE_TOL_POSITION: f64 = 1e-6;
/// Closure tolerance on `|w(L) - w(0)|`.
pub const CLOSURE_TOL_TANGENT: f64 = 1e-6;

/// Disk cross-section of radius `radius` inside the thickness bound
/// `max_thickness`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossSection {
    radius: f64,
    max_thickness: f64,
}

impl CrossSection {
    pub fn disk(radius: f64, max_thickness: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidInput("radius must be positive"));
        }
        if !(max_thickness.is_finite() && max_thickness >= radius) {
            return Err(Error::InvalidInput("max_thickness must be at least the radius"));
        }
        Ok(Self { radius, max_thickness })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn max_thickness(&self) -> f64 {
        self.max_thickness
    }

    /// Checks that the rod is longer than broad: `max_thickness <= ratio * length`.
    pub fn check_slender(&self, length: f64, ratio: f64) -> Result<()> {
        if self.max_thickness <= ratio * length {
            Ok(())
        } else {
            Err(Error::InvalidInput("section too thick for the rod length"))
        }
    }

    pub fn contains(&self, z1: f64, z2: f64) -> bool {
        z1 * z1 + z2 * z2 <= self.radius * self.radius * (1.0 + 1e-12)
    }
}

/// Strain densities of one rod on the grid `s_i = i L / (n - 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    length: f64,
    k1: Vec<f64>,
    k2: Vec<f64>,
    twist: Vec<f64>,
}

impl DensityField {
    pub const MIN_NODES: usize = 8;

    pub fn new(length: f64, k1: Vec<f64>, k2: Vec<f64>, twist: Vec<f64>) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidInput("rod length must be positive"));
        }
        let n = k1.len();
        if n < Self::MIN_NODES {
            return Err(Error::InvalidInput("density field needs at least 8 nodes"));
        }
        if k2.len() != n || twist.len() != n {
            return Err(Error::InvalidInput("density arrays differ in length"));
        }
        if k1.iter().chain(&k2).chain(&twist).any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("non-finite density sample"));
        }
        Ok(Self { length, k1, k2, twist })
    }

    pub fn constant(length: f64, n: usize, k1: f64, k2: f64, twist: f64) -> Result<Self> {
        Self::new(length, alloc::vec![k1; n], alloc::vec![k2; n], alloc::vec![twist; n])
    }

    /// Samples `f(s) = (k1, k2, twist)` on the grid.
    pub fn from_fn(length: f64, n: usize, f: impl Fn(f64) -> [f64; 3]) -> Result<Self> {
        let h = length / (n.max(2) - 1) as f64;
        let mut k1 = Vec::with_capacity(n);
        let mut k2 = Vec::with_capacity(n);
        let mut tw = Vec::with_capacity(n);
        for i in 0..n {
            let [a, b, c] = f(i as f64 * h);
            k1.push(a);
            k2.push(b);
            tw.push(c);
        }
        Self::new(length, k1, k2, tw)
    }

    /// Planar circle of radius `radius` whose directors turn `turns` times
    /// about the tangent. The curvature vector stays in the plane, so the
    /// flexural densities rotate against the twist.
    pub fn twisted_circle(radius: f64, n: usize, turns: f64) -> Result<Self> {
        let length = TAU * radius;
        let om = turns * TAU / length;
        let kappa = 1.0 / radius;
        Self::from_fn(length, n, |s| {
            let (sn, cs) = Float::sin_cos(om * s);
            [kappa * cs, -kappa * sn, om]
        })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn len(&self) -> usize {
        self.k1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k1.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        self.length / (self.len() - 1) as f64
    }

    pub fn station(&self, i: usize) -> f64 {
        i as f64 * self.spacing()
    }

    pub fn k1(&self) -> &[f64] {
        &self.k1
    }

    pub fn k2(&self) -> &[f64] {
        &self.k2
    }

    pub fn twist(&self) -> &[f64] {
        &self.twist
    }

    pub fn node(&self, i: usize) -> [f64; 3] {
        [self.k1[i], self.k2[i], self.twist[i]]
    }

    /// Linear interpolation at arc length `s` (clamped to `[0, L]`).
    pub fn sample(&self, s: f64) -> [f64; 3] {
        interpolate(&self.k1, &self.k2, &self.twist, self.spacing(), s)
    }

    /// Linear interpolation onto a grid with `n2` nodes.
    pub fn resample(&self, n2: usize) -> Result<Self> {
        if n2 < Self::MIN_NODES {
            return Err(Error::InvalidInput("density field needs at least 8 nodes"));
        }
        if n2 == self.len() {
            return Ok(self.clone());
        }
        Self::from_fn(self.length, n2, |s| self.sample(s))
    }

    /// Node-wise sum with another field on the same grid.
    pub fn add_samples(&self, dk1: &[f64], dk2: &[f64], dtw: &[f64]) -> Result<Self> {
        let add = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x + y).collect::<Vec<_>>();
        Self::new(self.length, add(&self.k1, dk1), add(&self.k2, dk2), add(&self.twist, dtw))
    }

    /// Integral of the twist density (trapezoid rule).
    pub fn total_twist(&self) -> f64 {
        trapezoid(&self.twist, self.spacing())
    }
}

pub(crate) fn interpolate(k1: &[f64], k2: &[f64], tw: &[f64], h: f64, s: f64) -> [f64; 3] {
    let n = k1.len();
    let x = (s / h).clamp(0.0, (n - 1) as f64);
    let i = (Float::floor(x) as usize).min(n - 2);
    let t = x - i as f64;
    let lerp = |a: &[f64]| a[i] + (a[i + 1] - a[i]) * t;
    [lerp(k1), lerp(k2), lerp(tw)]
}

/// Trapezoid rule on a uniform grid.
pub fn trapezoid(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let inner: f64 = values[1..n - 1].iter().sum();
    h * (inner + 0.5 * (values[0] + values[n - 1]))
}

/// Right-handed orthonormal director triple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub u: Vec3,
    pub v: Vec3,
    pub w: Vec3,
}

impl Frame {
    pub const TOLERANCE: f64 = 1e-9;

    pub fn new(u: Vec3, v: Vec3, w: Vec3) -> Result<Self> {
        let f = Self { u, v, w };
        if f.defect() < Self::TOLERANCE {
            Ok(f)
        } else {
            Err(Error::InvalidInput("frame is not right-handed orthonormal"))
        }
    }

    pub fn identity() -> Self {
        Self { u: Vec3::x(), v: Vec3::y(), w: Vec3::z() }
    }

    /// Frame with tangent `w` and first director along the part of `u`
    /// orthogonal to `w`.
    pub fn from_tangent(w: Vec3, u: Vec3) -> Result<Self> {
        let wn = w.norm();
        if !(wn > 0.0) || !wn.is_finite() {
            return Err(Error::InvalidInput("tangent must be non-zero"));
        }
        let w = w / wn;
        let up = u - w * w.dot(&u);
        let un = up.norm();
        if !(un > 1e-12 * u.norm()) || !un.is_finite() {
            return Err(Error::InvalidInput("director must not be parallel to the tangent"));
        }
        let u = up / un;
        Ok(Self { u, v: w.cross(&u), w })
    }

    /// Largest deviation of the Gram matrix from the identity, or of `u x v` from `w`.
    pub fn defect(&self) -> f64 {
        let g = [
            self.u.dot(&self.u) - 1.0,
            self.v.dot(&self.v) - 1.0,
            self.w.dot(&self.w) - 1.0,
            self.u.dot(&self.v),
            self.u.dot(&self.w),
            self.v.dot(&self.w),
        ];
        let gram = g.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        gram.max((self.u.cross(&self.v) - self.w).norm())
    }

    /// Gram-Schmidt with `w` kept as the leading direction.
    pub(crate) fn reorthonormalized(&self) -> Self {
        let w = self.w / self.w.norm();
        let u = self.u - w * w.dot(&self.u);
        let u = u / u.norm();
        Self { u, v: w.cross(&u), w }
    }

    pub fn rotated(&self, rot: &nalgebra::Matrix3<f64>) -> Self {
        Self { u: rot * self.u, v: rot * self.v, w: rot * self.w }
    }

    /// Matrix with columns `u, v, w`.
    pub fn matrix(&self) -> nalgebra::Matrix3<f64> {
        nalgebra::Matrix3::from_columns(&[self.u, self.v, self.w])
    }
}

/// Position and director frame at `s = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Placement {
    pub origin: Vec3,
    pub frame: Frame,
}

impl Placement {
    pub fn new(origin: Vec3, frame: Frame) -> Result<Self> {
        if !(origin.iter().all(|x| x.is_finite())) {
            return Err(Error::InvalidInput("placement origin must be finite"));
        }
        if frame.defect() >= Frame::TOLERANCE {
            return Err(Error::InvalidInput("placement frame is not orthonormal"));
        }
        Ok(Self { origin, frame })
    }

    pub fn identity() -> Self {
        Self { origin: Vec3::zeros(), frame: Frame::identity() }
    }
}

/// Discrete midline with a director frame at every node.
#[derive(Debug, Clone, PartialEq)]
pub struct FramedCurve {
    points: Vec<Vec3>,
    frames: Vec<Frame>,
    spacing: f64,
    // per-node (k1, k2, twist), used to evaluate the tube between nodes
    densities: Vec<[f64; 3]>,
}

impl FramedCurve {
    pub(crate) fn from_parts(
        points: Vec<Vec3>,
        frames: Vec<Frame>,
        spacing: f64,
        densities: Vec<[f64; 3]>,
    ) -> Self {
        Self { points, frames, spacing, densities }
    }

    /// Builds a framed curve from node positions and frames, estimating the
    /// strain densities from the rotation between consecutive frames. The
    /// spacing is the mean segment length.
    pub fn from_frames(points: Vec<Vec3>, frames: Vec<Frame>) -> Result<Self> {
        let n = points.len();
        if n < 3 || frames.len() != n {
            return Err(Error::InvalidInput("need at least three framed nodes"));
        }
        if frames.iter().any(|f| f.defect() >= Frame::TOLERANCE) {
            return Err(Error::InvalidInput("frame is not right-handed orthonormal"));
        }
        let total: f64 = points.windows(2).map(|p| (p[1] - p[0]).norm()).sum();
        let spacing = total / (n - 1) as f64;
        if !(spacing > 0.0) {
            return Err(Error::InvalidInput("degenerate curve"));
        }
        let mut seg = Vec::with_capacity(n - 1);
        for i in 0..n - 1 {
            let rel = frames[i].matrix().transpose() * frames[i + 1].matrix();
            let rv = nalgebra::Rotation3::from_matrix_unchecked(rel).scaled_axis() / spacing;
            // Omega = -k2 u + k1 v + twist w in body coordinates
            seg.push([rv.y, -rv.x, rv.z]);
        }
        let mut densities = Vec::with_capacity(n);
        for i in 0..n {
            let d = match i {
                0 => seg[0],
                _ if i == n - 1 => seg[n - 2],
                _ => {
                    let (a, b) = (seg[i - 1], seg[i]);
                    [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0, (a[2] + b[2]) / 2.0]
                }
            };
            densities.push(d);
        }
        Ok(Self { points, frames, spacing, densities })
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn densities(&self) -> &[[f64; 3]] {
        &self.densities
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn length(&self) -> f64 {
        self.spacing * (self.len() - 1) as f64
    }

    pub fn closure_residual(&self) -> (f64, f64) {
        closure_residual(self)
    }

    /// Closure within [`CLOSURE_TOL_POSITION`] and [`CLOSURE_TOL_TANGENT`].
    pub fn is_closed(&self) -> bool {
        let (p, t) = self.closure_residual();
        p <= CLOSURE_TOL_POSITION * self.length() && t <= CLOSURE_TOL_TANGENT
    }

    /// Nodes of the closed midline: the duplicated end node is dropped when
    /// the curve closes up to a fraction of the spacing.
    pub fn loop_points(&self) -> &[Vec3] {
        let n = self.len();
        if (self.points[n - 1] - self.points[0]).norm() < 0.5 * self.spacing {
            &self.points[..n - 1]
        } else {
            &self.points
        }
    }

    /// Largest frame defect over all nodes.
    pub fn max_frame_defect(&self) -> f64 {
        self.frames.iter().map(Frame::defect).fold(0.0, f64::max)
    }

    /// Largest relative deviation of the per-segment arc length from the
    /// spacing, measured on the cubic Hermite interpolant through the nodes
    /// and their unit tangents. (Chords are shorter than arcs by
    /// `kappa^2 h^2 / 24`, so chord lengths are not a test of inextensibility.)
    pub fn max_arc_length_defect(&self) -> f64 {
        let h = self.spacing;
        // 5-point Gauss-Legendre on [0, 1]
        const X: [f64; 5] = [
            0.046_910_077_030_668,
            0.230_765_344_947_158,
            0.5,
            0.769_234_655_052_842,
            0.953_089_922_969_332,
        ];
        const W: [f64; 5] = [
            0.118_463_442_528_095,
            0.239_314_335_249_683,
            0.284_444_444_444_444,
            0.239_314_335_249_683,
            0.118_463_442_528_095,
        ];
        let mut worst = 0.0f64;
        for i in 0..self.len() - 1 {
            let (p0, p1) = (self.points[i], self.points[i + 1]);
            let (m0, m1) = (self.frames[i].w * h, self.frames[i + 1].w * h);
            let mut arc = 0.0;
            for (x, wq) in X.iter().zip(W) {
                let t = *x;
                let d = (p0 * (6.0 * t * t - 6.0 * t))
                    + m0 * (3.0 * t * t - 4.0 * t + 1.0)
                    + p1 * (-6.0 * t * t + 6.0 * t)
                    + m1 * (3.0 * t * t - 2.0 * t);
                arc += wq * d.norm();
            }
            worst = worst.max((arc - h).abs() / h);
        }
        worst
    }

    /// Rigid motion `x -> rot x + shift` of the whole curve.
    pub fn transformed(&self, rot: &nalgebra::Matrix3<f64>, shift: &Vec3) -> Self {
        Self {
            points: self.points.iter().map(|p| rot * p + shift).collect(),
            frames: self.frames.iter().map(|f| f.rotated(rot)).collect(),
            spacing: self.spacing,
            densities: self.densities.clone(),
        }
    }

    /// Uniform scaling about the origin.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            points: self.points.iter().map(|p| p * factor).collect(),
            frames: self.frames.clone(),
            spacing: self.spacing * factor,
            densities: self.densities.iter().map(|d| [d[0] / factor, d[1] / factor, d[2] / factor]).collect(),
        }
    }

    /// Position and frame at arc length `s` in `[0, L]`, by one RK4 sub-step
    /// from the preceding node.
    pub fn state_at(&self, s: f64) -> (Vec3, Frame) {
        integrate::state_at(self, s)
    }

    /// Angle of `u(L)` measured in the `(u(0), v(0))` plane about `w(0)`.
    pub fn seam_angle(&self) -> f64 {
        let f0 = self.frames[0];
        let fl = self.frames[self.len() - 1];
        let x = fl.u.dot(&f0.u);
        let y = fl.u.dot(&f0.v);
        Float::atan2(y, x)
    }
}

/// Per-rod mass density.
#[derive(Debug, Clone, PartialEq)]
pub enum MassDensity {
    Uniform(f64),
    PerNode(Vec<f64>),
}

impl MassDensity {
    pub fn at(&self, i: usize) -> f64 {
        match self {
            MassDensity::Uniform(r) => *r,
            MassDensity::PerNode(v) => v[i],
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        let ok = match self {
            MassDensity::Uniform(r) => r.is_finite() && *r > 0.0,
            MassDensity::PerNode(v) => v.len() == n && v.iter().all(|r| r.is_finite() && *r > 0.0),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput("mass density must be positive on every node"))
        }
    }
}

/// One rod: densities, placement at `s = 0`, section and mass density.
#[derive(Debug, Clone, PartialEq)]
pub struct Rod {
    pub density: DensityField,
    pub placement: Placement,
    pub section: CrossSection,
    pub mass: MassDensity,
}

impl Rod {
    pub fn new(
        density: DensityField,
        placement: Placement,
        section: CrossSection,
        mass: MassDensity,
    ) -> Result<Self> {
        mass.validate(density.len())?;
        Ok(Self { density, placement, section, mass })
    }

    pub fn realize(&self) -> Result<FramedCurve> {
        integrate_frame(&self.density, &self.placement)
    }

    pub fn tube(&self) -> Result<Tube> {
        Ok(Tube::new(self.realize()?, self.section))
    }

    pub fn total_mass(&self) -> f64 {
        let n = self.density.len();
        let m: Vec<f64> = (0..n).map(|i| self.mass.at(i)).collect();
        trapezoid(&m, self.density.spacing())
    }
}

/// Full configuration: a clamped first rod, an optional second rod whose
/// placement is an unknown, and the gravity vector.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkConfig {
    rod1: Rod,
    rod2: Option<Rod>,
    pub gravity: Vec3,
}

impl LinkConfig {
    pub fn new(rod1: Rod, rod2: Option<Rod>, gravity: Vec3) -> Result<Self> {
        if !gravity.iter().all(|g| g.is_finite()) {
            return Err(Error::InvalidInput("gravity must be finite"));
        }
        Ok(Self { rod1, rod2, gravity })
    }

    pub fn rod1(&self) -> &Rod {
        &self.rod1
    }

    pub fn rod2(&self) -> Option<&Rod> {
        self.rod2.as_ref()
    }

    pub fn rods(&self) -> impl Iterator<Item = &Rod> {
        core::iter::once(&self.rod1).chain(self.rod2.as_ref())
    }

    pub fn rod_count(&self) -> usize {
        1 + self.rod2.is_some() as usize
    }

    /// Replaces the density field of rod `index` (0 or 1). The clamp of
    /// rod 1 cannot be changed.
    pub fn with_density(&self, index: usize, density: DensityField) -> Result<Self> {
        let mut out = self.clone();
        let rod = match index {
            0 => &mut out.rod1,
            1 => out.rod2.as_mut().ok_or(Error::InvalidInput("configuration has one rod"))?,
            _ => return Err(Error::InvalidInput("rod index out of range")),
        };
        if let MassDensity::PerNode(m) = &rod.mass {
            if m.len() != density.len() {
                return Err(Error::InvalidInput("per-node mass density does not match the grid"));
            }
        }
        rod.density = density;
        Ok(out)
    }

    pub fn with_rod2_placement(&self, placement: Placement) -> Result<Self> {
        let mut out = self.clone();
        out.rod2
            .as_mut()
            .ok_or(Error::InvalidInput("configuration has one rod"))?
            .placement = placement;
        Ok(out)
    }

    pub fn with_gravity(&self, gravity: Vec3) -> Self {
        Self { gravity, ..self.clone() }
    }

    pub fn realize(&self) -> Result<Vec<FramedCurve>> {
        self.rods().map(Rod::realize).collect()
    }

    pub fn tubes(&self) -> Result<Vec<Tube>> {
        self.rods().map(Rod::tube).collect()
    }
}
