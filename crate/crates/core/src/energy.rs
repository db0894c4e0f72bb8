//! Elastic, gravitational and film energies and parameter gradients.

use alloc::vec::Vec;
use num_traits::Float;

use crate::film::TriMesh;
use crate::math::{rotation_from_vector, Vec3, TAU};
use crate::rod::{trapezoid, CrossSection, DensityField, FramedCurve, LinkConfig, MassDensity, Placement};
use crate::{Error, Result};

/// Quadratic bending/twisting density with a rational barrier against
/// complete compression of the section.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElasticDensity {
    /// Stiffnesses for `k1^2`, `k2^2`, `twist^2`.
    pub a: [f64; 3],
    pub barrier_eps: f64,
}

impl ElasticDensity {
    pub const MAX_BARRIER: f64 = 0.2;

    pub fn new(a1: f64, a2: f64, a3: f64, barrier_eps: f64) -> Result<Self> {
        if !([a1, a2, a3].iter().all(|a| a.is_finite() && *a > 0.0)) {
            return Err(Error::InvalidInput("stiffnesses must be positive"));
        }
        if !(0.0..=Self::MAX_BARRIER).contains(&barrier_eps) {
            return Err(Error::InvalidInput("barrier weight must lie in [0, 0.2]"));
        }
        Ok(Self { a: [a1, a2, a3], barrier_eps })
    }

    /// Same density with every stiffness multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self { a: self.a.map(|a| a * factor), ..*self }
    }

    /// Coercivity constant `min(a) / 2`.
    pub fn coercivity(&self) -> f64 {
        self.a.iter().copied().fold(f64::INFINITY, f64::min) / 2.0
    }

    /// Energy density at strains `k` for a disk section of radius `radius`;
    /// infinite once `radius |(k1, k2)| >= 1`.
    pub fn density(&self, k: [f64; 3], radius: f64) -> f64 {
        let quad = 0.5 * (self.a[0] * k[0] * k[0] + self.a[1] * k[1] * k[1] + self.a[2] * k[2] * k[2]);
        let g = radius * Float::hypot(k[0], k[1]);
        if g >= 1.0 {
            return f64::INFINITY;
        }
        let g2 = g * g;
        quad + self.barrier_eps * self.a[0] * g2 / (1.0 - g2)
    }
}

/// Trapezoid rule of the elastic density over the grid. Infinite if any
/// node violates local injectivity.
pub fn elastic_energy(df: &DensityField, ed: &ElasticDensity, cs: &CrossSection) -> f64 {
    let a = cs.radius();
    let f: Vec<f64> = (0..df.len()).map(|i| ed.density(df.node(i), a)).collect();
    if f.iter().any(|x| x.is_infinite()) {
        return f64::INFINITY;
    }
    trapezoid(&f, df.spacing())
}

/// Potential energy of the weight, `-sum rho g . r h` (trapezoid rule).
pub fn gravity_energy(fc: &FramedCurve, mass: &MassDensity, g: &Vec3) -> f64 {
    let f: Vec<f64> = fc.points().iter().enumerate().map(|(i, r)| -mass.at(i) * g.dot(r)).collect();
    trapezoid(&f, fc.spacing())
}

/// `2 sigma area`; both faces of the film carry tension.
pub fn film_energy(mesh: &TriMesh, sigma: f64) -> f64 {
    2.0 * sigma * mesh.area()
}

/// Itemized energy of a configuration.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnergyReport {
    pub e_el1: f64,
    pub e_el2: f64,
    pub e_g1: f64,
    pub e_g2: f64,
    pub e_film: f64,
    pub e_total: f64,
    pub sigma: f64,
    /// Some node has a non-zero barrier contribution.
    pub barrier_active: bool,
}

impl EnergyReport {
    pub fn loop_energy(&self) -> f64 {
        self.e_el1 + self.e_el2 + self.e_g1 + self.e_g2
    }
}

fn check_densities(link: &LinkConfig, ed: &[ElasticDensity]) -> Result<()> {
    if ed.len() != link.rod_count() {
        return Err(Error::InvalidInput("one elastic density per rod required"));
    }
    Ok(())
}

/// Elastic plus gravitational energy of all rods.
pub fn loop_energy(link: &LinkConfig, ed: &[ElasticDensity]) -> Result<f64> {
    check_densities(link, ed)?;
    let mut e = 0.0;
    for (rod, d) in link.rods().zip(ed) {
        e += elastic_energy(&rod.density, d, &rod.section);
        let fc = rod.realize()?;
        e += gravity_energy(&fc, &rod.mass, &link.gravity);
    }
    Ok(e)
}

/// Every energy term for the configuration and film `mesh`.
pub fn total_energy(link: &LinkConfig, ed: &[ElasticDensity], mesh: &TriMesh, sigma: f64) -> Result<EnergyReport> {
    check_densities(link, ed)?;
    if !(sigma >= 0.0) {
        return Err(Error::InvalidInput("surface tension must be non-negative"));
    }
    let mut el = [0.0; 2];
    let mut gr = [0.0; 2];
    let mut barrier_active = false;
    for (i, (rod, d)) in link.rods().zip(ed).enumerate() {
        el[i] = elastic_energy(&rod.density, d, &rod.section);
        gr[i] = gravity_energy(&rod.realize()?, &rod.mass, &link.gravity);
        barrier_active |= d.barrier_eps > 0.0
            && (0..rod.density.len()).any(|k| {
                let [k1, k2, _] = rod.density.node(k);
                k1 != 0.0 || k2 != 0.0
            });
    }
    let e_film = film_energy(mesh, sigma);
    Ok(EnergyReport {
        e_el1: el[0],
        e_el2: el[1],
        e_g1: gr[0],
        e_g2: gr[1],
        e_film,
        e_total: el[0] + el[1] + gr[0] + gr[1] + e_film,
        sigma,
        barrier_active,
    })
}

/// Maps a parameter vector to a perturbed configuration: per free rod and
/// per strain field a truncated Fourier series over the rod length, then
/// optionally a rigid motion of rod 2 (translation, rotation vector about
/// its start point).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParameterMap {
    pub harmonics: usize,
    /// Which rods have free strain fields.
    pub free_rods: [bool; 2],
    /// Whether rod 2's placement is free.
    pub free_placement: bool,
}

impl ParameterMap {
    /// Coefficients per strain field.
    pub fn per_field(&self) -> usize {
        2 * self.harmonics + 1
    }

    fn active(&self, link: &LinkConfig) -> ([bool; 2], bool) {
        let two = link.rod_count() == 2;
        ([self.free_rods[0], self.free_rods[1] && two], self.free_placement && two)
    }

    pub fn len(&self, link: &LinkConfig) -> usize {
        let (rods, pl) = self.active(link);
        rods.iter().filter(|&&r| r).count() * 3 * self.per_field() + if pl { 6 } else { 0 }
    }

    pub fn is_empty(&self, link: &LinkConfig) -> bool {
        self.len(link) == 0
    }

    /// Fourier basis function `j` (`1`, then cos/sin pairs) at `s`.
    pub fn basis(&self, j: usize, s: f64, length: f64) -> f64 {
        if j == 0 {
            return 1.0;
        }
        let k = (j + 1) / 2;
        let x = TAU * k as f64 * s / length;
        if j % 2 == 1 {
            Float::cos(x)
        } else {
            Float::sin(x)
        }
    }

    /// Node values of the series with coefficients `c` on a grid.
    pub fn series(&self, c: &[f64], df: &DensityField) -> Vec<f64> {
        (0..df.len())
            .map(|i| {
                let s = df.station(i);
                c.iter().enumerate().map(|(j, cj)| cj * self.basis(j, s, df.length())).sum()
            })
            .collect()
    }

    /// The configuration at parameters `x` relative to `base`.
    pub fn apply(&self, base: &LinkConfig, x: &[f64]) -> Result<LinkConfig> {
        if x.len() != self.len(base) {
            return Err(Error::InvalidInput("parameter vector has the wrong length"));
        }
        let (rods, pl) = self.active(base);
        let per = self.per_field();
        let mut link = base.clone();
        let mut off = 0;
        for (i, rod) in base.rods().enumerate() {
            if !rods[i] {
                continue;
            }
            let df = &rod.density;
            let d: [Vec<f64>; 3] = core::array::from_fn(|f| self.series(&x[off + f * per..off + (f + 1) * per], df));
            off += 3 * per;
            link = link.with_density(i, df.add_samples(&d[0], &d[1], &d[2])?)?;
        }
        if pl {
            let p = &base.rod2().unwrap().placement;
            let t = Vec3::new(x[off], x[off + 1], x[off + 2]);
            let rot = rotation_from_vector(&Vec3::new(x[off + 3], x[off + 4], x[off + 5]));
            let frame = p.frame.rotated(&rot);
            link = link.with_rod2_placement(Placement::new(p.origin + t, frame)?)?;
        }
        Ok(link)
    }
}

/// Relative central-difference step.
pub const GRADIENT_STEP: f64 = 1e-5;

/// Central finite-difference gradient of `f` at `x`, step
/// `GRADIENT_STEP * max(1, |x_j|)`. Fails if any stencil value is not finite.
pub fn fd_gradient<F>(f: F, x: &[f64]) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    let entry = |j: usize| -> Result<f64> {
        let h = GRADIENT_STEP * x[j].abs().max(1.0);
        let mut xp = x.to_vec();
        xp[j] += h;
        let mut xm = x.to_vec();
        xm[j] -= h;
        let (fp, fm) = (f(&xp)?, f(&xm)?);
        if !fp.is_finite() || !fm.is_finite() {
            return Err(Error::GradientUndefined(j));
        }
        Ok((fp - fm) / (2.0 * h))
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..x.len()).into_par_iter().map(entry).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..x.len()).map(entry).collect()
    }
}

/// Gradient of the loop energy with respect to the parameters of `map` at
/// `x` (zero means the unperturbed configuration).
pub fn loop_energy_gradient(link: &LinkConfig, ed: &[ElasticDensity], map: &ParameterMap, x: &[f64]) -> Result<Vec<f64>> {
    fd_gradient(|p| loop_energy(&map.apply(link, p)?, ed), x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{vec3, PI};
    use crate::rod::{integrate_frame, Rod};

    #[test]
    fn circle_bending_energy() {
        let r = 2.0;
        let df = DensityField::constant(TAU * r, 129, 1.0 / r, 0.0, 0.0).unwrap();
        let ed = ElasticDensity::new(3.0, 1.0, 1.0, 0.0).unwrap();
        let e = elastic_energy(&df, &ed, &CrossSection::disk(0.1, 0.1).unwrap());
        assert!((e - PI * 3.0 / r).abs() < 1e-12 * e);
    }

    #[test]
    fn barrier_blows_up() {
        let ed = ElasticDensity::new(1.0, 1.0, 1.0, 0.1).unwrap();
        let a = 0.1;
        let k = (1.0 - 1e-9) / a;
        assert!(ed.density([k, 0.0, 0.0], a) > 1e6);
        assert_eq!(ed.density([k * 1.01, 0.0, 0.0], a), f64::INFINITY);
    }

    #[test]
    fn level_ring_gravity() {
        // horizontal unit ring at height 1.5
        let df = DensityField::constant(TAU, 129, 1.0, 0.0, 0.0).unwrap();
        let f = crate::rod::Frame::new(Vec3::x(), -Vec3::z(), Vec3::y()).unwrap();
        let fc = integrate_frame(&df, &Placement::new(vec3(0.0, 0.0, 1.5), f).unwrap()).unwrap();
        let g = vec3(0.0, 0.0, -9.81);
        let e = gravity_energy(&fc, &MassDensity::Uniform(0.2), &g);
        let m = 0.2 * TAU;
        assert!((e - m * 9.81 * 1.5).abs() < 1e-9);
        assert!((gravity_energy(&fc, &MassDensity::Uniform(0.2), &-g) + e).abs() < 1e-12);
    }

    #[test]
    fn fourier_gradient_matches_quadratic_form() {
        let df = DensityField::constant(2.0, 65, 0.0, 0.0, 0.0).unwrap();
        let cs = CrossSection::disk(0.01, 0.01).unwrap();
        let rod = Rod::new(df.clone(), Placement::identity(), cs, MassDensity::Uniform(1.0)).unwrap();
        let link = LinkConfig::new(rod, None, Vec3::zeros()).unwrap();
        let ed = [ElasticDensity::new(2.0, 3.0, 0.5, 0.0).unwrap()];
        let map = ParameterMap { harmonics: 2, free_rods: [true, false], free_placement: false };
        let x: Vec<f64> = (0..map.len(&link)).map(|i| 0.1 * ((i * 7 % 5) as f64 - 2.0)).collect();
        let grad = loop_energy_gradient(&link, &ed, &map, &x).unwrap();
        // analytic: dE/dc_{f,j} = a_f * trapezoid(phi_j * series_f)
        let per = map.per_field();
        for f in 0..3 {
            let ser = map.series(&x[f * per..(f + 1) * per], &df);
            for j in 0..per {
                let prod: Vec<f64> = (0..df.len()).map(|i| map.basis(j, df.station(i), 2.0) * ser[i]).collect();
                let exact = ed[0].a[f] * trapezoid(&prod, df.spacing());
                let got = grad[f * per + j];
                assert!((got - exact).abs() <= 1e-5 * exact.abs().max(1e-3), "{f} {j}: {got} vs {exact}");
            }
        }
    }
}
