//! Admissibility checks: local and global non-interpenetration, disjoint
//! tubes, closure, fixed invariants and the energy bound.

use alloc::vec::Vec;
use hashbrown::HashMap;
use num_traits::Float;

use crate::energy::{loop_energy, ElasticDensity};
use crate::math::{point_segment, segment_segment, Vec3, PI};
use crate::rod::{CrossSection, DensityField, FramedCurve, LinkConfig, Tube};
use crate::topology::{rounded_linking_number, self_linking, ClosedPolyline, InvariantRecord};
use crate::{Error, Result};

/// Largest `a |(k1, k2)|` over the grid nodes. The section map is locally
/// injective iff this stays below 1.
pub fn local_injectivity_margin(df: &DensityField, cs: &CrossSection) -> f64 {
    let a = cs.radius();
    (0..df.len())
        .map(|i| a * Float::hypot(df.k1()[i], df.k2()[i]))
        .fold(0.0, f64::max)
}

/// Outcome of the global injectivity check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CnResidual {
    /// Integral of the Jacobian of the tube map: `pi a^2 L` for a disk.
    pub lhs: f64,
    /// Volume of the tube image from voxel occupancy.
    pub image_volume: f64,
    /// `image_volume - lhs`; overlapping tubes make it negative.
    pub residual: f64,
    /// Three voxel layers over the tube surface.
    pub tolerance: f64,
}

impl CnResidual {
    pub fn holds(&self) -> bool {
        self.residual >= -self.tolerance
    }
}

type Key = [i64; 3];

/// Compares the integral of the tube-map Jacobian with the volume of the
/// tube image. The image is the set of points within `a` of the midline
/// (excluding the end caps of open rods); its volume is counted on a voxel
/// grid of spacing `voxel`.
pub fn ciarlet_necas_residual(fc: &FramedCurve, cs: &CrossSection, voxel: f64) -> Result<CnResidual> {
    let a = cs.radius();
    if !(voxel > 0.0) || voxel > a / 4.0 {
        return Err(Error::ResolutionError { voxel, radius: a });
    }
    let l = fc.length();
    let closed = fc.is_closed();
    // dense midline samples so chord sagitta stays well below the voxel
    let h = fc.spacing();
    let sub = Float::ceil(h / (0.25 * a)).max(1.0) as usize;
    let count = (fc.len() - 1) * sub;
    let mut pts: Vec<Vec3> = (0..=count).map(|k| fc.state_at(l * k as f64 / count as f64).0).collect();
    if closed {
        pts[count] = pts[0];
    }
    let step = l / count as f64;
    if pts.windows(2).any(|w| !((w[1] - w[0]).norm() <= 1.01 * step)) {
        return Err(Error::InvalidInput("midline samples are not arc-length spaced"));
    }
    let nseg = pts.len() - 1;
    let cell = 2.0 * a;
    let key = |p: &Vec3, size: f64| -> Key { [0, 1, 2].map(|k| Float::floor(p[k] / size) as i64) };
    let mut grid: HashMap<Key, Vec<u32>> = HashMap::new();
    let bounds = |i: usize| {
        let (p, q) = (pts[i], pts[i + 1]);
        (p.inf(&q).add_scalar(-a), p.sup(&q).add_scalar(a))
    };
    for i in 0..nseg {
        let (lo, hi) = bounds(i);
        let (c0, c1) = (key(&lo, cell), key(&hi, cell));
        for x in c0[0]..=c1[0] {
            for y in c0[1]..=c1[1] {
                for z in c0[2]..=c1[2] {
                    grid.entry([x, y, z]).or_default().push(i as u32);
                }
            }
        }
    }
    let (first_w, last_w) = (fc.frames()[0].w, fc.frames()[fc.len() - 1].w);
    let covers = |i: usize, p: &Vec3| -> bool {
        let (d, t) = point_segment(p, &pts[i], &pts[i + 1]);
        if d > a {
            return false;
        }
        if !closed {
            if i == 0 && t == 0.0 && (p - pts[0]).dot(&first_w) < 0.0 {
                return false;
            }
            if i == nseg - 1 && t == 1.0 && (p - pts[nseg]).dot(&last_w) > 0.0 {
                return false;
            }
        }
        true
    };
    // each voxel centre is counted by the lowest-index segment covering it;
    // cell lists are in increasing segment order
    let count_segment = |i: usize| -> usize {
        let (lo, hi) = bounds(i);
        let (v0, v1) = (key(&lo, voxel), key(&hi, voxel));
        let mut n = 0;
        for x in v0[0]..=v1[0] {
            for y in v0[1]..=v1[1] {
                for z in v0[2]..=v1[2] {
                    let p = Vec3::new((x as f64 + 0.5) * voxel, (y as f64 + 0.5) * voxel, (z as f64 + 0.5) * voxel);
                    if !covers(i, &p) {
                        continue;
                    }
                    let owner = grid.get(&key(&p, cell)).and_then(|segs| segs.iter().map(|&j| j as usize).find(|&j| covers(j, &p)));
                    if owner == Some(i) {
                        n += 1;
                    }
                }
            }
        }
        n
    };
    #[cfg(feature = "parallel")]
    let occupied: usize = {
        use rayon::prelude::*;
        (0..nseg).into_par_iter().map(count_segment).sum()
    };
    #[cfg(not(feature = "parallel"))]
    let occupied: usize = (0..nseg).map(count_segment).sum();
    let image_volume = occupied as f64 * voxel * voxel * voxel;
    let lhs = PI * a * a * l;
    let mut surface = 2.0 * PI * a * l;
    if !closed {
        surface += 2.0 * PI * a * a;
    }
    Ok(CnResidual { lhs, image_volume, residual: image_volume - lhs, tolerance: 3.0 * surface * voxel })
}

fn polyline(fc: &FramedCurve) -> &[Vec3] {
    if fc.is_closed() {
        fc.loop_points()
    } else {
        fc.points()
    }
}

fn segments(pts: &[Vec3], closed: bool) -> impl Iterator<Item = (Vec3, Vec3)> + '_ {
    let n = pts.len();
    let count = if closed { n } else { n - 1 };
    (0..count).map(move |i| (pts[i], pts[(i + 1) % n]))
}

/// Smallest midline distance minus the sum of the section radii. The tubes
/// are disjoint iff the result is positive.
pub fn tube_disjointness(fc1: &FramedCurve, fc2: &FramedCurve, a1: f64, a2: f64) -> f64 {
    let (p, q) = (polyline(fc1), polyline(fc2));
    let mut best = f64::INFINITY;
    for (a0, a1_) in segments(p, fc1.is_closed()) {
        for (b0, b1) in segments(q, fc2.is_closed()) {
            best = best.min(segment_segment(&a0, &a1_, &b0, &b1).0);
        }
    }
    best - (a1 + a2)
}

/// [`tube_disjointness`] for realized tubes.
pub fn tube_gap(t1: &Tube, t2: &Tube) -> f64 {
    tube_disjointness(&t1.curve, &t2.curve, t1.radius(), t2.radius())
}

/// Linking number of the midlines and self-linking of each rod, the latter
/// with push-off distance `offset_fraction` times the section radius.
pub fn invariants(tubes: &[Tube], offset_fraction: f64) -> Result<InvariantRecord> {
    let mut rec = InvariantRecord::default();
    for (i, t) in tubes.iter().enumerate() {
        if !t.is_closed() {
            let (p, tn) = t.curve.closure_residual();
            return Err(Error::NotClosed { position: p, tangent: tn });
        }
        let n = self_linking(&t.curve, offset_fraction * t.radius())?;
        if i == 0 {
            rec.n1 = n;
        } else {
            rec.n2 = n;
        }
    }
    if let [t1, t2] = tubes {
        let c1 = ClosedPolyline::new(t1.curve.loop_points().to_vec())?;
        let c2 = ClosedPolyline::new(t2.curve.loop_points().to_vec())?;
        rec.lk12 = rounded_linking_number(&c1, &c2)?;
    }
    Ok(rec)
}

/// Which check failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Violation {
    LocalInjectivity { rod: usize },
    Interpenetration { rod: usize },
    TubeContact,
    Closure { rod: usize },
    Invariants,
    EnergyBound,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintReport {
    /// Largest local-injectivity value over both rods (must stay below 1).
    pub local_margin: f64,
    pub cn: Vec<CnResidual>,
    /// Infinite for a single rod.
    pub min_tube_gap: f64,
    /// Position and tangent closure residual per rod.
    pub closure: Vec<(f64, f64)>,
    pub invariants: InvariantRecord,
    pub targets: InvariantRecord,
    pub loop_energy: f64,
    pub energy_bound: f64,
    pub violations: Vec<Violation>,
    pub admissible: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmissibilityOptions {
    /// Voxel size as a fraction of the section radius (at most 1/4).
    pub voxel_fraction: f64,
    /// Push-off distance for self-linking as a fraction of the radius.
    pub offset_fraction: f64,
}

impl Default for AdmissibilityOptions {
    fn default() -> Self {
        Self { voxel_fraction: 0.25, offset_fraction: 0.5 }
    }
}

/// Runs every admissibility check on a configuration.
pub fn admissibility(
    link: &LinkConfig,
    ed: &[ElasticDensity],
    targets: &InvariantRecord,
    energy_bound: f64,
    opts: &AdmissibilityOptions,
) -> Result<ConstraintReport> {
    if ed.len() != link.rod_count() {
        return Err(Error::InvalidInput("one elastic density per rod required"));
    }
    let tubes = link.tubes()?;
    let mut violations = Vec::new();
    let mut local_margin = 0.0f64;
    let mut cn = Vec::new();
    let mut closure = Vec::new();
    for (i, (rod, t)) in link.rods().zip(&tubes).enumerate() {
        let g = local_injectivity_margin(&rod.density, &rod.section);
        local_margin = local_margin.max(g);
        if g >= 1.0 {
            violations.push(Violation::LocalInjectivity { rod: i });
        }
        let r = ciarlet_necas_residual(&t.curve, &t.section, opts.voxel_fraction * t.radius())?;
        if !r.holds() {
            violations.push(Violation::Interpenetration { rod: i });
        }
        cn.push(r);
        closure.push(t.curve.closure_residual());
        if !t.is_closed() {
            violations.push(Violation::Closure { rod: i });
        }
    }
    let min_tube_gap = match tubes.as_slice() {
        [t1, t2] => tube_gap(t1, t2),
        _ => f64::INFINITY,
    };
    if min_tube_gap <= 0.0 {
        violations.push(Violation::TubeContact);
    }
    let inv = if violations.iter().any(|v| matches!(v, Violation::Closure { .. })) {
        None
    } else {
        Some(invariants(&tubes, opts.offset_fraction)?)
    };
    if inv.as_ref() != Some(targets) {
        violations.push(Violation::Invariants);
    }
    let e = loop_energy(link, ed)?;
    if !(e < energy_bound) {
        violations.push(Violation::EnergyBound);
    }
    Ok(ConstraintReport {
        local_margin,
        cn,
        min_tube_gap,
        closure,
        invariants: inv.unwrap_or_default(),
        targets: *targets,
        loop_energy: e,
        energy_bound,
        admissible: violations.is_empty(),
        violations,
    })
}
