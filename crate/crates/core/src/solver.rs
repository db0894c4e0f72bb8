//! Alternating minimization: film relaxation at fixed rods, then one
//! projected quasi-Newton (BFGS) step on the rod parameters.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
use num_traits::Float;

use crate::constraints::{admissibility, invariants, local_injectivity_margin, tube_gap, AdmissibilityOptions, ConstraintReport};
use crate::energy::{film_energy, loop_energy, total_energy, ElasticDensity, EnergyReport, ParameterMap, GRADIENT_STEP};
use crate::film::{init_spanning_mesh, relax_area, BoundaryCarrier, RelaxOptions, TriMesh};
use crate::math::segment_segment;
use crate::rod::{FramedCurve, LinkConfig, Tube, CLOSURE_TOL_POSITION, CLOSURE_TOL_TANGENT};
use crate::topology::{hausdorff_distance, make_probe_family, spanning_certificate, InvariantRecord, ProbeCounts};
use crate::{Error, Result};

/// Penalty weights (energy units) and the margins they enforce.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyWeights {
    pub closure: f64,
    pub margin: f64,
    pub cn: f64,
    pub gap: f64,
    /// Local injectivity is penalized above `1 - margin_eps`.
    pub margin_eps: f64,
    /// Tube gap is penalized below `gap_margin (a1 + a2)`.
    pub gap_margin: f64,
}

impl Default for PenaltyWeights {
    fn default() -> Self {
        Self { closure: 1e3, margin: 10.0, cn: 10.0, gap: 10.0, margin_eps: 0.05, gap_margin: 0.5 }
    }
}

impl PenaltyWeights {
    fn scaled(&self, f: f64) -> Self {
        Self { closure: self.closure * f, margin: self.margin * f, cn: self.cn * f, gap: self.gap * f, ..*self }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    pub outer_iters: usize,
    pub film_steps_per_outer: usize,
    pub weights: PenaltyWeights,
    /// Weights are multiplied by this after an outer step that left some
    /// penalty active.
    pub growth: f64,
    /// Largest midline displacement per outer step; the effective bound is
    /// also capped at a quarter of the current tube gap.
    pub clamp: f64,
    /// Stop when an outer step lowers the penalized energy by less than
    /// `tol` relative.
    pub tol: f64,
    /// Recorded with the run; the solver draws no random numbers.
    pub seed: u64,
    pub harmonics: usize,
    /// Keep the strain field of rod 1 fixed.
    pub rod1_rigid: bool,
    /// Keep the placement of rod 2 fixed.
    pub rod2_pinned: bool,
    pub energy_bound: f64,
    /// Boundary stations of the seed film.
    pub film_resolution: usize,
    pub film_step: f64,
    pub targets: Option<InvariantRecord>,
    pub admissibility: AdmissibilityOptions,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            outer_iters: 20,
            film_steps_per_outer: 200,
            weights: PenaltyWeights::default(),
            growth: 1.0,
            clamp: f64::INFINITY,
            tol: 1e-10,
            seed: 0,
            harmonics: 4,
            rod1_rigid: false,
            rod2_pinned: false,
            energy_bound: f64::INFINITY,
            film_resolution: 64,
            film_step: 1e-3,
            targets: None,
            admissibility: AdmissibilityOptions::default(),
        }
    }
}

impl SolveOptions {
    fn validate(&self) -> Result<()> {
        let w = &self.weights;
        if ![w.closure, w.margin, w.cn, w.gap, w.margin_eps, w.gap_margin].iter().all(|x| *x >= 0.0) {
            return Err(Error::InvalidInput("penalty weights must be non-negative"));
        }
        if !(self.growth >= 1.0) || !(self.clamp > 0.0) {
            return Err(Error::InvalidInput("growth must be >= 1 and the clamp positive"));
        }
        Ok(())
    }

    fn parameter_map(&self) -> ParameterMap {
        ParameterMap {
            harmonics: self.harmonics,
            free_rods: [!self.rod1_rigid, true],
            free_placement: !self.rod2_pinned,
        }
    }
}

/// One outer iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    pub energy: EnergyReport,
    pub penalty: f64,
    /// `energy.e_total + penalty`.
    pub penalized: f64,
    pub constraints: ConstraintReport,
    pub invariants: InvariantRecord,
    pub area: f64,
    /// Hausdorff distance between the film vertices of this and the
    /// previous row.
    pub hausdorff_step: f64,
    /// Whether the rod step of this iteration was accepted.
    pub rod_step: bool,
    pub gradient_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SolveTrace {
    pub rows: Vec<TraceRow>,
    pub converged: bool,
}

fn closure_excess(fc: &FramedCurve) -> (f64, f64) {
    let (dr, dw) = fc.closure_residual();
    ((dr - CLOSURE_TOL_POSITION * fc.length()).max(0.0) / fc.length(), (dw - CLOSURE_TOL_TANGENT).max(0.0))
}

/// Smallest distance between midline segments that are at least `4 a`
/// apart in arc length along the loop. The seam counts as adjacent even
/// when the loop is slightly open.
fn self_clearance(fc: &FramedCurve, a: f64) -> f64 {
    let pts = fc.points();
    let n = pts.len() - 1;
    let h = fc.spacing();
    let skip = Float::ceil(4.0 * a / h) as usize + 1;
    let mut best = f64::INFINITY;
    for i in 0..n {
        for j in i + skip..n {
            if n - (j - i) < skip {
                continue;
            }
            best = best.min(segment_segment(&pts[i], &pts[i + 1], &pts[j], &pts[j + 1]).0);
        }
    }
    best
}

fn penalty_terms(link: &LinkConfig, tubes: &[Tube], w: &PenaltyWeights) -> Result<f64> {
    let mut p = 0.0;
    for (rod, t) in link.rods().zip(tubes) {
        let (er, ew) = closure_excess(&t.curve);
        p += w.closure * (er * er + ew * ew);
        let g = local_injectivity_margin(&rod.density, &rod.section);
        let over = (g - (1.0 - w.margin_eps)).max(0.0);
        p += w.margin * over * over;
        let a = t.radius();
        if w.cn > 0.0 && self_clearance(&t.curve, a) < 2.0 * a {
            let r = crate::constraints::ciarlet_necas_residual(&t.curve, &t.section, 0.25 * a)?;
            let v = (-r.residual - r.tolerance).max(0.0) / r.lhs;
            p += w.cn * v * v;
        }
    }
    if let [t1, t2] = tubes {
        let sum = t1.radius() + t2.radius();
        let short = (w.gap_margin * sum - tube_gap(t1, t2)).max(0.0) / sum;
        p += w.gap * short * short;
    }
    Ok(p)
}

/// Weighted quadratic penalties on closure, local injectivity, global
/// injectivity and tube contact; zero when every constraint holds with its
/// margin.
pub fn penalty_energy(link: &LinkConfig, weights: &PenaltyWeights) -> Result<f64> {
    let tubes = link.tubes()?;
    penalty_terms(link, &tubes, weights)
}

/// Closure residuals of the rods whose strain fields are free: position
/// gap over length, then tangent gap.
fn closure_vector(tubes: &[Tube], map: &ParameterMap) -> Vec<f64> {
    let mut c = Vec::new();
    for (i, t) in tubes.iter().enumerate() {
        if !map.free_rods[i] {
            continue;
        }
        let p = t.curve.points();
        let f = t.curve.frames();
        let dr = (p[p.len() - 1] - p[0]) / t.length();
        let dw = f[f.len() - 1].w - f[0].w;
        c.extend_from_slice(&[dr.x, dr.y, dr.z, dw.x, dw.y, dw.z]);
    }
    c
}

/// Singular values below this fraction of the largest are dropped: the
/// tangent gap has only two independent components, so the closure
/// Jacobian carries one direction of pure finite-difference noise.
const PINV_RCOND: f64 = 1e-7;

fn pseudo_inverse(j: &DMatrix<f64>) -> DMatrix<f64> {
    if j.nrows() == 0 {
        return DMatrix::zeros(j.ncols(), 0);
    }
    let svd = j.clone().svd(true, true);
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    svd.pseudo_inverse(PINV_RCOND * smax.max(1e-300)).unwrap_or_else(|_| DMatrix::zeros(j.ncols(), j.nrows()))
}

fn closure_jacobian(link: &LinkConfig, map: &ParameterMap, n: usize) -> Result<DMatrix<f64>> {
    let cols = (0..n)
        .map(|j| {
            let mut xp = alloc::vec![0.0; n];
            xp[j] = GRADIENT_STEP;
            let mut xm = alloc::vec![0.0; n];
            xm[j] = -GRADIENT_STEP;
            let cp = closure_vector(&map.apply(link, &xp)?.tubes()?, map);
            let cm = closure_vector(&map.apply(link, &xm)?.tubes()?, map);
            Ok(cp.iter().zip(&cm).map(|(a, b)| (a - b) / (2.0 * GRADIENT_STEP)).collect::<Vec<f64>>())
        })
        .collect::<Result<Vec<_>>>()?;
    let m = cols.first().map_or(0, Vec::len);
    Ok(DMatrix::from_fn(m, n, |r, c| cols[c][r]))
}

/// Gauss-Newton correction of the strain fields until every rod closes,
/// using the Fourier parameters of `harmonics` harmonics.
pub fn close_loops(link: &LinkConfig, harmonics: usize, rod1_rigid: bool) -> Result<LinkConfig> {
    let map = ParameterMap { harmonics, free_rods: [!rod1_rigid, true], free_placement: false };
    let n = map.len(link);
    let mut cur = link.clone();
    for _ in 0..20 {
        let tubes = cur.tubes()?;
        if tubes.iter().all(Tube::is_closed) {
            return Ok(cur);
        }
        let c = DVector::from_vec(closure_vector(&tubes, &map));
        let jac = closure_jacobian(&cur, &map, n)?;
        let dx = -(pseudo_inverse(&jac) * c);
        cur = map.apply(&cur, dx.as_slice())?;
    }
    let tubes = cur.tubes()?;
    match tubes.iter().find(|t| !t.is_closed()) {
        None => Ok(cur),
        Some(t) => {
            let (p, tn) = t.curve.closure_residual();
            Err(Error::NotClosed { position: p, tangent: tn })
        }
    }
}

struct Problem<'a> {
    ed: &'a [ElasticDensity],
    sigma: f64,
    map: ParameterMap,
    weights: PenaltyWeights,
    with_film: bool,
    carrier: BoundaryCarrier,
    /// Boundary stations of a replacement seed film.
    resolution: usize,
}

struct Evaluated {
    link: LinkConfig,
    tubes: Vec<Tube>,
    mesh: TriMesh,
    phi: f64,
}

impl Problem<'_> {
    fn evaluate(&self, base: &LinkConfig, mesh: &TriMesh, x: &[f64]) -> Result<Evaluated> {
        let link = self.map.apply(base, x)?;
        let tubes = link.tubes()?;
        self.complete(link, tubes, mesh)
    }

    fn complete(&self, link: LinkConfig, tubes: Vec<Tube>, mesh: &TriMesh) -> Result<Evaluated> {
        let mut phi = loop_energy(&link, self.ed)? + penalty_terms(&link, &tubes, &self.weights)?;
        let m = if self.with_film { self.carrier.carry(mesh, &tubes) } else { mesh.clone() };
        if self.with_film {
            phi += film_energy(&m, self.sigma);
        }
        Ok(Evaluated { link, tubes, mesh: m, phi })
    }

    /// Gradient of the penalized energy and closure Jacobian at `x = 0`.
    fn linearize(&self, base: &LinkConfig, mesh: &TriMesh, n: usize) -> Result<(DVector<f64>, DMatrix<f64>)> {
        let column = |j: usize| -> Result<(f64, Vec<f64>)> {
            let mut xp = alloc::vec![0.0; n];
            xp[j] = GRADIENT_STEP;
            let mut xm = alloc::vec![0.0; n];
            xm[j] = -GRADIENT_STEP;
            let (ep, em) = (self.evaluate(base, mesh, &xp)?, self.evaluate(base, mesh, &xm)?);
            if !ep.phi.is_finite() || !em.phi.is_finite() {
                return Err(Error::GradientUndefined(j));
            }
            let (cp, cm) = (closure_vector(&ep.tubes, &self.map), closure_vector(&em.tubes, &self.map));
            let dc = cp.iter().zip(&cm).map(|(a, b)| (a - b) / (2.0 * GRADIENT_STEP)).collect();
            Ok(((ep.phi - em.phi) / (2.0 * GRADIENT_STEP), dc))
        };
        #[cfg(feature = "parallel")]
        let cols: Vec<(f64, Vec<f64>)> = {
            use rayon::prelude::*;
            (0..n).into_par_iter().map(column).collect::<Result<_>>()?
        };
        #[cfg(not(feature = "parallel"))]
        let cols: Vec<(f64, Vec<f64>)> = (0..n).map(column).collect::<Result<_>>()?;
        let m = cols.first().map_or(0, |c| c.1.len());
        let g = DVector::from_fn(n, |j, _| cols[j].0);
        let jac = DMatrix::from_fn(m, n, |r, c| cols[c].1[r]);
        Ok((g, jac))
    }
}

fn max_displacement(a: &[Tube], b: &[Tube]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| x.curve.points().iter().zip(y.curve.points()).map(|(p, q)| (p - q).norm()))
        .fold(0.0, f64::max)
}

/// Fraction of the closure tolerance a step may use; the rest keeps the
/// stiff strain energy from leaking through an almost-closed loop.
const CLOSURE_SLACK: f64 = 1e-3;

fn closure_ok(tubes: &[Tube], reference: &[Tube]) -> bool {
    tubes.iter().zip(reference).all(|(t, r)| {
        let (p, w) = t.curve.closure_residual();
        let (p0, w0) = r.curve.closure_residual();
        p <= (CLOSURE_SLACK * CLOSURE_TOL_POSITION * t.length()).max(p0 * (1.0 + 1e-6))
            && w <= (CLOSURE_SLACK * CLOSURE_TOL_TANGENT).max(w0 * (1.0 + 1e-6))
    })
}

const MAX_LINE_SEARCH: usize = 30;
/// Film vertices within this many mean edge lengths of the boundary move
/// with the rods.
const CARRY_REACH: f64 = 4.0;
const CLOSURE_CORRECTIONS: usize = 4;

struct Step {
    eval: Evaluated,
    alpha: f64,
}

/// Inverse-Hessian estimate carried between outer steps.
#[derive(Default)]
struct QuasiNewton {
    h: Option<DMatrix<f64>>,
    /// Gradient and accepted parameter step of the previous outer step.
    last: Option<(DVector<f64>, DVector<f64>)>,
}

impl QuasiNewton {
    fn update(&mut self, g: &DVector<f64>) {
        let Some((g0, s)) = self.last.take() else { return };
        if g0.len() != g.len() {
            self.h = None;
            return;
        }
        let y = g - g0;
        let sy = s.dot(&y);
        if !(sy > 1e-12 * s.norm() * y.norm()) {
            return;
        }
        let n = g.len();
        let h = self.h.take().unwrap_or_else(|| DMatrix::identity(n, n) * (sy / y.dot(&y)));
        let rho = 1.0 / sy;
        let hy = &h * &y;
        let yhy = y.dot(&hy);
        let next = h - (&hy * s.transpose() + &s * hy.transpose()) * rho + (&s * s.transpose()) * (rho * rho * yhy + rho);
        self.h = Some(next);
    }

    fn reset(&mut self) {
        self.h = None;
        self.last = None;
    }
}

/// Projected quasi-Newton step with closure correction, step clamp and
/// invariant rejection. A carried film that no longer passes the spanning
/// certificate is replaced by a fresh seed film when that keeps the energy
/// decrease, and the step is rejected otherwise. Returns `None` if no decrease was found.
#[allow(clippy::too_many_arguments)]
fn rod_step(
    pb: &Problem,
    link: &LinkConfig,
    tubes: &[Tube],
    mesh: &TriMesh,
    phi0: f64,
    targets: &InvariantRecord,
    clamp: f64,
    alpha0: f64,
    offset: f64,
    qn: &mut QuasiNewton,
) -> Result<(Option<Step>, f64)> {
    let n = pb.map.len(link);
    if n == 0 {
        return Ok((None, 0.0));
    }
    let (g, jac) = pb.linearize(link, mesh, n)?;
    let pinv = pseudo_inverse(&jac);
    let proj = DMatrix::identity(n, n) - &pinv * &jac;
    let pg = &proj * &g;
    let gnorm = pg.norm();
    if !(gnorm > 0.0) {
        return Ok((None, gnorm));
    }
    qn.update(&g);
    let mut d = match &qn.h {
        Some(h) => -(&proj * (h * &pg)),
        None => -pg.clone(),
    };
    let mut alpha = if qn.h.is_some() { 1.0 } else { alpha0 };
    if !(g.dot(&d) < 0.0) {
        qn.h = None;
        d = -pg.clone();
        alpha = alpha0;
    }
    let gap_limit = match tubes {
        [t1, t2] => 0.25 * tube_gap(t1, t2),
        [t] => 0.25 * t.radius(),
        _ => f64::INFINITY,
    };
    let ls = LineSearch { pb, link, tubes, mesh, phi0, targets, pinv: &pinv, limit: clamp.min(gap_limit), offset };
    let mut found = ls.run(&g, &d, alpha);
    if found.as_ref().is_ok_and(Option::is_none) && qn.h.is_some() {
        qn.h = None;
        found = ls.run(&g, &(-pg), alpha0);
    }
    match found? {
        Some((step, x)) => {
            qn.last = Some((g, DVector::from_vec(x)));
            Ok((Some(step), gnorm))
        }
        None => {
            qn.reset();
            Ok((None, gnorm))
        }
    }
}

struct LineSearch<'a> {
    pb: &'a Problem<'a>,
    link: &'a LinkConfig,
    tubes: &'a [Tube],
    mesh: &'a TriMesh,
    phi0: f64,
    targets: &'a InvariantRecord,
    pinv: &'a DMatrix<f64>,
    limit: f64,
    offset: f64,
}

impl LineSearch<'_> {
    /// Parameters `alpha d` after Gauss-Newton closure corrections; `None`
    /// if the corrections stop converging.
    #[allow(clippy::type_complexity)]
    fn corrected(&self, d: &DVector<f64>, alpha: f64) -> Result<Option<(Vec<f64>, LinkConfig, Vec<Tube>)>> {
        let pb = self.pb;
        let mut x: Vec<f64> = d.iter().map(|v| v * alpha).collect();
        let mut link_x = pb.map.apply(self.link, &x)?;
        let mut tubes_x = link_x.tubes()?;
        let mut c = DVector::from_vec(closure_vector(&tubes_x, &pb.map));
        for _ in 0..CLOSURE_CORRECTIONS {
            if closure_ok(&tubes_x, self.tubes) {
                break;
            }
            let dx = self.pinv * &c;
            let trial: Vec<f64> = x.iter().zip(dx.iter()).map(|(xi, di)| xi - di).collect();
            let l2 = pb.map.apply(self.link, &trial)?;
            let t2 = l2.tubes()?;
            let c2 = DVector::from_vec(closure_vector(&t2, &pb.map));
            if !(c2.norm() < c.norm()) {
                return Ok(None);
            }
            (x, link_x, tubes_x, c) = (trial, l2, t2, c2);
        }
        Ok(Some((x, link_x, tubes_x)))
    }

    /// Backtracking along `d` with closure corrections; returns the step
    /// and the corrected parameters.
    fn run(&self, g: &DVector<f64>, d: &DVector<f64>, mut alpha: f64) -> Result<Option<(Step, Vec<f64>)>> {
        let (pb, tubes) = (self.pb, self.tubes);
        let slope = g.dot(d);
        for _ in 0..MAX_LINE_SEARCH {
            let Ok(Some((x, link_x, tubes_x))) = self.corrected(d, alpha) else {
                alpha *= 0.5;
                continue;
            };
            let disp = max_displacement(&tubes_x, tubes);
            if disp > self.limit {
                alpha *= (0.9 * self.limit / disp).max(0.1);
                continue;
            }
            let Ok(ev) = pb.complete(link_x, tubes_x, self.mesh) else {
                alpha *= 0.5;
                continue;
            };
            let decreases = |phi: f64| phi.is_finite() && phi < self.phi0 + 1e-4 * alpha * slope.min(0.0);
            if !decreases(ev.phi) || !closure_ok(&ev.tubes, tubes) {
                alpha *= 0.5;
                continue;
            }
            if let [t1, t2] = ev.tubes.as_slice() {
                if tube_gap(t1, t2) <= 0.0 {
                    alpha *= 0.5;
                    continue;
                }
            }
            if !matches!(invariants(&ev.tubes, self.offset), Ok(inv) if inv == *self.targets) {
                alpha *= 0.5;
                continue;
            }
            // the carried film must still span the moved rods; otherwise a
            // fresh seed film may replace it if the energy still decreases
            let mut ev = ev;
            if pb.with_film {
                let Ok(probes) = make_probe_family(&ev.tubes, ProbeCounts::default()) else {
                    alpha *= 0.5;
                    continue;
                };
                if !spanning_certificate(&ev.mesh, &probes).pass {
                    let Ok(seed) = init_spanning_mesh(&ev.tubes, pb.resolution) else {
                        alpha *= 0.5;
                        continue;
                    };
                    let phi = ev.phi - film_energy(&ev.mesh, pb.sigma) + film_energy(&seed, pb.sigma);
                    if !decreases(phi) {
                        alpha *= 0.5;
                        continue;
                    }
                    ev.phi = phi;
                    ev.mesh = seed;
                }
            }
            return Ok(Some((Step { eval: ev, alpha }, x)));
        }
        Ok(None)
    }
}

fn invariant_offset(opts: &SolveOptions) -> f64 {
    opts.admissibility.offset_fraction
}

#[allow(clippy::too_many_arguments)]
fn record(
    iter: usize,
    link: &LinkConfig,
    ed: &[ElasticDensity],
    mesh: &TriMesh,
    sigma: f64,
    weights: &PenaltyWeights,
    targets: &InvariantRecord,
    opts: &SolveOptions,
    prev: Option<&TriMesh>,
    rod_step: bool,
    gradient_norm: f64,
) -> Result<TraceRow> {
    let energy = total_energy(link, ed, mesh, sigma)?;
    let penalty = penalty_energy(link, weights)?;
    let constraints = admissibility(link, ed, targets, opts.energy_bound, &opts.admissibility)?;
    Ok(TraceRow {
        iter,
        energy,
        penalty,
        penalized: energy.e_total + penalty,
        invariants: constraints.invariants,
        constraints,
        area: mesh.area(),
        hausdorff_step: prev.map_or(0.0, |p| hausdorff_distance(&p.vertices, &mesh.vertices)),
        rod_step,
        gradient_norm,
    })
}

fn run(
    link: &LinkConfig,
    ed: &[ElasticDensity],
    sigma: f64,
    opts: &SolveOptions,
    seed_mesh: Option<&TriMesh>,
    with_film: bool,
) -> Result<(LinkConfig, TriMesh, SolveTrace)> {
    opts.validate()?;
    if ed.len() != link.rod_count() {
        return Err(Error::InvalidInput("one elastic density per rod required"));
    }
    let offset = invariant_offset(opts);
    let tubes0 = link.tubes()?;
    let found = invariants(&tubes0, offset).map_err(|_| Error::InitInadmissible("invariants undefined"))?;
    let targets = opts.targets.unwrap_or(found);
    let report = admissibility(link, ed, &targets, opts.energy_bound, &opts.admissibility)?;
    if !report.admissible {
        return Err(Error::InitInadmissible("initial configuration violates a constraint"));
    }
    let mut mesh = if !with_film {
        TriMesh::default()
    } else if let Some(m) = seed_mesh {
        m.clone()
    } else {
        init_spanning_mesh(&tubes0, opts.film_resolution)?
    };
    let mut weights = opts.weights;
    let pb_map = opts.parameter_map();
    let mut cur = link.clone();
    let mut tubes = tubes0;
    let mut trace = SolveTrace::default();
    trace.rows.push(record(0, &cur, ed, &mesh, sigma, &weights, &targets, opts, None, false, f64::NAN)?);
    let mut alpha = 1.0;
    let mut qn = QuasiNewton::default();
    for iter in 1..=opts.outer_iters {
        let prev_mesh = mesh.clone();
        if with_film {
            let probes = make_probe_family(&tubes, ProbeCounts::default())?;
            let clearance = probes
                .loops
                .iter()
                .map(|lp| {
                    tubes
                        .iter()
                        .map(|t| {
                            let mid = crate::topology::ClosedPolyline::new(t.curve.loop_points().to_vec());
                            mid.map_or(0.0, |m| lp.min_distance(&m) - t.radius())
                        })
                        .fold(f64::INFINITY, f64::min)
                })
                .fold(f64::INFINITY, f64::min);
            let ropts = RelaxOptions {
                steps: opts.film_steps_per_outer,
                step_size: opts.film_step,
                max_displacement: clearance.max(1e-12),
                ..RelaxOptions::default()
            };
            let relaxed = relax_area(&mesh, &tubes, &ropts)?;
            if spanning_certificate(&relaxed.mesh, &probes).pass {
                mesh = relaxed.mesh;
            }
        }
        let carrier = if with_film { BoundaryCarrier::new(&mesh, CARRY_REACH * mesh.mean_edge()) } else { BoundaryCarrier::default() };
        let pb = Problem { ed, sigma, map: pb_map, weights, with_film, carrier, resolution: opts.film_resolution };
        let phi0 = pb.evaluate(&cur, &mesh, &alloc::vec![0.0; pb_map.len(&cur)])?.phi;
        let (step, gnorm) = rod_step(&pb, &cur, &tubes, &mesh, phi0, &targets, opts.clamp, 2.0 * alpha, offset, &mut qn)?;
        let accepted = step.is_some();
        let mut gain = 0.0;
        if let Some(s) = step {
            gain = phi0 - s.eval.phi;
            alpha = s.alpha;
            cur = s.eval.link;
            tubes = s.eval.tubes;
            mesh = s.eval.mesh;
        }
        let row = record(iter, &cur, ed, &mesh, sigma, &weights, &targets, opts, Some(&prev_mesh), accepted, gnorm)?;
        if row.invariants != targets {
            trace.rows.push(row);
            return Err(Error::InvariantBroken("linking changed during the solve"));
        }
        let active = row.penalty > 0.0;
        let film_gain = trace.rows.last().map_or(0.0, |r| r.penalized - row.penalized) - gain;
        trace.rows.push(row);
        if !accepted || (gain + film_gain.max(0.0)) <= opts.tol * phi0.abs().max(1.0) {
            trace.converged = true;
            break;
        }
        if active && opts.growth > 1.0 {
            weights = weights.scaled(opts.growth);
            qn.reset();
        }
    }
    Ok((cur, mesh, trace))
}

/// Minimizes elastic + gravity + film energy over admissible configurations
/// with fixed invariants. The film is seeded by `init_spanning_mesh` unless
/// `seed_mesh` is given.
pub fn solve_kirchhoff_plateau(
    link: &LinkConfig,
    ed: &[ElasticDensity],
    sigma: f64,
    opts: &SolveOptions,
    seed_mesh: Option<&TriMesh>,
) -> Result<(LinkConfig, TriMesh, SolveTrace)> {
    if !(sigma >= 0.0) {
        return Err(Error::InvalidInput("surface tension must be non-negative"));
    }
    run(link, ed, sigma, opts, seed_mesh, true)
}

/// The same outer loop without a film.
pub fn minimize_loop_only(link: &LinkConfig, ed: &[ElasticDensity], opts: &SolveOptions) -> Result<(LinkConfig, SolveTrace)> {
    let (l, _, t) = run(link, ed, 0.0, opts, None, false)?;
    Ok((l, t))
}

/// Largest node displacement between two configurations with the same grids.
pub fn geometry_change(a: &LinkConfig, b: &LinkConfig) -> Result<f64> {
    Ok(max_displacement(&a.tubes()?, &b.tubes()?))
}
