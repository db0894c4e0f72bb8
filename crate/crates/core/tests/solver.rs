mod common;

use kplateau_core::constraints::tube_gap;
use kplateau_core::energy::{loop_energy, ElasticDensity};
use kplateau_core::film::{init_spanning_mesh, relax_area, RelaxOptions};
use kplateau_core::math::vec3;
use kplateau_core::rod::{CrossSection, DensityField, LinkConfig, MassDensity, Rod};
use kplateau_core::solver::{close_loops, geometry_change, minimize_loop_only, solve_kirchhoff_plateau, PenaltyWeights, SolveOptions, SolveTrace};
use kplateau_core::Error;

use common::{frame, hopf, isotropic, ring_rod, single_ring};

fn assert_monotone(trace: &SolveTrace) {
    for w in trace.rows.windows(2) {
        if w[1].rod_step {
            let (a, b) = (w[0].penalized, w[1].penalized);
            assert!(b <= a + 1e-12 * a.abs().max(1.0), "row {}: {a} -> {b}", w[1].iter);
        }
    }
}

#[test]
fn rigid_limit_matches_fixed_boundary_relaxation() {
    let link = hopf(0.05, 129);
    let ed = [isotropic(1e6), isotropic(1e6)];
    let opts = SolveOptions { outer_iters: 6, film_steps_per_outer: 300, rod2_pinned: true, ..Default::default() };
    let (out, mesh, trace) = solve_kirchhoff_plateau(&link, &ed, 1.0, &opts, None).unwrap();
    assert!(geometry_change(&link, &out).unwrap() < 1e-4);
    assert!(trace.rows.iter().all(|r| r.invariants.lk12 == 1));
    assert_monotone(&trace);
    let tubes = link.tubes().unwrap();
    let seed = init_spanning_mesh(&tubes, 64).unwrap();
    let steps = opts.outer_iters * opts.film_steps_per_outer;
    let fixed = relax_area(&seed, &tubes, &RelaxOptions { steps, ..Default::default() }).unwrap();
    let a = *fixed.areas.last().unwrap();
    assert!((mesh.area() - a).abs() / a < 1e-3, "{} vs {a}", mesh.area());
}

#[test]
fn clamped_circle_is_stationary() {
    let link = single_ring(0.05, 257);
    let ed = [isotropic(1.0)];
    let opts = SolveOptions { outer_iters: 1, ..Default::default() };
    let (_, trace) = minimize_loop_only(&link, &ed, &opts).unwrap();
    let g = trace.rows[1].gradient_norm;
    assert!(g < 1e-6, "{g}");
}

fn hanging_ring(g0: f64) -> LinkConfig {
    let rod = ring_rod(1.0, 0.05, 129, vec3(1.0, 0.0, 0.0), vec3(-1.0, 0.0, 0.0), vec3(0.0, 0.0, 1.0));
    LinkConfig::new(rod, None, vec3(0.0, 0.0, -g0)).unwrap()
}

#[test]
fn weightless_film_reduces_to_loop_minimization() {
    let link = hanging_ring(1.0);
    let ed = [ElasticDensity::new(1.0, 1.0, 1.0, 0.0).unwrap()];
    let opts = SolveOptions { outer_iters: 8, film_steps_per_outer: 20, ..Default::default() };
    let (full, _, trace) = solve_kirchhoff_plateau(&link, &ed, 0.0, &opts, None).unwrap();
    let (only, trace_only) = minimize_loop_only(&link, &ed, &opts).unwrap();
    let e0 = loop_energy(&link, &ed).unwrap();
    let e1 = loop_energy(&full, &ed).unwrap();
    let e2 = loop_energy(&only, &ed).unwrap();
    assert!(e1 < e0 && e2 < e0, "{e0} {e1} {e2}");
    assert!((e1 - e2).abs() / e2.abs() < 1e-4, "{e1} vs {e2}");
    assert_monotone(&trace);
    assert_monotone(&trace_only);
    let gravity: Vec<f64> = trace_only.rows.iter().map(|r| r.energy.e_g1).collect();
    assert!(gravity.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{gravity:?}");
}

#[test]
fn energy_bound_is_checked_at_start() {
    let link = hopf(0.05, 129);
    let ed = [isotropic(1.0), isotropic(1.0)];
    let opts = SolveOptions { energy_bound: 1.0, ..Default::default() };
    assert!(matches!(minimize_loop_only(&link, &ed, &opts), Err(Error::InitInadmissible(_))));
    assert!(matches!(solve_kirchhoff_plateau(&link, &ed, 1.0, &opts, None), Err(Error::InitInadmissible(_))));
}

/// Rigid unit ring in the xz-plane with a stiff, heavy ring of radius 1/2
/// threaded through its lowest point.
fn heavy_loop_on_ring() -> LinkConfig {
    let r1 = ring_rod(1.0, 0.02, 129, vec3(1.0, 0.0, 0.0), vec3(-1.0, 0.0, 0.0), vec3(0.0, 0.0, 1.0));
    let df = DensityField::constant(std::f64::consts::PI, 129, 2.0, 0.0, 0.0).unwrap();
    let pl = kplateau_core::rod::Placement::new(vec3(0.0, 0.0, -0.5), frame(vec3(0.0, 0.0, -1.0), vec3(0.0, -1.0, 0.0))).unwrap();
    let r2 = Rod::new(df, pl, CrossSection::disk(0.01, 0.01).unwrap(), MassDensity::Uniform(1.0)).unwrap();
    let link = LinkConfig::new(r1, Some(r2), vec3(0.0, 0.0, -9.81)).unwrap();
    close_loops(&link, 2, true).unwrap()
}

#[test]
fn doubling_weights_drives_contact_shortfall_to_zero() {
    let link = heavy_loop_on_ring();
    let ed = [isotropic(1e3), isotropic(1e3)];
    let mut opts = SolveOptions { outer_iters: 80, rod1_rigid: true, harmonics: 2, ..Default::default() };
    let margin = opts.weights.gap_margin;
    let shortfall = |l: &LinkConfig| {
        let t = l.tubes().unwrap();
        margin * (t[0].radius() + t[1].radius()) - tube_gap(&t[0], &t[1])
    };
    let (mut cur, trace) = minimize_loop_only(&link, &ed, &opts).unwrap();
    assert!(trace.converged);
    assert_monotone(&trace);
    let mut last = shortfall(&cur);
    assert!(last > 0.0, "contact penalty inactive: {last}");
    for _ in 0..3 {
        opts.weights = PenaltyWeights { gap: 2.0 * opts.weights.gap, ..opts.weights };
        let (next, trace) = minimize_loop_only(&cur, &ed, &opts).unwrap();
        assert!(trace.converged);
        cur = next;
        let s = shortfall(&cur);
        assert!(s > 0.0 && s < 0.75 * last, "{last} -> {s}");
        last = s;
    }
}
