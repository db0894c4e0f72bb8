mod common;

use kplateau_core::constraints::{admissibility, invariants, tube_gap, AdmissibilityOptions, Violation};
use kplateau_core::film::init_spanning_mesh;
use kplateau_core::math::vec3;
use kplateau_core::rod::Placement;
use kplateau_core::topology::{make_probe_family, spanning_certificate, InvariantRecord, ProbeCounts, ProbeTag};

use common::{hopf, isotropic};

const TARGET: InvariantRecord = InvariantRecord { lk12: 1, n1: 0, n2: 0 };

#[test]
fn hopf_invariants_and_gap() {
    let link = hopf(0.05, 257);
    let tubes = link.tubes().unwrap();
    assert!(tubes.iter().all(|t| t.is_closed()));
    assert_eq!(invariants(&tubes, 0.5).unwrap(), TARGET);
    // dense oracle: every point of one circle is at distance 1 from the other
    // polygon chords sit inside the circles by at most h^2 / 8 each
    let h = tubes[0].curve.spacing();
    assert!((tube_gap(&tubes[0], &tubes[1]) - 0.9).abs() <= h * h / 4.0);
}

#[test]
fn hopf_is_admissible_until_moved_or_bounded() {
    let link = hopf(0.05, 257);
    let ed = [isotropic(1.0), isotropic(1.0)];
    let opts = AdmissibilityOptions::default();
    let rep = admissibility(&link, &ed, &TARGET, 1e3, &opts).unwrap();
    assert!(rep.admissible, "{:?}", rep.violations);
    assert!((rep.local_margin - 0.05).abs() < 1e-12);

    let far = link
        .with_rod2_placement(Placement::new(vec3(10.0, 0.0, 0.0), link.rod2().unwrap().placement.frame).unwrap())
        .unwrap();
    let rep = admissibility(&far, &ed, &TARGET, 1e3, &opts).unwrap();
    assert!(!rep.admissible);
    assert!(rep.violations.contains(&Violation::Invariants));
    assert_eq!(rep.invariants.lk12, 0);

    let e = rep.loop_energy;
    let rep = admissibility(&link, &ed, &TARGET, 0.5 * e, &opts).unwrap();
    assert_eq!(rep.violations, vec![Violation::EnergyBound]);
    // monotone in the bound
    assert!(admissibility(&link, &ed, &TARGET, 2.0 * e, &opts).unwrap().admissible);
}

#[test]
fn hopf_seed_film_passes_certificate() {
    let tubes = hopf(0.05, 257).tubes().unwrap();
    let mesh = init_spanning_mesh(&tubes, 64).unwrap();
    assert!(mesh.is_valid());
    assert_eq!(mesh.euler_characteristic(), 0);
    let probes = make_probe_family(&tubes, ProbeCounts::default()).unwrap();
    assert!(probes.tags.iter().any(|t| matches!(t, ProbeTag::DClass { .. })));
    let rep = spanning_certificate(&mesh, &probes);
    assert!(rep.pass, "{:?}", rep.hits);
}
