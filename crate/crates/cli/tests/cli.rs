use std::path::Path;
use std::process::{Command, Output};

use proptest::prelude::*;

use kplateau_cli::export::{read_obj, TRACE_COLUMNS};
use kplateau_cli::{parse_config, Preset};

fn kplateau(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kplateau"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn hopf_check_reports_admissible() {
    let dir = tempfile::tempdir().unwrap();
    let o = kplateau(&["check", "--preset", "hopf"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("admissible: true"), "{text}");
    assert!(text.contains("Lk12 = 1"), "{text}");
}

#[test]
fn every_preset_passes_check() {
    let dir = tempfile::tempdir().unwrap();
    for p in Preset::ALL {
        let o = kplateau(&["check", "--preset", p.name()], dir.path());
        assert_eq!(o.status.code(), Some(0), "{}: {}{}", p.name(), stdout(&o), stderr(&o));
    }
}

#[test]
fn hopf_invariants_print_linking_number_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = kplateau(&["invariants", "--preset", "hopf"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.lines().any(|l| l == "Lk12 = 1"), "{text}");
    assert!(text.contains("self-link 0"), "{text}");
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = kplateau(&["solve"], dir.path());
    assert_eq!(missing.status.code(), Some(2));
    assert!(stderr(&missing).contains("--config or --preset"));
    let absent = dir.path().join("absent.cfg");
    let o = kplateau(&["solve", "--config", absent.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(kplateau(&["frobnicate"], dir.path()).status.code(), Some(2));
    // TOML integers are signed
    assert_eq!(kplateau(&["check", "--preset", "ring", "--seed", "9223372036854775808"], dir.path()).status.code(), Some(2));
    assert_eq!(kplateau(&["check", "--preset", "hopf", "--config", "x.cfg"], dir.path()).status.code(), Some(2));
    let o = Command::new(env!("CARGO_BIN_EXE_kplateau"))
        .args(["check", "--preset", "ring"])
        .env("KP_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn invalid_config_names_line_and_key() {
    let dir = tempfile::tempdir().unwrap();
    let text = Preset::Hopf.text().replacen("radius = 0.05", "radius = 0.0", 1);
    let line = text.lines().position(|l| l == "radius = 0.0").unwrap() + 1;
    let path = dir.path().join("bad.cfg");
    std::fs::write(&path, &text).unwrap();
    let o = kplateau(&["check", "--config", path.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains(&format!("line {line}: rod1.radius: radius must be positive")), "{err}");
}

#[test]
fn seeds_beyond_toml_range_do_not_serialize() {
    let mut cfg = Preset::Ring.config();
    cfg.scenario.seed = u64::MAX;
    assert!(cfg.to_toml().is_err());
}

#[test]
fn presets_round_trip() {
    for p in Preset::ALL {
        let cfg = p.config();
        assert_eq!(parse_config(&cfg.to_toml().unwrap()).unwrap(), cfg, "{}", p.name());
    }
}

fn write_short_hopf(dir: &Path) -> std::path::PathBuf {
    let mut cfg = Preset::Hopf.config();
    cfg.solver.outer_iters = 2;
    cfg.solver.film_steps_per_outer = 20;
    cfg.solver.tol = 0.0;
    let path = dir.join("short.cfg");
    std::fs::write(&path, cfg.to_toml().unwrap()).unwrap();
    path
}

#[test]
fn three_iteration_trace_has_four_lines() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_short_hopf(dir.path());
    let o = kplateau(&["solve", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 4, "{csv}");
    assert_eq!(lines[0], TRACE_COLUMNS.join(","));
    let rows: Vec<Vec<f64>> = lines[1..].iter().map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    for (i, r) in rows.iter().enumerate() {
        assert_eq!(r[0], i as f64);
        let parts = r[1] + r[2] + r[3] + r[4] + r[5];
        assert!((parts - r[6]).abs() <= 1e-12 * r[6].abs().max(1.0), "row {i}: {parts} vs {}", r[6]);
        // lk12, n1, n2
        assert_eq!(&r[8..11], &[1.0, 0.0, 0.0]);
    }
    let (v, f) = read_obj(&std::fs::read_to_string(dir.path().join("film.obj")).unwrap()).unwrap();
    assert!(!v.is_empty() && !f.is_empty());
    assert!(f.iter().flatten().all(|&i| i < v.len()));
}

#[test]
fn solve_outputs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_short_hopf(dir.path());
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = kplateau(&["solve", "--config", cfg.to_str().unwrap(), "--seed", "11"], &out);
        assert_eq!(o.status.code(), Some(0));
        (std::fs::read(out.join("film.obj")).unwrap(), std::fs::read(out.join("trace.csv")).unwrap())
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn relax_film_and_export_write_meshes() {
    let dir = tempfile::tempdir().unwrap();
    let o = kplateau(&["relax-film", "--preset", "ring"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("spanning certificate: PASS"));
    assert!(dir.path().join("film.obj").exists());
    let o = kplateau(&["export", "--preset", "hopf"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for name in ["tube1.obj", "tube2.obj", "film.obj"] {
        let text = std::fs::read_to_string(dir.path().join(name)).unwrap();
        assert!(read_obj(&text).is_ok(), "{name}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn edited_configs_round_trip(
        radius in 1e-4f64..1.0,
        stiffness in prop::array::uniform3(1e-3f64..1e6),
        gravity in prop::array::uniform3(-20.0f64..20.0),
        sigma in 0.0f64..10.0,
        turns in -5.0f64..5.0,
        series in prop::collection::vec(-1.0f64..1.0, 0..7),
        seed in 0..=i64::MAX as u64,
        clamp in prop::option::of(1e-3f64..1.0),
    ) {
        let mut cfg = Preset::ClampedPlusFree.config();
        cfg.rod1.radius = radius;
        cfg.rod1.stiffness = stiffness;
        cfg.scenario.gravity = gravity;
        cfg.scenario.seed = seed;
        cfg.film.sigma = sigma;
        if let Some(r2) = cfg.rod2.as_mut() {
            r2.turns = turns;
            r2.k1_fourier = series.clone();
        }
        cfg.solver.clamp = clamp;
        prop_assert_eq!(parse_config(&cfg.to_toml().unwrap()).unwrap(), cfg);
    }
}
