//! The `kplateau` command line.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use kplateau_core::constraints::{admissibility, invariants};
use kplateau_core::film::{init_spanning_mesh, relax_area};
use kplateau_core::rod::{tube_mesh, Tube};
use kplateau_core::solver::solve_kirchhoff_plateau;
use kplateau_core::topology::{
    gauss_linking_number, make_probe_family, self_linking, spanning_certificate, twist, writhe, ClosedPolyline, InvariantRecord,
    ProbeCounts,
};

use crate::config::{parse_config, Scenario, ScenarioConfig};
use crate::export::{export_mesh, export_trace};
use crate::presets::Preset;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONSTRAINT: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Points around the section in exported tube meshes.
const TUBE_SIDES: usize = 16;

#[derive(Debug, Parser)]
#[command(name = "kplateau", version, about = "Linked elastic rods spanned by a liquid film")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Scenario file.
    #[arg(long, global = true, value_name = "PATH", conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in scenario.
    #[arg(long, global = true, value_enum)]
    preset: Option<Preset>,
    /// Output directory (overrides `output.dir`).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Overrides `scenario.seed`.
    #[arg(long, global = true, value_name = "N", value_parser = clap::value_parser!(u64).range(0..=i64::MAX as u64))]
    seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Admissibility report of the initial configuration.
    Check,
    /// Linking number, writhe, twist and self-linking of the rods.
    Invariants,
    /// Relaxes the film with the rods held fixed.
    RelaxFilm,
    /// Solves the full rod + film problem.
    Solve,
    /// Writes the tube meshes and the seed film.
    Export,
}

/// Command failure with its exit code.
struct Failure {
    code: i32,
    message: String,
}

fn usage(message: impl std::fmt::Display) -> Failure {
    Failure { code: EXIT_USAGE, message: message.to_string() }
}

fn constraint(message: impl std::fmt::Display) -> Failure {
    Failure { code: EXIT_CONSTRAINT, message: message.to_string() }
}

type Outcome = Result<i32, Failure>;

/// Sets the size of the global rayon pool from `KP_THREADS` (0 = one per
/// core). The pool can only be configured once per process.
fn configure_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var("KP_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().map_err(|_| usage(format!("KP_THREADS must be a non-negative integer, got {v:?}")))?;
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Runs the command line `args` (program name first), writing reports to
/// `out` and errors to `err`. Returns the process exit code.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    match configure_threads().and_then(|_| dispatch(&cli, out)) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn load(cli: &Cli) -> Result<ScenarioConfig, Failure> {
    let mut cfg = match (&cli.config, cli.preset) {
        (Some(path), _) => {
            let text = fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
            parse_config(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?
        }
        (None, Some(p)) => p.config(),
        (None, None) => return Err(usage("either --config or --preset is required")),
    };
    if let Some(seed) = cli.seed {
        cfg.scenario.seed = seed;
    }
    if let Some(dir) = &cli.out {
        cfg.output.dir = dir.to_string_lossy().into_owned();
    }
    Ok(cfg)
}

fn output_path(cfg: &ScenarioConfig, name: &str) -> Result<PathBuf, Failure> {
    let dir = Path::new(&cfg.output.dir);
    fs::create_dir_all(dir).map_err(|e| usage(format!("{}: {e}", dir.display())))?;
    Ok(dir.join(name))
}

fn written(path: &Path, r: std::io::Result<()>) -> Result<(), Failure> {
    r.map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> Outcome {
    let cfg = load(cli)?;
    let sc = cfg.build().map_err(constraint)?;
    let report = match cli.command {
        Command::Check => check(&cfg, &sc),
        Command::Invariants => invariant_report(&cfg, &sc),
        Command::RelaxFilm => relax_film(&cfg, &sc),
        Command::Solve => solve(&cfg, &sc),
        Command::Export => export(&cfg, &sc),
    }?;
    out.write_all(report.text.as_bytes()).map_err(|e| usage(format!("stdout: {e}")))?;
    Ok(report.code)
}

struct Report {
    text: String,
    code: i32,
}

fn tubes(sc: &Scenario) -> Result<Vec<Tube>, Failure> {
    sc.link.tubes().map_err(constraint)
}

fn targets_or_found(sc: &Scenario, tubes: &[Tube]) -> Result<InvariantRecord, Failure> {
    match sc.targets {
        Some(t) => Ok(t),
        None => invariants(tubes, sc.solve.admissibility.offset_fraction).map_err(constraint),
    }
}

fn check(cfg: &ScenarioConfig, sc: &Scenario) -> Result<Report, Failure> {
    use std::fmt::Write as _;
    let tubes = tubes(sc)?;
    let targets = targets_or_found(sc, &tubes)?;
    let r = admissibility(&sc.link, &sc.ed, &targets, sc.solve.energy_bound, &sc.solve.admissibility).map_err(constraint)?;
    let mut t = String::new();
    writeln!(t, "scenario: {}", cfg.scenario.name).unwrap();
    writeln!(t, "admissible: {}", r.admissible).unwrap();
    writeln!(t, "local injectivity margin: {:.6e} (must stay below 1)", r.local_margin).unwrap();
    for (i, (c, (dp, dt))) in r.cn.iter().zip(&r.closure).enumerate() {
        writeln!(t, "rod {}: closure position {:.3e} tangent {:.3e}", i + 1, dp, dt).unwrap();
        writeln!(t, "rod {}: non-interpenetration residual {:.6e} (tolerance {:.6e})", i + 1, c.residual, c.tolerance).unwrap();
    }
    if r.min_tube_gap.is_finite() {
        writeln!(t, "tube gap: {:.6e}", r.min_tube_gap).unwrap();
    }
    let (f, g) = (r.invariants, r.targets);
    writeln!(t, "invariants: Lk12 = {}, n1 = {}, n2 = {} (required {}, {}, {})", f.lk12, f.n1, f.n2, g.lk12, g.n1, g.n2).unwrap();
    writeln!(t, "loop energy: {:.12e}", r.loop_energy).unwrap();
    if r.violations.is_empty() {
        writeln!(t, "violations: none").unwrap();
    } else {
        writeln!(t, "violations: {:?}", r.violations).unwrap();
    }
    Ok(Report { text: t, code: if r.admissible { EXIT_OK } else { EXIT_CONSTRAINT } })
}

fn invariant_report(cfg: &ScenarioConfig, sc: &Scenario) -> Result<Report, Failure> {
    use std::fmt::Write as _;
    let tubes = tubes(sc)?;
    let mut t = String::new();
    writeln!(t, "scenario: {}", cfg.scenario.name).unwrap();
    let mids = tubes
        .iter()
        .map(|tb| ClosedPolyline::new(tb.curve.loop_points().to_vec()))
        .collect::<Result<Vec<_>, _>>()
        .map_err(constraint)?;
    if let [m1, m2] = mids.as_slice() {
        let g = gauss_linking_number(m1, m2).map_err(constraint)?;
        writeln!(t, "Lk12 = {}", g.round() as i64).unwrap();
        writeln!(t, "Gauss integral: {g:.9}").unwrap();
    }
    for (i, (tb, mid)) in tubes.iter().zip(&mids).enumerate() {
        if !tb.is_closed() {
            let (dp, dt) = tb.curve.closure_residual();
            return Err(constraint(format!("rod {} is not closed (position {dp:.3e}, tangent {dt:.3e})", i + 1)));
        }
        let offset = sc.solve.admissibility.offset_fraction * tb.radius();
        let n = self_linking(&tb.curve, offset).map_err(constraint)?;
        let (wr, tw) = (writhe(mid), twist(&tb.curve));
        writeln!(t, "rod {}: writhe {wr:.9} twist {tw:.9} self-link {n}", i + 1).unwrap();
    }
    Ok(Report { text: t, code: EXIT_OK })
}

fn relax_film(cfg: &ScenarioConfig, sc: &Scenario) -> Result<Report, Failure> {
    use std::fmt::Write as _;
    let tubes = tubes(sc)?;
    let seed = init_spanning_mesh(&tubes, sc.solve.film_resolution).map_err(constraint)?;
    let rep = relax_area(&seed, &tubes, &sc.relax).map_err(constraint)?;
    let probes = make_probe_family(&tubes, ProbeCounts::default()).map_err(constraint)?;
    let cert = spanning_certificate(&rep.mesh, &probes);
    let path = output_path(cfg, &cfg.output.mesh)?;
    written(&path, export_mesh(&rep.mesh, &path))?;
    let mut t = String::new();
    writeln!(t, "scenario: {}", cfg.scenario.name).unwrap();
    writeln!(t, "seed area: {:.12e}", seed.area()).unwrap();
    writeln!(t, "relaxed area: {:.12e}", rep.mesh.area()).unwrap();
    writeln!(t, "accepted steps: {} (converged: {})", rep.accepted, rep.converged).unwrap();
    writeln!(t, "spanning certificate: {}", if cert.pass { "PASS" } else { "FAIL" }).unwrap();
    writeln!(t, "mesh: {}", path.display()).unwrap();
    Ok(Report { text: t, code: if cert.pass { EXIT_OK } else { EXIT_CONSTRAINT } })
}

fn solve(cfg: &ScenarioConfig, sc: &Scenario) -> Result<Report, Failure> {
    use std::fmt::Write as _;
    let (link, mesh, trace) = solve_kirchhoff_plateau(&sc.link, &sc.ed, sc.sigma, &sc.solve, None).map_err(constraint)?;
    let mesh_path = output_path(cfg, &cfg.output.mesh)?;
    written(&mesh_path, export_mesh(&mesh, &mesh_path))?;
    let trace_path = output_path(cfg, &cfg.output.trace)?;
    written(&trace_path, export_trace(&trace, &trace_path))?;
    let tubes = link.tubes().map_err(constraint)?;
    let probes = make_probe_family(&tubes, ProbeCounts::default()).map_err(constraint)?;
    let cert = spanning_certificate(&mesh, &probes);
    let last = trace.rows.last().expect("a trace has its initial row");
    let admissible = last.constraints.admissible;
    let mut t = String::new();
    writeln!(t, "scenario: {}", cfg.scenario.name).unwrap();
    writeln!(t, "outer iterations: {} (converged: {})", trace.rows.len() - 1, trace.converged).unwrap();
    writeln!(t, "total energy: {:.12e}", last.energy.e_total).unwrap();
    writeln!(t, "penalized energy: {:.12e}", last.penalized).unwrap();
    writeln!(t, "film area: {:.12e}", last.area).unwrap();
    let inv = last.invariants;
    writeln!(t, "invariants: Lk12 = {}, n1 = {}, n2 = {}", inv.lk12, inv.n1, inv.n2).unwrap();
    writeln!(t, "admissible: {admissible}").unwrap();
    writeln!(t, "spanning certificate: {}", if cert.pass { "PASS" } else { "FAIL" }).unwrap();
    writeln!(t, "mesh: {}", mesh_path.display()).unwrap();
    writeln!(t, "trace: {}", trace_path.display()).unwrap();
    Ok(Report { text: t, code: if admissible && cert.pass { EXIT_OK } else { EXIT_CONSTRAINT } })
}

fn export(cfg: &ScenarioConfig, sc: &Scenario) -> Result<Report, Failure> {
    use std::fmt::Write as _;
    let tubes = tubes(sc)?;
    let mut t = String::new();
    for (i, tb) in tubes.iter().enumerate() {
        let m = tube_mesh(tb, TUBE_SIDES).map_err(constraint)?;
        let path = output_path(cfg, &format!("tube{}.obj", i + 1))?;
        written(&path, export_mesh(&m, &path))?;
        writeln!(t, "tube {}: {}", i + 1, path.display()).unwrap();
    }
    let film = init_spanning_mesh(&tubes, sc.solve.film_resolution).map_err(constraint)?;
    let path = output_path(cfg, &cfg.output.mesh)?;
    written(&path, export_mesh(&film, &path))?;
    writeln!(t, "seed film: {}", path.display()).unwrap();
    Ok(Report { text: t, code: EXIT_OK })
}
