//! Scenario files: a TOML document with the sections `[scenario]`,
//! `[rod1]`, `[rod2]` (optional), `[film]`, `[solver]` and `[output]`.
//! See `docs/config-schema.md` for every key.

use serde::{Deserialize, Serialize};

use kplateau_core::constraints::AdmissibilityOptions;
use kplateau_core::energy::ElasticDensity;
use kplateau_core::film::RelaxOptions;
use kplateau_core::math::{Vec3, TAU};
use kplateau_core::rod::{CrossSection, DensityField, Frame, LinkConfig, MassDensity, Placement, Rod};
use kplateau_core::solver::{close_loops, PenaltyWeights, SolveOptions};
use kplateau_core::topology::InvariantRecord;

/// Parse or validation failure, located at a line of the input when
/// possible (1-based).
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{}{key}: {reason}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
pub struct ConfigError {
    pub line: Option<usize>,
    pub key: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioSection,
    pub rod1: RodConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rod2: Option<RodConfig>,
    #[serde(default)]
    pub film: FilmConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub name: String,
    #[serde(default)]
    pub gravity: [f64; 3],
    #[serde(default)]
    pub seed: u64,
    /// Correct the strain fields until the rods close before solving.
    #[serde(default)]
    pub close_loops: bool,
    #[serde(default = "default_harmonics")]
    pub closure_harmonics: usize,
    /// Required `[lk12, n1, n2]`; the initial values are used when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub targets: Option<[i64; 3]>,
}

/// One rod. Strains are `k1 = curvature cos(q s)`, `k2 = -curvature sin(q s)`,
/// `twist = q` with `q = 2 pi turns / length`, plus optional Fourier series
/// `[c0, cos 1, sin 1, cos 2, ...]` over the rod length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RodConfig {
    pub length: f64,
    pub nodes: usize,
    pub radius: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_thickness: Option<f64>,
    pub stiffness: [f64; 3],
    #[serde(default)]
    pub barrier: f64,
    pub mass: f64,
    pub origin: [f64; 3],
    pub u: [f64; 3],
    pub w: [f64; 3],
    #[serde(default)]
    pub curvature: f64,
    #[serde(default)]
    pub turns: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub k1_fourier: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub k2_fourier: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub twist_fourier: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilmConfig {
    pub sigma: f64,
    /// Boundary stations of the seed film.
    pub resolution: usize,
    pub step: f64,
    /// Step budget of `relax-film`.
    pub relax_steps: usize,
    pub relax_tol: f64,
}

impl Default for FilmConfig {
    fn default() -> Self {
        let r = RelaxOptions::default();
        let s = SolveOptions::default();
        Self { sigma: 1.0, resolution: s.film_resolution, step: s.film_step, relax_steps: r.steps, relax_tol: r.tol }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub outer_iters: usize,
    pub film_steps_per_outer: usize,
    pub closure_weight: f64,
    pub margin_weight: f64,
    pub cn_weight: f64,
    pub gap_weight: f64,
    pub margin_eps: f64,
    pub gap_margin: f64,
    pub growth: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub clamp: Option<f64>,
    pub tol: f64,
    pub harmonics: usize,
    pub rod1_rigid: bool,
    pub rod2_pinned: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub energy_bound: Option<f64>,
    pub voxel_fraction: f64,
    pub offset_fraction: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let s = SolveOptions::default();
        let w = s.weights;
        Self {
            outer_iters: s.outer_iters,
            film_steps_per_outer: s.film_steps_per_outer,
            closure_weight: w.closure,
            margin_weight: w.margin,
            cn_weight: w.cn,
            gap_weight: w.gap,
            margin_eps: w.margin_eps,
            gap_margin: w.gap_margin,
            growth: s.growth,
            clamp: None,
            tol: s.tol,
            harmonics: s.harmonics,
            rod1_rigid: s.rod1_rigid,
            rod2_pinned: s.rod2_pinned,
            energy_bound: None,
            voxel_fraction: s.admissibility.voxel_fraction,
            offset_fraction: s.admissibility.offset_fraction,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: String,
    pub mesh: String,
    pub trace: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: "out".into(), mesh: "film.obj".into(), trace: "trace.csv".into() }
    }
}

fn default_harmonics() -> usize {
    4
}

/// Everything the solver entry points need.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub link: LinkConfig,
    pub ed: Vec<ElasticDensity>,
    pub sigma: f64,
    pub solve: SolveOptions,
    pub relax: RelaxOptions,
    pub targets: Option<InvariantRecord>,
}

fn line_of_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

/// Line of `key` inside `[section]`, or of the section header when `key`
/// is empty or missing.
fn locate(text: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    let mut header = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.split(']').next()) {
            current = name.trim().to_string();
            if current == section {
                header = Some(i + 1);
            }
            continue;
        }
        if current == section && !key.is_empty() {
            let lhs = line.split('=').next().unwrap_or("").trim();
            if line.contains('=') && lhs == key {
                return Some(i + 1);
            }
        }
    }
    header
}

fn invalid(section: &str, key: &str, reason: impl Into<String>) -> (String, String, String) {
    (section.to_string(), key.to_string(), reason.into())
}

type Invalid = (String, String, String);

/// Parses and validates a scenario file.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| {
        let line = e.span().map(|s| line_of_offset(text, s.start));
        ConfigError { line, key: "config".into(), reason: e.message().trim().to_string() }
    })?;
    cfg.validate().map_err(|(section, key, reason)| ConfigError {
        line: locate(text, &section, &key),
        key: if key.is_empty() { section } else { format!("{section}.{key}") },
        reason,
    })?;
    Ok(cfg)
}

fn positive(x: f64) -> bool {
    x.is_finite() && x > 0.0
}

impl RodConfig {
    fn validate(&self, section: &str) -> Result<(), Invalid> {
        if !positive(self.radius) {
            return Err(invalid(section, "radius", "radius must be positive"));
        }
        if let Some(t) = self.max_thickness {
            if !(t.is_finite() && t >= self.radius) {
                return Err(invalid(section, "max_thickness", "max_thickness must be at least the radius"));
            }
        }
        if !positive(self.length) {
            return Err(invalid(section, "length", "length must be positive"));
        }
        if self.nodes < 3 {
            return Err(invalid(section, "nodes", "need at least 3 nodes"));
        }
        if !self.stiffness.iter().all(|a| positive(*a)) {
            return Err(invalid(section, "stiffness", "stiffnesses must be positive"));
        }
        if !(0.0..=ElasticDensity::MAX_BARRIER).contains(&self.barrier) {
            return Err(invalid(section, "barrier", "barrier weight must lie in [0, 0.2]"));
        }
        if !positive(self.mass) {
            return Err(invalid(section, "mass", "mass density must be positive"));
        }
        for (key, v) in [("origin", &self.origin), ("u", &self.u), ("w", &self.w)] {
            if !v.iter().all(|x| x.is_finite()) {
                return Err(invalid(section, key, "must be finite"));
            }
        }
        if let Err(e) = Frame::from_tangent(Vec3::from(self.w), Vec3::from(self.u)) {
            return Err(invalid(section, "u", e.to_string()));
        }
        for (key, v) in [("curvature", self.curvature), ("turns", self.turns)] {
            if !v.is_finite() {
                return Err(invalid(section, key, "must be finite"));
            }
        }
        for (key, v) in [("k1_fourier", &self.k1_fourier), ("k2_fourier", &self.k2_fourier), ("twist_fourier", &self.twist_fourier)] {
            if !v.iter().all(|x| x.is_finite()) {
                return Err(invalid(section, key, "coefficients must be finite"));
            }
        }
        Ok(())
    }

    fn density(&self) -> kplateau_core::Result<DensityField> {
        let q = TAU * self.turns / self.length;
        let series = |c: &[f64], s: f64| -> f64 {
            c.iter()
                .enumerate()
                .map(|(j, cj)| {
                    let k = ((j + 1) / 2) as f64;
                    let x = TAU * k * s / self.length;
                    cj * match j {
                        0 => 1.0,
                        _ if j % 2 == 1 => x.cos(),
                        _ => x.sin(),
                    }
                })
                .sum()
        };
        DensityField::from_fn(self.length, self.nodes, |s| {
            let (sn, cs) = (q * s).sin_cos();
            [
                self.curvature * cs + series(&self.k1_fourier, s),
                -self.curvature * sn + series(&self.k2_fourier, s),
                q + series(&self.twist_fourier, s),
            ]
        })
    }

    fn rod(&self) -> kplateau_core::Result<Rod> {
        let frame = Frame::from_tangent(Vec3::from(self.w), Vec3::from(self.u))?;
        Rod::new(
            self.density()?,
            Placement::new(Vec3::from(self.origin), frame)?,
            CrossSection::disk(self.radius, self.max_thickness.unwrap_or(self.radius))?,
            MassDensity::Uniform(self.mass),
        )
    }

    fn elastic(&self) -> kplateau_core::Result<ElasticDensity> {
        let [a1, a2, a3] = self.stiffness;
        ElasticDensity::new(a1, a2, a3, self.barrier)
    }
}

impl ScenarioConfig {
    fn validate(&self) -> Result<(), Invalid> {
        if !self.scenario.gravity.iter().all(|g| g.is_finite()) {
            return Err(invalid("scenario", "gravity", "must be finite"));
        }
        if self.scenario.closure_harmonics == 0 {
            return Err(invalid("scenario", "closure_harmonics", "must be at least 1"));
        }
        self.rod1.validate("rod1")?;
        if let Some(r) = &self.rod2 {
            r.validate("rod2")?;
        }
        let f = &self.film;
        if !(f.sigma.is_finite() && f.sigma >= 0.0) {
            return Err(invalid("film", "sigma", "surface tension must be non-negative"));
        }
        if f.resolution < 8 {
            return Err(invalid("film", "resolution", "need at least 8 boundary stations"));
        }
        if !positive(f.step) {
            return Err(invalid("film", "step", "step must be positive"));
        }
        if !(f.relax_tol >= 0.0) {
            return Err(invalid("film", "relax_tol", "tolerance must be non-negative"));
        }
        let s = &self.solver;
        for (key, v) in [
            ("closure_weight", s.closure_weight),
            ("margin_weight", s.margin_weight),
            ("cn_weight", s.cn_weight),
            ("gap_weight", s.gap_weight),
            ("margin_eps", s.margin_eps),
            ("gap_margin", s.gap_margin),
            ("tol", s.tol),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(invalid("solver", key, "must be non-negative"));
            }
        }
        if !(s.growth.is_finite() && s.growth >= 1.0) {
            return Err(invalid("solver", "growth", "growth factor must be at least 1"));
        }
        if let Some(c) = s.clamp {
            if !(c > 0.0) {
                return Err(invalid("solver", "clamp", "clamp must be positive"));
            }
        }
        if let Some(b) = s.energy_bound {
            if b.is_nan() {
                return Err(invalid("solver", "energy_bound", "must be a number"));
            }
        }
        if !(s.voxel_fraction > 0.0 && s.voxel_fraction <= 0.25) {
            return Err(invalid("solver", "voxel_fraction", "voxel fraction must lie in (0, 0.25]"));
        }
        if !(s.offset_fraction > 0.0 && s.offset_fraction < 1.0) {
            return Err(invalid("solver", "offset_fraction", "offset fraction must lie in (0, 1)"));
        }
        if self.output.mesh.is_empty() || self.output.trace.is_empty() {
            return Err(invalid("output", "", "file names must not be empty"));
        }
        Ok(())
    }

    /// Serializes back to TOML; `parse_config` of the result yields `self`.
    /// Fails for values TOML cannot hold, such as seeds above `i64::MAX`.
    pub fn to_toml(&self) -> Result<String, ConfigError> {
        toml::to_string(self).map_err(|e| ConfigError { line: None, key: String::new(), reason: e.to_string() })
    }

    pub fn solve_options(&self) -> SolveOptions {
        let s = &self.solver;
        SolveOptions {
            outer_iters: s.outer_iters,
            film_steps_per_outer: s.film_steps_per_outer,
            weights: PenaltyWeights {
                closure: s.closure_weight,
                margin: s.margin_weight,
                cn: s.cn_weight,
                gap: s.gap_weight,
                margin_eps: s.margin_eps,
                gap_margin: s.gap_margin,
            },
            growth: s.growth,
            clamp: s.clamp.unwrap_or(f64::INFINITY),
            tol: s.tol,
            seed: self.scenario.seed,
            harmonics: s.harmonics,
            rod1_rigid: s.rod1_rigid,
            rod2_pinned: s.rod2_pinned,
            energy_bound: s.energy_bound.unwrap_or(f64::INFINITY),
            film_resolution: self.film.resolution,
            film_step: self.film.step,
            targets: self.targets(),
            admissibility: AdmissibilityOptions { voxel_fraction: s.voxel_fraction, offset_fraction: s.offset_fraction },
        }
    }

    pub fn targets(&self) -> Option<InvariantRecord> {
        self.scenario.targets.map(|[lk12, n1, n2]| InvariantRecord { lk12, n1, n2 })
    }

    /// Builds the rods (closing them first if requested) and the solver
    /// options.
    pub fn build(&self) -> Result<Scenario, ConfigError> {
        let err = |section: &str, e: kplateau_core::Error| ConfigError {
            line: None,
            key: section.to_string(),
            reason: e.to_string(),
        };
        let rod1 = self.rod1.rod().map_err(|e| err("rod1", e))?;
        let rod2 = self.rod2.as_ref().map(|r| r.rod()).transpose().map_err(|e| err("rod2", e))?;
        let mut ed = vec![self.rod1.elastic().map_err(|e| err("rod1", e))?];
        if let Some(r) = &self.rod2 {
            ed.push(r.elastic().map_err(|e| err("rod2", e))?);
        }
        let mut link = LinkConfig::new(rod1, rod2, Vec3::from(self.scenario.gravity)).map_err(|e| err("scenario", e))?;
        if self.scenario.close_loops {
            link = close_loops(&link, self.scenario.closure_harmonics, self.solver.rod1_rigid).map_err(|e| err("scenario", e))?;
        }
        Ok(Scenario {
            link,
            ed,
            sigma: self.film.sigma,
            solve: self.solve_options(),
            relax: RelaxOptions {
                steps: self.film.relax_steps,
                step_size: self.film.step,
                tol: self.film.relax_tol,
                ..RelaxOptions::default()
            },
            targets: self.targets(),
        })
    }
}
