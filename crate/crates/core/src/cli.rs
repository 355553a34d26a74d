//! Batch front end: run configuration, metric recipes, subcommands and reports.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{IntMatrix2, IntMatrix3};
use crate::fields::{
    gauduchon_defect, metric_from_potential, metric_from_potential_fn, write_obstruction_csv, FieldError, HermitianMetricField,
    ObstructionReport,
};
use crate::flow::{ncrf_run, stretch_diagnostic, FlowError, FlowOptions, FlowTrace};
use crate::grid::{DomainGrid, Field};
use crate::potentials::{OrbitSeed, SmPotential, SplusPotential, TorusMode};
use crate::slf::{liouville_check, strongly_flat_representative, write_decay_csv, SlfError, SolverOptions};
use crate::surface::{build_sm, build_splus, Surface, SurfaceError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Surface(#[from] SurfaceError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Slf(SlfError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error("obstruction check failed: worst pairing {pairing:e}, R spread {spread:e}")]
    CheckFailed { pairing: f64, spread: f64 },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl From<SlfError> for CliError {
    fn from(e: SlfError) -> Self {
        CliError::Slf(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Flow(_) => 3,
            CliError::Slf(SlfError::ObstructionViolated { .. }) | CliError::CheckFailed { .. } => 4,
            _ => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FamilyName {
    SM,
    SPlus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Recipe {
    Tv,
    TvPlusPotential,
    NonconstantR,
    Custom,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSpec {
    pub k: [i64; 3],
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

/// value * cos(2 pi (k . t + n log(y2) / log period) + phase); k must vanish on nilmanifold bundles.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FourierTerm {
    pub value: f64,
    #[serde(default)]
    pub k: [i64; 3],
    #[serde(default)]
    pub n: i64,
    #[serde(default)]
    pub phase: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomMetric {
    #[serde(default)]
    pub r: Vec<FourierTerm>,
    #[serde(default)]
    pub s: Vec<FourierTerm>,
    #[serde(default)]
    pub u_re: Vec<FourierTerm>,
    #[serde(default)]
    pub u_im: Vec<FourierTerm>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricConfig {
    pub recipe: Recipe,
    /// Explicit modes for tv_plus_potential; drawn from the seed when empty.
    #[serde(default)]
    pub modes: Vec<ModeSpec>,
    #[serde(default = "default_random_modes")]
    pub random_modes: usize,
    #[serde(default = "default_mode_bound")]
    pub mode_bound: i64,
    /// Largest frame deviation of the perturbed metric from omega_TV; explicit modes are used as given when absent.
    pub deviation: Option<f64>,
    /// Relative amplitude of the nonconstant r(y2) recipe.
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    #[serde(default)]
    pub custom: CustomMetric,
}

fn default_random_modes() -> usize {
    4
}
fn default_mode_bound() -> i64 {
    2
}
fn default_amplitude() -> f64 {
    0.5
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self {
            recipe: Recipe::Tv,
            modes: Vec::new(),
            random_modes: default_random_modes(),
            mode_bound: default_mode_bound(),
            deviation: None,
            amplitude: default_amplitude(),
            custom: CustomMetric::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub gauduchon: f64,
    pub obstruction: f64,
    pub solver: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { gauduchon: 1e-8, obstruction: 1e-7, solver: 1e-8 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub family: FamilyName,
    /// 3x3 rows on torus bundles, 2x2 rows on nilmanifold bundles.
    pub matrix: Vec<Vec<i64>>,
    #[serde(default)]
    pub p: i64,
    #[serde(default)]
    pub q: i64,
    #[serde(default = "default_r")]
    pub r: i64,
    /// Complex parameter t as [re, im].
    #[serde(default)]
    pub t: [f64; 2],
    /// Torus points per axis, or theta and sigma points on cell grids.
    pub resolution: usize,
    pub n_y2: usize,
    #[serde(default = "default_n_x1")]
    pub n_x1: usize,
    pub truncation: usize,
    #[serde(default)]
    pub tolerances: Tolerances,
    pub t_end: f64,
    pub dt: f64,
    #[serde(default = "default_sample_every")]
    pub sample_every: f64,
    #[serde(default)]
    pub adaptive_dt: bool,
    #[serde(default)]
    pub metric: MetricConfig,
    pub output: PathBuf,
    #[serde(default)]
    pub seed: u64,
}

fn default_r() -> i64 {
    1
}
fn default_n_x1() -> usize {
    8
}
fn default_sample_every() -> f64 {
    0.1
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            family: FamilyName::SM,
            matrix: vec![vec![0, 1, 0], vec![0, 0, 1], vec![1, 1, 0]],
            p: 0,
            q: 0,
            r: 1,
            t: [0.0, 0.0],
            resolution: 8,
            n_y2: 9,
            n_x1: default_n_x1(),
            truncation: 8,
            tolerances: Tolerances::default(),
            t_end: 5.0,
            dt: 1e-3,
            sample_every: default_sample_every(),
            adaptive_dt: false,
            metric: MetricConfig::default(),
            output: PathBuf::from("out"),
            seed: 0,
        }
    }
}

/// Command-line overrides.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub resolution: Option<usize>,
    pub tmax: Option<f64>,
    pub dt: Option<f64>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    pub fn apply(mut self, o: &Overrides) -> Result<Self, CliError> {
        if let Some(v) = &o.out {
            self.output = v.clone();
        }
        if let Some(v) = o.seed {
            self.seed = v;
        }
        if let Some(v) = o.resolution {
            self.resolution = v;
        }
        if let Some(v) = o.tmax {
            self.t_end = v;
        }
        if let Some(v) = o.dt {
            self.dt = v;
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let t = &self.tolerances;
        if !(t.gauduchon > 0.0 && t.obstruction > 0.0 && t.solver > 0.0) {
            return Err(CliError::Config("tolerances must be positive".into()));
        }
        if !(self.dt > 0.0 && self.t_end >= 0.0 && self.sample_every > 0.0) {
            return Err(CliError::Config("dt and sample_every must be positive and t_end non-negative".into()));
        }
        let rows = match self.family {
            FamilyName::SM => 3,
            FamilyName::SPlus => 2,
        };
        if self.matrix.len() != rows || self.matrix.iter().any(|r| r.len() != rows) {
            return Err(CliError::Config(format!("matrix must be {rows}x{rows}")));
        }
        self.grid_shape_check()
    }

    fn grid_shape_check(&self) -> Result<(), CliError> {
        let period = 2.0;
        let check = match self.family {
            FamilyName::SM => DomainGrid::torus(self.resolution, self.n_y2, period).map(|_| ()),
            FamilyName::SPlus => DomainGrid::cell(self.resolution, self.resolution, self.n_x1, self.n_y2, period).map(|_| ()),
        };
        check.map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn surface(&self) -> Result<Surface, CliError> {
        Ok(match self.family {
            FamilyName::SM => {
                let mut m: IntMatrix3 = [[0; 3]; 3];
                for (i, row) in self.matrix.iter().enumerate() {
                    m[i].copy_from_slice(row);
                }
                Surface::Sm(build_sm(&m)?)
            }
            FamilyName::SPlus => {
                let mut n: IntMatrix2 = [[0; 2]; 2];
                for (i, row) in self.matrix.iter().enumerate() {
                    n[i].copy_from_slice(row);
                }
                Surface::Splus(build_splus(&n, self.p, self.q, self.r, Complex64::new(self.t[0], self.t[1]))?)
            }
        })
    }

    pub fn grid(&self, surface: &Surface) -> Result<DomainGrid, CliError> {
        Ok(match self.family {
            FamilyName::SM => surface.grid_torus(self.resolution, self.n_y2)?,
            FamilyName::SPlus => surface.grid_cell(self.resolution, self.resolution, self.n_x1, self.n_y2)?,
        })
    }

    pub fn flow_options(&self) -> FlowOptions {
        FlowOptions {
            t_end: self.t_end,
            dt: self.dt,
            sample_every: self.sample_every,
            keep_snapshots: true,
            curvature: true,
            collapse: true,
            adaptive: self.adaptive_dt,
        }
    }
}

fn fourier_sum(terms: &[FourierTerm], t: [f64; 3], s: f64, log_period: f64) -> f64 {
    terms
        .iter()
        .map(|term| {
            let ph = (0..3).map(|i| term.k[i] as f64 * t[i]).sum::<f64>() + term.n as f64 * s / log_period;
            term.value * (2.0 * PI * ph + term.phase).cos()
        })
        .sum()
}

/// Initial metric of the configured recipe.
pub fn build_metric(cfg: &RunConfig, surface: &Surface, grid: &DomainGrid) -> Result<HermitianMetricField, CliError> {
    let m = &cfg.metric;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let omega = match m.recipe {
        Recipe::Tv => HermitianMetricField::tricerri(grid),
        Recipe::TvPlusPotential => match surface {
            Surface::Sm(sm) => {
                let psi = if m.modes.is_empty() {
                    SmPotential::random(&mut rng, sm, m.mode_bound, m.random_modes)
                } else {
                    SmPotential {
                        modes: m.modes.iter().map(|v| TorusMode { k: v.k, cos: v.cos, sin: v.sin }).collect(),
                        bump: crate::potentials::LogBump { log_period: grid.log_period },
                    }
                };
                let psi = match m.deviation {
                    Some(d) => psi.normalized(surface, grid, d)?,
                    None => psi,
                };
                metric_from_potential(surface, grid, &psi.sample(grid))?
            }
            Surface::Splus(sp) => {
                let seeds = (0..m.random_modes)
                    .map(|_| OrbitSeed {
                        k: rng.gen_range(1..=m.mode_bound.max(1)),
                        center: [rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)],
                        width: 0.35,
                        amplitude: Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                    })
                    .collect();
                let pot = SplusPotential::new(sp, seeds, Vec::new());
                let scale = m.deviation.unwrap_or(0.01);
                metric_from_potential_fn(surface, grid, &|p| scale * pot.value(p), 1e-3)?
            }
        },
        Recipe::NonconstantR => {
            let a = m.amplitude;
            let l = grid.log_period;
            let r = Field::from_fn(grid, |i, _| 1.0 + a * (2.0 * PI * grid.s(i) / l).cos());
            HermitianMetricField::form(r, Field::filled(grid.n_y2, grid.per_slice(), 1.0), grid.zeros_complex())
        }
        Recipe::Custom => {
            let c = &m.custom;
            let torus = matches!(surface, Surface::Sm(_));
            let fiber_terms = [&c.r, &c.s, &c.u_re, &c.u_im].into_iter().flatten().any(|t| t.k != [0, 0, 0]);
            if !torus && fiber_terms {
                return Err(CliError::Config("custom terms on nilmanifold bundles must be fiber-constant".into()));
            }
            let l = grid.log_period;
            let at = |_: usize, node: usize| if torus { grid.torus_t(node) } else { [0.0; 3] };
            let r = Field::from_fn(grid, |i, n| fourier_sum(&c.r, at(i, n), grid.s(i), l));
            let s = Field::from_fn(grid, |i, n| fourier_sum(&c.s, at(i, n), grid.s(i), l));
            let u = Field::from_fn(grid, |i, n| {
                Complex64::new(fourier_sum(&c.u_re, at(i, n), grid.s(i), l), fourier_sum(&c.u_im, at(i, n), grid.s(i), l))
            });
            HermitianMetricField::form(r, s, u)
        }
    };
    omega.check_positive()?;
    Ok(omega)
}

#[derive(Debug, Clone, Serialize)]
pub struct SurfaceSummary {
    pub family: FamilyName,
    pub period: f64,
    pub fiber_volume: f64,
    pub limit_multiple: f64,
    pub kernel_residual: f64,
    pub liouville_margin: f64,
    pub liouville_check: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ObstructionSummary {
    pub r_spread: f64,
    pub pairings: Vec<f64>,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolverSummary {
    pub truncation: usize,
    pub min_divisor: f64,
    pub liouville_check: f64,
    pub residual_linf: f64,
    pub reality_defect: f64,
    pub seam_residual: f64,
    pub slf_defect: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FlowSummary {
    pub steps: usize,
    pub t_final: f64,
    pub final_sup_dist: f64,
    pub decay_rate_fit: f64,
    pub max_residual: f64,
    pub curvature_ratio: f64,
    pub z_diameter_rate: f64,
    pub base_length: f64,
    pub stretch_c0: f64,
    pub stretch_c2: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub config: RunConfig,
    pub surface: Option<SurfaceSummary>,
    pub obstruction: Option<ObstructionSummary>,
    pub solver: Option<SolverSummary>,
    pub flow: Option<FlowSummary>,
    pub timings: BTreeMap<String, f64>,
    pub checks: BTreeMap<String, bool>,
}

impl RunReport {
    fn new(config: &RunConfig) -> Self {
        Self {
            config: config.clone(),
            surface: None,
            obstruction: None,
            solver: None,
            flow: None,
            timings: BTreeMap::new(),
            checks: BTreeMap::new(),
        }
    }

    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        let text = toml::to_string(self).map_err(|e| CliError::Config(e.to_string()))?;
        fs::write(dir.join("report.toml"), text)?;
        Ok(())
    }
}

fn timed<T>(report: &mut RunReport, phase: &str, f: impl FnOnce() -> T) -> T {
    let start = Instant::now();
    let out = f();
    report.timings.insert(phase.to_string(), start.elapsed().as_secs_f64());
    out
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<fs::File>, CliError> {
    Ok(BufWriter::new(fs::File::create(dir.join(name))?))
}

fn surface_summary(cfg: &RunConfig, surface: &Surface) -> SurfaceSummary {
    let (kernel_residual, liouville_margin, check) = match surface {
        Surface::Sm(s) => (s.kernel_residual, s.ratio_margin.margin, Some(liouville_check(s, cfg.truncation as i64))),
        Surface::Splus(s) => (s.structure_residual, s.slope_margin.margin, None),
    };
    SurfaceSummary {
        family: cfg.family,
        period: surface.period(),
        fiber_volume: surface.fiber_volume(),
        limit_multiple: surface.limit_multiple(),
        kernel_residual,
        liouville_margin,
        liouville_check: check,
    }
}

fn obstruction_summary(r: &ObstructionReport) -> ObstructionSummary {
    ObstructionSummary { r_spread: r.r_spread, pairings: r.pairings.clone(), tolerance: r.tolerance, passed: r.passed }
}

fn worst_pairing(r: &ObstructionReport) -> f64 {
    r.pairings.iter().copied().max_by(|a, b| a.abs().total_cmp(&b.abs())).unwrap_or(0.0)
}

fn write_series(dir: &Path, name: &str, xs: impl Iterator<Item = (f64, f64)>) -> Result<(), CliError> {
    let mut f = create(dir, name)?;
    for (x, y) in xs {
        writeln!(f, "{x:.17e} {y:.17e}")?;
    }
    Ok(())
}

/// Least-squares exponential rate of a positive series over all samples with t >= t_from.
fn fitted_rate(pts: impl Iterator<Item = (f64, f64)>, t_from: f64) -> f64 {
    let pts: Vec<(f64, f64)> = pts.filter(|(t, v)| *t >= t_from && *v > 0.0).map(|(t, v)| (t, v.ln())).collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mv = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let cov: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - mv)).sum();
    let var: f64 = pts.iter().map(|p| (p.0 - mt) * (p.0 - mt)).sum();
    -cov / var
}

fn flow_summary(surface: &Surface, grid: &DomainGrid, trace: &FlowTrace) -> Result<FlowSummary, CliError> {
    let last = trace.samples.last().copied();
    let t_final = last.map_or(0.0, |s| s.t);
    let window: Vec<f64> = trace.samples.iter().filter(|s| s.t >= 0.5 - 1e-9).map(|s| s.curvature_sup).collect();
    let hi = window.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = window.iter().copied().fold(f64::INFINITY, f64::min);
    let (mut c0, mut c2) = (0.0f64, 0.0f64);
    for (t, state) in &trace.snapshots {
        let rep = stretch_diagnostic(surface, grid, state, *t)?;
        c0 = c0.max(rep.c0);
        if *t >= 0.5 - 1e-9 {
            c2 = c2.max(rep.c2);
        }
    }
    Ok(FlowSummary {
        steps: trace.steps,
        t_final,
        final_sup_dist: last.map_or(f64::NAN, |s| s.sup_dist_to_omega_inf),
        decay_rate_fit: trace.decay_rate(),
        max_residual: trace.max_residual,
        curvature_ratio: hi / lo,
        z_diameter_rate: fitted_rate(trace.samples.iter().map(|s| (s.t, s.fiber_diam_z)), 0.5 * t_final),
        base_length: last.map_or(f64::NAN, |s| s.base_length),
        stretch_c0: c0,
        stretch_c2: c2,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Surface,
    CheckGauduchon,
    SolveSlf,
    Flow,
    Report,
}

/// Runs one subcommand, writing CSVs and report.toml into the configured output directory.
pub fn run(cmd: Command, cfg: &RunConfig) -> Result<RunReport, CliError> {
    let dir = cfg.output.clone();
    fs::create_dir_all(&dir)?;
    let mut report = RunReport::new(cfg);
    let result = run_into(cmd, cfg, &dir, &mut report);
    report.write(&dir)?;
    result.map(|_| report)
}

fn run_into(cmd: Command, cfg: &RunConfig, dir: &Path, report: &mut RunReport) -> Result<(), CliError> {
    let surface = timed(report, "surface", || cfg.surface())?;
    report.surface = Some(surface_summary(cfg, &surface));
    if cmd == Command::Surface {
        return Ok(());
    }
    let grid = cfg.grid(&surface)?;
    let omega = timed(report, "metric", || build_metric(cfg, &surface, &grid))?;

    if matches!(cmd, Command::CheckGauduchon | Command::Report) {
        let obs = timed(report, "obstruction", || gauduchon_defect(&surface, &grid, &omega, cfg.tolerances.gauduchon));
        write_obstruction_csv(&obs, &mut create(dir, "obstruction.csv")?)?;
        let worst = worst_pairing(&obs);
        let pass = obs.passed && worst.abs() <= cfg.tolerances.obstruction;
        report.obstruction = Some(obstruction_summary(&obs));
        report.checks.insert("gauduchon".into(), pass);
        if cmd == Command::CheckGauduchon && !pass {
            return Err(CliError::CheckFailed { pairing: worst, spread: obs.r_spread });
        }
    }

    if matches!(cmd, Command::SolveSlf | Command::Report) {
        let opts = SolverOptions { tol: cfg.tolerances.solver, k_max: cfg.truncation, ..SolverOptions::default() };
        let out = timed(report, "solve", || strongly_flat_representative(&surface, &grid, &omega, cfg.tolerances.obstruction, &opts));
        match out {
            Ok(out) => {
                let mut f = create(dir, "potential.csv")?;
                writeln!(f, "slice,node,u")?;
                for i in 0..grid.n_y2 {
                    for (l, v) in out.potential.u.slice(i).iter().enumerate() {
                        writeln!(f, "{i},{l},{v:.17e}")?;
                    }
                }
                write_decay_csv(&out.report, &mut create(dir, "decay.csv")?)?;
                report.checks.insert("slf_defect".into(), out.defect <= 1e-6);
                report.solver = Some(SolverSummary {
                    truncation: out.report.truncation,
                    min_divisor: out.report.min_divisor,
                    liouville_check: out.report.liouville_check,
                    residual_linf: out.report.residual_linf,
                    reality_defect: out.report.reality_defect,
                    seam_residual: out.potential.seam_residual,
                    slf_defect: out.defect,
                });
            }
            Err(e) if cmd == Command::Report => {
                report.checks.insert("slf_defect".into(), false);
                if !matches!(e, SlfError::ObstructionViolated { .. }) {
                    return Err(e.into());
                }
            }
            Err(e) => return Err(e.into()),
        }
    }

    if matches!(cmd, Command::Flow | Command::Report) {
        let trace = timed(report, "flow", || ncrf_run(&surface, &grid, &omega, &cfg.flow_options()))?;
        trace.write_csv(&mut create(dir, "flow.csv")?)?;
        let col = |f: fn(&crate::flow::FlowSample) -> f64| trace.samples.iter().map(move |s| (s.t, f(s)));
        write_series(dir, "sup_dist.dat", col(|s| s.sup_dist_to_omega_inf))?;
        write_series(dir, "curvature.dat", col(|s| s.curvature_sup))?;
        write_series(dir, "fiber_diam_z.dat", col(|s| s.fiber_diam_z))?;
        write_series(dir, "fiber_diam_x2.dat", col(|s| s.fiber_diam_x2))?;
        write_series(dir, "base_length.dat", col(|s| s.base_length))?;
        let summary = timed(report, "diagnostics", || flow_summary(&surface, &grid, &trace))?;
        report.checks.insert("decay_rate".into(), (0.8..=1.2).contains(&summary.decay_rate_fit));
        report.checks.insert("curvature_ratio".into(), summary.curvature_ratio <= 10.0);
        report.flow = Some(summary);
    }
    Ok(())
}
