//! Leafwise Laplace equation Delta_D u = G and the strongly leafwise flat pipeline.

pub mod ode;
pub mod sm;
pub mod splus;

use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use crate::fields::{g_of_omega, gauduchon_defect, slf_defect, FieldError, HermitianMetricField};
use crate::grid::{DomainGrid, GridError, ScalarField};
use crate::surface::{Surface, SurfaceError};

pub use ode::{bounded_ode_solve, OdeSolution};
pub use sm::{liouville_check, solve_sm};
pub use splus::{reduce_to_cell, solve_splus, CellReduction};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SlfError {
    #[error("right-hand side has fiber mean {mean:e} on slice {slice}")]
    NonZeroMean { slice: usize, mean: f64 },
    #[error("divisor {divisor:e} underflows for mode {mode:?}")]
    DivisorUnderflow { mode: [i64; 3], divisor: f64 },
    #[error("seam residual {residual:e} exceeds {limit:e}")]
    SeamMismatch { residual: f64, limit: f64 },
    #[error("kernel window leaves truncation error {bound:e} above {tolerance:e}")]
    WindowTooSmall { bound: f64, tolerance: f64 },
    #[error("period lattice is degenerate")]
    DegenerateLattice,
    #[error("cell reduction phase depends on the generator order by {0:e}")]
    PathDependentPhase(f64),
    #[error("obstruction pairing {pairing:e} exceeds {tolerance:e}")]
    ObstructionViolated { pairing: f64, tolerance: f64 },
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Surface(#[from] SurfaceError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeafPotential {
    pub u: ScalarField,
    pub seam_residual: f64,
    pub mean_per_slice: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayPoint {
    pub mode_norm: f64,
    pub abs_coeff: f64,
    pub divisor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverReport {
    pub truncation: usize,
    pub min_divisor: f64,
    pub liouville_check: f64,
    pub residual_linf: f64,
    pub reality_defect: f64,
    pub decay: Vec<DecayPoint>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Seam and kernel-window tolerance.
    pub tol: f64,
    /// Allowed fiber mean of the right-hand side, relative to its sup norm.
    pub mean_tol: f64,
    /// Largest x1 wavenumber kept on cell grids.
    pub k_max: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-8, mean_tol: 1e-8, k_max: 8 }
    }
}

pub(crate) fn check_means(rhs: &ScalarField, mean_tol: f64) -> Result<(), SlfError> {
    let scale = rhs.max_abs().max(1.0);
    for slice in 0..rhs.n_slices() {
        let mean = rhs.slice_mean(slice);
        if mean.abs() > mean_tol * scale {
            return Err(SlfError::NonZeroMean { slice, mean });
        }
    }
    Ok(())
}

pub(crate) fn slice_means(u: &ScalarField) -> Vec<f64> {
    (0..u.n_slices()).map(|i| u.slice_mean(i)).collect()
}

pub fn solve(surface: &Surface, grid: &DomainGrid, rhs: &ScalarField, opts: &SolverOptions) -> Result<(LeafPotential, SolverReport), SlfError> {
    match surface {
        Surface::Sm(s) => solve_sm(s, grid, rhs, opts),
        Surface::Splus(s) => solve_splus(s, grid, rhs, opts),
    }
}

/// Delta_D u = (i ddbar u ^ alpha) / omega_TV^2.
pub fn leafwise_laplacian_apply(surface: &Surface, grid: &DomainGrid, u: &ScalarField) -> Result<ScalarField, SlfError> {
    match surface {
        Surface::Sm(s) => sm::leafwise_laplacian(s, grid, u),
        Surface::Splus(s) => splus::leafwise_laplacian(s, grid, u, &SolverOptions::default()),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlfOutcome {
    pub potential: LeafPotential,
    pub report: SolverReport,
    /// r-component of omega + i ddbar u.
    pub r_flat: ScalarField,
    pub defect: f64,
    pub pairings: Vec<f64>,
}

/// Checks the obstruction, solves Delta_D u = G(omega) and measures how flat omega + i ddbar u is along the leaves.
pub fn strongly_flat_representative(
    surface: &Surface,
    grid: &DomainGrid,
    omega: &HermitianMetricField,
    pairing_tol: f64,
    opts: &SolverOptions,
) -> Result<SlfOutcome, SlfError> {
    let obstruction = gauduchon_defect(surface, grid, omega, pairing_tol);
    if let Some(&worst) = obstruction.pairings.iter().max_by(|a, b| a.abs().total_cmp(&b.abs())) {
        if worst.abs() > pairing_tol {
            return Err(SlfError::ObstructionViolated { pairing: worst, tolerance: pairing_tol });
        }
    }
    let g = g_of_omega(grid, omega);
    let (potential, report) = solve(surface, grid, &g, opts)?;
    let lap = leafwise_laplacian_apply(surface, grid, &potential.u)?;
    let r_flat = omega.r.zip_map(&lap, |r, l| r + 8.0 * l);
    let defect = slf_defect(grid, &r_flat);
    Ok(SlfOutcome { potential, report, r_flat, defect, pairings: obstruction.pairings })
}

pub fn write_decay_csv(report: &SolverReport, out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(out, "mode_norm,abs_coeff,divisor")?;
    for p in &report.decay {
        writeln!(out, "{:.17e},{:.17e},{:.17e}", p.mode_norm, p.abs_coeff, p.divisor)?;
    }
    Ok(())
}
