//! Hermitian metric fields, the function G(omega), Gauduchon defect and obstruction pairing.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::grid::{ComplexField, DomainGrid, Field, GridError, ScalarField};
use crate::slab::Slab;
use crate::sm_ops::SmOperator;
use crate::surface::{coord_to_frame, frame_to_coord, CoordComponents, FrameComponents, Surface, SurfaceError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("form is not positive at slice {slice}, node {node}")]
    NotPositive { slice: usize, node: usize },
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Surface(#[from] SurfaceError),
}

/// (r, s, u) frame components sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMetricField {
    pub r: ScalarField,
    pub s: ScalarField,
    pub u: ComplexField,
}

/// (g_zz, g_zw, g_ww) coordinate components sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordinateMetricField {
    pub zz: ScalarField,
    pub zw: ComplexField,
    pub ww: ScalarField,
}

impl HermitianMetricField {
    /// Frame field without a positivity check (degenerate forms such as alpha).
    pub fn form(r: ScalarField, s: ScalarField, u: ComplexField) -> Self {
        Self { r, s, u }
    }

    pub fn new(r: ScalarField, s: ScalarField, u: ComplexField) -> Result<Self, FieldError> {
        let f = Self { r, s, u };
        f.check_positive()?;
        Ok(f)
    }

    pub fn uniform(grid: &DomainGrid, value: FrameComponents) -> Self {
        Self {
            r: Field::filled(grid.n_y2, grid.per_slice(), value.r),
            s: Field::filled(grid.n_y2, grid.per_slice(), value.s),
            u: Field::filled(grid.n_y2, grid.per_slice(), value.u),
        }
    }

    pub fn tricerri(grid: &DomainGrid) -> Self {
        Self::uniform(grid, FrameComponents::new(1.0, 1.0, Complex64::new(0.0, 0.0)))
    }

    pub fn at(&self, slice: usize, node: usize) -> FrameComponents {
        FrameComponents::new(self.r.slice(slice)[node], self.s.slice(slice)[node], self.u.slice(slice)[node])
    }

    pub fn check_positive(&self) -> Result<(), FieldError> {
        for slice in 0..self.r.n_slices() {
            for node in 0..self.r.per_slice() {
                if !self.at(slice, node).is_positive() {
                    return Err(FieldError::NotPositive { slice, node });
                }
            }
        }
        Ok(())
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { r: self.r.map(|v| v * c), s: self.s.map(|v| v * c), u: self.u.map(|v| v * c) }
    }
}

impl CoordinateMetricField {
    pub fn at(&self, slice: usize, node: usize) -> CoordComponents {
        CoordComponents { zz: self.zz.slice(slice)[node], zw: self.zw.slice(slice)[node], ww: self.ww.slice(slice)[node] }
    }

    pub fn check_positive(&self) -> Result<(), FieldError> {
        for slice in 0..self.zz.n_slices() {
            for node in 0..self.zz.per_slice() {
                let c = self.at(slice, node);
                if !(c.zz > 0.0 && c.det() > 0.0) {
                    return Err(FieldError::NotPositive { slice, node });
                }
            }
        }
        Ok(())
    }
}

pub fn to_coordinates(surface: &Surface, grid: &DomainGrid, h: &HermitianMetricField) -> Result<CoordinateMetricField, FieldError> {
    grid.check(&h.r)?;
    let mut zz = grid.zeros();
    let mut zw = grid.zeros_complex();
    let mut ww = grid.zeros();
    for slice in 0..grid.n_y2 {
        for node in 0..grid.per_slice() {
            let p = surface.node(grid, slice, node);
            let c = frame_to_coord(&surface.coframe(p[1], p[3]), &h.at(slice, node));
            zz.slice_mut(slice)[node] = c.zz;
            zw.slice_mut(slice)[node] = c.zw;
            ww.slice_mut(slice)[node] = c.ww;
        }
    }
    Ok(CoordinateMetricField { zz, zw, ww })
}

pub fn to_frame(surface: &Surface, grid: &DomainGrid, g: &CoordinateMetricField) -> Result<HermitianMetricField, FieldError> {
    grid.check(&g.zz)?;
    let mut r = grid.zeros();
    let mut s = grid.zeros();
    let mut u = grid.zeros_complex();
    for slice in 0..grid.n_y2 {
        for node in 0..grid.per_slice() {
            let p = surface.node(grid, slice, node);
            let h = coord_to_frame(&surface.coframe(p[1], p[3]), &g.at(slice, node));
            r.slice_mut(slice)[node] = h.r;
            s.slice_mut(slice)[node] = h.s;
            u.slice_mut(slice)[node] = h.u;
        }
    }
    Ok(HermitianMetricField::form(r, s, u))
}

/// omega_TV + i ddbar psi on a torus-bundle grid, returned in frame components.
pub fn metric_from_potential(surface: &Surface, grid: &DomainGrid, psi: &ScalarField) -> Result<HermitianMetricField, FieldError> {
    let sm = surface.as_sm().ok_or(SurfaceError::WrongFamily)?;
    grid.check(psi)?;
    let op = SmOperator::new(sm, grid)?;
    let slabs: Vec<Slab<f64>> = (0..grid.n_y2).map(|i| Slab::Dense(psi.slice(i).to_vec()).compressed()).collect();
    let np = grid.per_slice();
    let mut r = grid.zeros();
    let mut s = grid.zeros();
    let mut u = grid.zeros_complex();
    for i in 0..grid.n_y2 {
        let y2 = grid.y2(i);
        let d = op.ddbar_slice(&slabs, i);
        for node in 0..np {
            let c = d.at(node);
            r.slice_mut(i)[node] = 1.0 + c.zz / y2;
            s.slice_mut(i)[node] = 1.0 + y2 * y2 * c.ww;
            u.slice_mut(i)[node] = Complex64::i() * y2.sqrt() * c.zw;
        }
    }
    HermitianMetricField::new(r, s, u)
}

/// omega_TV + i ddbar psi for a potential given on the universal cover as psi(x1, y1, x2, y2).
///
/// Derivatives are sixth-order central differences with step `h`.
pub fn metric_from_potential_fn(
    surface: &Surface,
    grid: &DomainGrid,
    psi: &dyn Fn([f64; 4]) -> f64,
    h: f64,
) -> Result<HermitianMetricField, FieldError> {
    let mut r = grid.zeros();
    let mut s = grid.zeros();
    let mut u = grid.zeros_complex();
    for slice in 0..grid.n_y2 {
        for node in 0..grid.per_slice() {
            let p = surface.node(grid, slice, node);
            let d = ddbar_at(psi, p, h);
            let e = surface.coframe(p[1], p[3]);
            let tv = frame_to_coord(&e, &FrameComponents::new(1.0, 1.0, Complex64::new(0.0, 0.0)));
            let total = CoordComponents { zz: tv.zz + d.zz, zw: tv.zw + d.zw, ww: tv.ww + d.ww };
            let f = coord_to_frame(&e, &total);
            r.slice_mut(slice)[node] = f.r;
            s.slice_mut(slice)[node] = f.s;
            u.slice_mut(slice)[node] = f.u;
        }
    }
    HermitianMetricField::new(r, s, u)
}

const D1: [f64; 3] = [3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0];
const D2: [f64; 4] = [-49.0 / 18.0, 3.0 / 2.0, -3.0 / 20.0, 1.0 / 90.0];

fn shifted(p: [f64; 4], axis: usize, d: f64) -> [f64; 4] {
    let mut q = p;
    q[axis] += d;
    q
}

fn second(f: &dyn Fn([f64; 4]) -> f64, p: [f64; 4], axis: usize, h: f64) -> f64 {
    let mut acc = D2[0] * f(p);
    for m in 1..4 {
        let d = m as f64 * h;
        acc += D2[m] * (f(shifted(p, axis, d)) + f(shifted(p, axis, -d)));
    }
    acc / (h * h)
}

fn mixed(f: &dyn Fn([f64; 4]) -> f64, p: [f64; 4], a: usize, b: usize, h: f64) -> f64 {
    let first = |q: [f64; 4]| {
        let mut acc = 0.0;
        for m in 1..4 {
            let d = m as f64 * h;
            acc += D1[m - 1] * (f(shifted(q, b, d)) - f(shifted(q, b, -d)));
        }
        acc / h
    };
    let mut acc = 0.0;
    for m in 1..4 {
        let d = m as f64 * h;
        acc += D1[m - 1] * (first(shifted(p, a, d)) - first(shifted(p, a, -d)));
    }
    acc / h
}

/// Coordinate components of i ddbar f at a point (x1, y1, x2, y2).
pub fn ddbar_at(f: &dyn Fn([f64; 4]) -> f64, p: [f64; 4], h: f64) -> CoordComponents {
    let (x1, y1, x2, y2) = (0, 1, 2, 3);
    let zz = 0.25 * (second(f, p, x1, h) + second(f, p, y1, h));
    let ww = 0.25 * (second(f, p, x2, h) + second(f, p, y2, h));
    let re = mixed(f, p, x1, x2, h) + mixed(f, p, y1, y2, h);
    let im = mixed(f, p, x1, y2, h) - mixed(f, p, y1, x2, h);
    CoordComponents { zz, zw: Complex64::new(0.25 * re, 0.25 * im), ww }
}

/// Average against the reference volume: exact fiber means, trapezoid in log y2.
pub fn volume_mean(grid: &DomainGrid, f: &ScalarField) -> f64 {
    grid.slice_weights().iter().enumerate().map(|(i, w)| w * f.slice_mean(i)).sum()
}

/// G = -r/8 + mean(r)/8.
pub fn g_of_omega(grid: &DomainGrid, omega: &HermitianMetricField) -> ScalarField {
    let mean = volume_mean(grid, &omega.r);
    omega.r.map(|r| (mean - r) / 8.0)
}

/// Integral of f against omega_TV^2 over the surface.
pub fn volume_integral(surface: &Surface, grid: &DomainGrid, f: &ScalarField) -> f64 {
    8.0 * surface.fiber_volume() * grid.log_period * volume_mean(grid, f)
}

#[derive(Debug, Clone, Serialize)]
pub struct ObstructionReport {
    pub y2: Vec<f64>,
    pub r_values: Vec<f64>,
    pub g_fiber_integrals: Vec<f64>,
    pub r_spread: f64,
    pub pairings: Vec<f64>,
    pub tolerance: f64,
    pub passed: bool,
}

pub fn gauduchon_defect(surface: &Surface, grid: &DomainGrid, omega: &HermitianMetricField, tol: f64) -> ObstructionReport {
    let vol = surface.fiber_volume();
    let g = g_of_omega(grid, omega);
    let r_values: Vec<f64> = (0..grid.n_y2).map(|i| vol * omega.r.slice_mean(i)).collect();
    let g_fiber_integrals = (0..grid.n_y2).map(|i| vol * g.slice_mean(i)).collect();
    let max = r_values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = r_values.iter().copied().fold(f64::INFINITY, f64::min);
    let w = grid.slice_weights();
    let mean: f64 = r_values.iter().zip(&w).map(|(r, w)| r * w).sum();
    let r_spread = (max - min) / mean.abs();
    let pairings = kernel_test_functions(grid.log_period, 8)
        .iter()
        .map(|psi| obstruction_pairing(surface, grid, omega, psi.as_ref()))
        .collect();
    ObstructionReport {
        y2: (0..grid.n_y2).map(|i| grid.y2(i)).collect(),
        r_values,
        g_fiber_integrals,
        r_spread,
        pairings,
        tolerance: tol,
        passed: r_spread <= tol,
    }
}

/// Integral of psi(log y2) G(omega) against omega_TV^2.
pub fn obstruction_pairing(surface: &Surface, grid: &DomainGrid, omega: &HermitianMetricField, psi: &dyn Fn(f64) -> f64) -> f64 {
    let g = g_of_omega(grid, omega);
    let weights = grid.slice_weights();
    let acc: f64 = (0..grid.n_y2).map(|i| weights[i] * psi(grid.s(i)) * g.slice_mean(i)).sum();
    8.0 * surface.fiber_volume() * grid.log_period * acc
}

/// Leading seam-periodic Fourier modes in log y2: 1, cos, sin, cos 2, ...
pub fn kernel_test_functions(log_period: f64, count: usize) -> Vec<Box<dyn Fn(f64) -> f64>> {
    (0..count)
        .map(|j| {
            let freq = ((j + 1) / 2) as f64 * 2.0 * PI / log_period;
            let f: Box<dyn Fn(f64) -> f64> = if j == 0 {
                Box::new(|_| 1.0)
            } else if j % 2 == 1 {
                Box::new(move |s: f64| (freq * s).cos())
            } else {
                Box::new(move |s: f64| (freq * s).sin())
            };
            f
        })
        .collect()
}

/// Relative spread of (omega_u ^ alpha)/omega_TV^2 = r_u/8.
pub fn slf_defect(grid: &DomainGrid, r_u: &ScalarField) -> f64 {
    let ratio = r_u.map(|r| r / 8.0);
    let max = ratio.data().iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = ratio.data().iter().copied().fold(f64::INFINITY, f64::min);
    (max - min) / volume_mean(grid, &ratio).abs()
}

pub fn write_obstruction_csv(report: &ObstructionReport, out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(out, "y2,R,G_fiber_integral")?;
    for i in 0..report.y2.len() {
        writeln!(out, "{:.17e},{:.17e},{:.17e}", report.y2[i], report.r_values[i], report.g_fiber_integrals[i])?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::build_sm;

    fn companion() -> Surface {
        Surface::Sm(build_sm(&[[0, 1, 0], [0, 0, 1], [1, 1, 0]]).unwrap())
    }

    #[test]
    fn zero_potential_gives_tricerri() {
        let s = companion();
        let grid = s.grid_torus(4, 5).unwrap();
        let h = metric_from_potential(&s, &grid, &grid.zeros()).unwrap();
        assert_eq!(h, HermitianMetricField::tricerri(&grid));
    }

    #[test]
    fn g_of_cosine_perturbation() {
        let s = companion();
        let grid = s.grid_torus(8, 5).unwrap();
        let mut h = HermitianMetricField::tricerri(&grid);
        h.r = Field::from_fn(&grid, |_, l| 1.0 + 0.5 * (2.0 * PI * grid.torus_t(l)[0]).cos());
        let g = g_of_omega(&grid, &h);
        for (l, v) in g.slice(2).iter().enumerate() {
            assert!((v + (2.0 * PI * grid.torus_t(l)[0]).cos() / 16.0).abs() < 1e-15);
        }
        let g2 = g_of_omega(&grid, &h.scaled(3.0));
        assert!(g2.data().iter().zip(g.data()).all(|(a, b)| (a - 3.0 * b).abs() < 1e-14));
        // (1.5 - 0.5) / 8 over a mean of 1/8
        assert!((slf_defect(&grid, &h.r) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn large_potential_is_rejected() {
        let s = companion();
        let grid = s.grid_torus(8, 5).unwrap();
        let psi = Field::from_fn(&grid, |_, l| 50.0 * (2.0 * PI * grid.torus_t(l)[1]).cos());
        assert!(matches!(metric_from_potential(&s, &grid, &psi), Err(FieldError::NotPositive { .. })));
    }

    #[test]
    fn pointwise_ddbar_matches_closed_form() {
        let f = |p: [f64; 4]| p[0] * p[0] * p[3] + (p[2] * p[1]).sin();
        let p = [0.3, -0.2, 0.5, 1.4];
        let d = ddbar_at(&f, p, 1e-3);
        // f_x1x1 = 2 y2, f_y1y1 = -x2^2 sin(x2 y1)
        let s = (p[2] * p[1]).sin();
        assert!((d.zz - 0.25 * (2.0 * p[3] - p[2] * p[2] * s)).abs() < 1e-8);
        assert!((d.ww - 0.25 * (-p[1] * p[1] * s)).abs() < 1e-8);
        // f_x1y2 = 2 x1, f_y1x2 = cos - x2 y1 sin
        let c = (p[2] * p[1]).cos();
        assert!((d.zw.im - 0.25 * (2.0 * p[0] - (c - p[2] * p[1] * s))).abs() < 1e-8);
        assert!(d.zw.re.abs() < 1e-8);
    }
}
