//! Partial Fourier solver on nilmanifold-bundle cell grids.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::ode::{bounded_ode_solve, window_half_width};
use super::{check_means, slice_means, DecayPoint, LeafPotential, SlfError, SolverOptions, SolverReport};
use crate::fft::{wavenumber, GridFft};
use crate::grid::{DomainGrid, FiberGrid, ScalarField};
use crate::surface::{CellShape, NilPoint, SurfaceSplus};

const DIVISOR_FLOOR: f64 = 1e-14;
const PHASE_TOL: f64 = 1e-12;
/// Ten-point centered second derivative, weights for offsets 0..=5.
const D2: [f64; 6] = [-5269.0 / 1800.0, 5.0 / 3.0, -5.0 / 21.0, 5.0 / 126.0, -5.0 / 1008.0, 1.0 / 3150.0];

/// Representative of a point in the fundamental cell with the Fourier phase picked up on the way.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellReduction {
    pub theta: f64,
    pub sigma: f64,
    pub x2: f64,
    pub y1: f64,
    /// f_k(cell point) = phase * f_k(original point).
    pub phase: Complex64,
    /// x1 shift accumulated by the generators.
    pub x1_shift: f64,
}

fn cell_of(surface: &SurfaceSplus, y2: f64) -> Result<CellShape, SlfError> {
    let shape = surface.cell_shape(y2);
    if !(shape.height.is_finite() && shape.height > 0.0 && shape.a1 != 0.0) {
        return Err(SlfError::DegenerateLattice);
    }
    Ok(shape)
}

fn wrap_theta(surface: &SurfaceSplus, shape: &CellShape, y2: f64, x: NilPoint) -> NilPoint {
    let m = (x[2] / shape.a1).floor() as i64;
    surface.generator_power(0, -m, y2, x)
}

fn wrap_sigma(surface: &SurfaceSplus, shape: &CellShape, y2: f64, x: NilPoint) -> NilPoint {
    let (_, sigma) = shape.coords(x[2], x[1]);
    let n = (sigma / shape.height).floor() as i64;
    surface.generator_power(1, -n * shape.orientation as i64, y2, x)
}

fn fourier_phase(surface: &SurfaceSplus, k: i64, shift: f64) -> Complex64 {
    Complex64::from_polar(1.0, -2.0 * PI * k as f64 * shift / surface.c3)
}

pub fn reduce_to_cell(surface: &SurfaceSplus, point: (f64, f64), y2: f64, k: i64) -> Result<CellReduction, SlfError> {
    let shape = cell_of(surface, y2)?;
    let start = [0.0, point.1, point.0];
    let a = wrap_theta(surface, &shape, y2, wrap_sigma(surface, &shape, y2, start));
    let b = wrap_theta(surface, &shape, y2, wrap_sigma(surface, &shape, y2, wrap_theta(surface, &shape, y2, start)));
    let (pa, pb) = (fourier_phase(surface, k, a[0]), fourier_phase(surface, k, b[0]));
    let same_point = (a[1] - b[1]).abs() < 1e-9 && (a[2] - b[2]).abs() < 1e-9;
    if same_point && (pa - pb).norm() > PHASE_TOL {
        return Err(SlfError::PathDependentPhase((pa - pb).norm()));
    }
    let (theta, sigma) = shape.coords(a[2], a[1]);
    Ok(CellReduction { theta, sigma, x2: a[2], y1: a[1], phase: pa, x1_shift: a[0] })
}

struct CellDims {
    n_theta: usize,
    n_sigma: usize,
    n_x1: usize,
}

fn dims(grid: &DomainGrid) -> Result<CellDims, SlfError> {
    match grid.fiber {
        FiberGrid::Cell { n_theta, n_sigma, n_x1 } => Ok(CellDims { n_theta, n_sigma, n_x1 }),
        FiberGrid::Torus { .. } => Err(crate::surface::SurfaceError::WrongFamily.into()),
    }
}

/// Gauge Phi_k(theta) making e^{-i Phi_k} f_k periodic in theta.
fn gauge(surface: &SurfaceSplus, k: i64, theta: f64) -> f64 {
    let a1 = surface.a()[0];
    let b1 = surface.b()[0];
    -2.0 * PI * k as f64 * (b1 * a1 * theta * (theta - 1.0) / 2.0 + surface.c1 * theta) / surface.c3
}

/// x1 Fourier coefficients of one slice, indexed [k][it * n_sigma + js] for k = 0..=k_max.
fn x1_coefficients(surface: &SurfaceSplus, d: &CellDims, data: &[f64], k_max: usize) -> Vec<Vec<Complex64>> {
    let fft = GridFft::new(&[d.n_x1]);
    let cells = d.n_theta * d.n_sigma;
    let sign = surface.c3.signum() as i64;
    let mut out = vec![vec![Complex64::new(0.0, 0.0); cells]; k_max + 1];
    for c in 0..cells {
        let spec = fft.forward_real(&data[c * d.n_x1..(c + 1) * d.n_x1]);
        for (k, row) in out.iter_mut().enumerate() {
            let idx = (sign * k as i64).rem_euclid(d.n_x1 as i64) as usize;
            row[c] = spec[idx] / d.n_x1 as f64;
        }
    }
    out
}

fn x1_synthesis(surface: &SurfaceSplus, d: &CellDims, coeffs: &[Vec<Complex64>]) -> Vec<f64> {
    let fft = GridFft::new(&[d.n_x1]);
    let cells = d.n_theta * d.n_sigma;
    let sign = surface.c3.signum() as i64;
    let n = d.n_x1 as i64;
    let mut out = Vec::with_capacity(cells * d.n_x1);
    for c in 0..cells {
        let mut spec = vec![Complex64::new(0.0, 0.0); d.n_x1];
        for (k, row) in coeffs.iter().enumerate() {
            let v = row[c] * d.n_x1 as f64;
            if k == 0 {
                spec[0] += v.re;
            } else {
                spec[(sign * k as i64).rem_euclid(n) as usize] += v;
                spec[(-sign * k as i64).rem_euclid(n) as usize] += v.conj();
            }
        }
        out.extend(fft.inverse_to_real(spec));
    }
    out
}

/// Evaluates one x1 mode of a slice at (theta, sigma_j + n H) for any real theta and integer extended sigma index.
struct ModeSampler<'a> {
    surface: &'a SurfaceSplus,
    shape: CellShape,
    y2: f64,
    k: i64,
    n_sigma: usize,
    /// Gauged theta spectra per sigma row, signed wavenumbers.
    spectra: Vec<Vec<(f64, Complex64)>>,
}

impl<'a> ModeSampler<'a> {
    fn new(surface: &'a SurfaceSplus, y2: f64, k: i64, d: &CellDims, values: &[Complex64]) -> Result<Self, SlfError> {
        let shape = cell_of(surface, y2)?;
        let fft = GridFft::new(&[d.n_theta]);
        let spectra = (0..d.n_sigma)
            .map(|js| {
                let mut row: Vec<Complex64> = (0..d.n_theta)
                    .map(|it| {
                        let theta = it as f64 / d.n_theta as f64;
                        values[it * d.n_sigma + js] * Complex64::from_polar(1.0, -gauge(surface, k, theta))
                    })
                    .collect();
                fft.forward_axes(&mut row, &[0]);
                row.iter()
                    .enumerate()
                    .filter_map(|(i, v)| wavenumber(i, d.n_theta).map(|w| (w as f64, v / d.n_theta as f64)))
                    .collect()
            })
            .collect();
        Ok(Self { surface, shape, y2, k, n_sigma: d.n_sigma, spectra })
    }

    fn row_value(&self, theta: f64, js: usize) -> Complex64 {
        let periodic: Complex64 = self.spectra[js].iter().map(|(w, c)| c * Complex64::from_polar(1.0, 2.0 * PI * w * theta)).sum();
        periodic * Complex64::from_polar(1.0, gauge(self.surface, self.k, theta))
    }

    fn at(&self, theta: f64, j_ext: i64) -> Complex64 {
        let n = j_ext.div_euclid(self.n_sigma as i64);
        let js = j_ext.rem_euclid(self.n_sigma as i64) as usize;
        if n == 0 {
            return self.row_value(theta, js);
        }
        let power = n * self.shape.orientation as i64;
        let theta_q = theta - power as f64 * self.shape.a2 / self.shape.a1;
        let sigma = js as f64 * self.shape.height / self.n_sigma as f64;
        let (x2, y1) = self.shape.point(theta_q, sigma);
        let moved = self.surface.generator_power(1, power, self.y2, [0.0, y1, x2]);
        self.row_value(theta_q, js) * fourier_phase(self.surface, self.k, moved[0])
    }

    /// Samples along the y1 line through theta_i with `margin` extra points on each side.
    fn line(&self, theta: f64, margin: usize) -> Vec<Complex64> {
        let m = margin as i64;
        (-m..self.n_sigma as i64 + m).map(|j| self.at(theta, j)).collect()
    }

    /// Value at an arbitrary (x2, y1) of the fiber, eighth-order Lagrange in sigma.
    fn at_point(&self, x2: f64, y1: f64) -> Complex64 {
        let (theta, sigma) = self.shape.coords(x2, y1);
        let h = self.shape.height / self.n_sigma as f64;
        let t = sigma / h;
        let j0 = t.floor() as i64;
        let nodes: Vec<i64> = (j0 - 3..=j0 + 4).collect();
        nodes
            .iter()
            .map(|&j| {
                let w: f64 = nodes.iter().filter(|&&m| m != j).map(|&m| (t - m as f64) / (j - m) as f64).product();
                self.at(theta, j) * w
            })
            .sum()
    }
}

fn k_range(d: &CellDims, opts: &SolverOptions) -> usize {
    opts.k_max.min(d.n_x1 / 2 - 1)
}

struct ZeroModeSolve {
    u: Vec<Complex64>,
    min_divisor: f64,
    liouville: f64,
    decay: Vec<DecayPoint>,
}

/// Spectral solve of u'' = g in y1 for the x1-independent part on one slice.
fn solve_zero_mode(surface: &SurfaceSplus, shape: &CellShape, d: &CellDims, g: &[Complex64]) -> Result<ZeroModeSolve, SlfError> {
    let (nt, ns) = (d.n_theta, d.n_sigma);
    let fft = GridFft::new(&[nt, ns]);
    let s = shape.orientation;
    let span = shape.a1 * shape.height;
    let modulation = |n: i64, js: usize, sign: f64| {
        let sigma = js as f64 * shape.height / ns as f64;
        Complex64::from_polar(1.0, sign * 2.0 * PI * n as f64 * s * shape.a2 * sigma / span)
    };
    let mut spec = g.to_vec();
    fft.forward_axes(&mut spec, &[0]);
    for it in 0..nt {
        let n = wavenumber(it, nt).unwrap_or(0);
        for js in 0..ns {
            spec[it * ns + js] *= modulation(n, js, 1.0);
        }
    }
    fft.forward_axes(&mut spec, &[1]);
    let degree = surface.spectral.degree_d.max(2) as f64;
    let mut min_divisor = f64::INFINITY;
    let mut liouville = f64::INFINITY;
    let mut decay = Vec::new();
    for it in 0..nt {
        for js in 0..ns {
            let v = &mut spec[it * ns + js];
            let (Some(n), Some(m)) = (wavenumber(it, nt), wavenumber(js, ns)) else {
                *v = Complex64::new(0.0, 0.0);
                continue;
            };
            if n == 0 && m == 0 {
                *v = Complex64::new(0.0, 0.0);
                continue;
            }
            let lin = m as f64 * shape.a1 - n as f64 * s * shape.a2;
            if lin.abs() < DIVISOR_FLOOR {
                return Err(SlfError::DivisorUnderflow { mode: [0, n, m], divisor: lin * lin });
            }
            let q = lin / span;
            let norm = ((n * n + m * m) as f64).sqrt();
            min_divisor = min_divisor.min(q * q);
            liouville = liouville.min(q * q * norm.powf(2.0 * (degree - 1.0)));
            *v *= -32.0 / (4.0 * PI * PI * q * q);
            decay.push(DecayPoint { mode_norm: norm, abs_coeff: v.norm() / (nt * ns) as f64, divisor: q * q });
        }
    }
    fft.inverse_axes(&mut spec, &[1]);
    for it in 0..nt {
        let n = wavenumber(it, nt).unwrap_or(0);
        for js in 0..ns {
            spec[it * ns + js] *= modulation(n, js, -1.0);
        }
    }
    fft.inverse_axes(&mut spec, &[0]);
    Ok(ZeroModeSolve { u: spec, min_divisor, liouville, decay })
}

/// u_k'' - (2 pi k / c3)^2 u_k = g_k along every theta line of one slice.
fn solve_line_mode(
    surface: &SurfaceSplus,
    y2: f64,
    k: i64,
    d: &CellDims,
    g: &[Complex64],
    tol: f64,
) -> Result<Vec<Complex64>, SlfError> {
    let g_max = g.iter().fold(0.0f64, |m, v| m.max(v.norm()));
    if g_max == 0.0 {
        return Ok(vec![Complex64::new(0.0, 0.0); g.len()]);
    }
    let sampler = ModeSampler::new(surface, y2, k, d, g)?;
    let a = 2.0 * PI * k as f64 / surface.c3.abs();
    let h = sampler.shape.height / d.n_sigma as f64;
    // sampled lines exceed the grid maximum slightly through interpolation
    let margin = (window_half_width(a, 2.0 * g_max, tol) / h).ceil() as usize;
    let mut out = vec![Complex64::new(0.0, 0.0); g.len()];
    for it in 0..d.n_theta {
        let theta = it as f64 / d.n_theta as f64;
        let line = sampler.line(theta, margin);
        let sol = bounded_ode_solve(a, &line, h, margin, tol)?;
        for js in 0..d.n_sigma {
            out[it * d.n_sigma + js] = sol.u[js];
        }
    }
    Ok(out)
}

pub fn solve_splus(
    surface: &SurfaceSplus,
    grid: &DomainGrid,
    rhs: &ScalarField,
    opts: &SolverOptions,
) -> Result<(LeafPotential, SolverReport), SlfError> {
    grid.check(rhs)?;
    check_means(rhs, opts.mean_tol)?;
    let d = dims(grid)?;
    let k_max = k_range(&d, opts);
    let mut u = grid.zeros();
    let mut min_divisor = f64::INFINITY;
    let mut liouville = f64::INFINITY;
    let mut reality = 0.0f64;
    let mut decay = Vec::new();
    let mid = grid.n_y2 / 2;
    for i in 0..grid.n_y2 {
        let y2 = grid.y2(i);
        let shape = cell_of(surface, y2)?;
        let g = x1_coefficients(surface, &d, rhs.slice(i), k_max);
        let scaled: Vec<Vec<Complex64>> = g.iter().map(|row| row.iter().map(|v| v * 32.0).collect()).collect();
        let zero = solve_zero_mode(surface, &shape, &d, &g[0])?;
        min_divisor = min_divisor.min(zero.min_divisor);
        liouville = liouville.min(zero.liouville);
        reality = reality.max(zero.u.iter().fold(0.0f64, |m, v| m.max(v.im.abs())));
        if i == mid {
            decay = zero.decay;
        }
        let mut coeffs = vec![zero.u];
        for (k, row) in scaled.iter().enumerate().skip(1) {
            coeffs.push(solve_line_mode(surface, y2, k as i64, &d, row, opts.tol)?);
        }
        u.set_slice(i, &x1_synthesis(surface, &d, &coeffs));
    }
    decay.sort_by(|a, b| a.mode_norm.total_cmp(&b.mode_norm));

    let lap = leafwise_laplacian(surface, grid, &u, opts)?;
    let residual_linf = lap.max_abs_diff(rhs);
    let seam = seam_residual(surface, grid, &u, opts)?;
    let limit = 1e2 * opts.tol * u.max_abs().max(1.0);
    if seam > limit {
        return Err(SlfError::SeamMismatch { residual: seam, limit });
    }
    let report = SolverReport { truncation: k_max, min_divisor, liouville_check: liouville, residual_linf, reality_defect: reality, decay };
    let mean_per_slice = slice_means(&u);
    Ok((LeafPotential { u, seam_residual: seam, mean_per_slice }, report))
}

/// Delta_D u = (u_x1x1 + u_y1y1) / 32, spectral in x1 and for the x1-independent part, tenth-order differences along y1 otherwise.
pub fn leafwise_laplacian(surface: &SurfaceSplus, grid: &DomainGrid, u: &ScalarField, opts: &SolverOptions) -> Result<ScalarField, SlfError> {
    grid.check(u)?;
    let d = dims(grid)?;
    let k_max = k_range(&d, opts);
    let mut out = grid.zeros();
    for i in 0..grid.n_y2 {
        let y2 = grid.y2(i);
        let shape = cell_of(surface, y2)?;
        let coeffs = x1_coefficients(surface, &d, u.slice(i), k_max);
        let mut lap = vec![zero_mode_second_derivative(&shape, &d, &coeffs[0])];
        let h = shape.height / d.n_sigma as f64;
        for (k, row) in coeffs.iter().enumerate().skip(1) {
            let sampler = ModeSampler::new(surface, y2, k as i64, &d, row)?;
            let a2 = (2.0 * PI * k as f64 / surface.c3).powi(2);
            let mut l = vec![Complex64::new(0.0, 0.0); row.len()];
            for it in 0..d.n_theta {
                let line = sampler.line(it as f64 / d.n_theta as f64, 5);
                for js in 0..d.n_sigma {
                    let c = js + 5;
                    let second = D2[0] * line[c] + (1..6).map(|m| D2[m] * (line[c + m] + line[c - m])).sum::<Complex64>();
                    l[it * d.n_sigma + js] = second / (h * h) - a2 * line[c];
                }
            }
            lap.push(l);
        }
        let values = x1_synthesis(surface, &d, &lap);
        out.set_slice(i, &values.iter().map(|v| v / 32.0).collect::<Vec<_>>());
    }
    Ok(out)
}

fn zero_mode_second_derivative(shape: &CellShape, d: &CellDims, f: &[Complex64]) -> Vec<Complex64> {
    let (nt, ns) = (d.n_theta, d.n_sigma);
    let fft = GridFft::new(&[nt, ns]);
    let s = shape.orientation;
    let span = shape.a1 * shape.height;
    let modulation = |n: i64, js: usize, sign: f64| {
        let sigma = js as f64 * shape.height / ns as f64;
        Complex64::from_polar(1.0, sign * 2.0 * PI * n as f64 * s * shape.a2 * sigma / span)
    };
    let mut spec = f.to_vec();
    fft.forward_axes(&mut spec, &[0]);
    for it in 0..nt {
        let n = wavenumber(it, nt).unwrap_or(0);
        for js in 0..ns {
            spec[it * ns + js] *= modulation(n, js, 1.0);
        }
    }
    fft.forward_axes(&mut spec, &[1]);
    for it in 0..nt {
        for js in 0..ns {
            let v = &mut spec[it * ns + js];
            match (wavenumber(it, nt), wavenumber(js, ns)) {
                (Some(n), Some(m)) => {
                    let q = (m as f64 * shape.a1 - n as f64 * s * shape.a2) / span;
                    *v *= -4.0 * PI * PI * q * q;
                }
                _ => *v = Complex64::new(0.0, 0.0),
            }
        }
    }
    fft.inverse_axes(&mut spec, &[1]);
    for it in 0..nt {
        let n = wavenumber(it, nt).unwrap_or(0);
        for js in 0..ns {
            spec[it * ns + js] *= modulation(n, js, -1.0);
        }
    }
    fft.inverse_axes(&mut spec, &[0]);
    spec
}

/// max |u(p, 1) - u(f0(p), gamma)| over the nodes of the bottom slice.
pub fn seam_residual(surface: &SurfaceSplus, grid: &DomainGrid, u: &ScalarField, opts: &SolverOptions) -> Result<f64, SlfError> {
    let d = dims(grid)?;
    let k_max = k_range(&d, opts);
    let top = grid.n_y2 - 1;
    let y2_top = grid.y2(top);
    let coeffs = x1_coefficients(surface, &d, u.slice(top), k_max);
    let samplers = coeffs
        .iter()
        .enumerate()
        .map(|(k, row)| ModeSampler::new(surface, y2_top, k as i64, &d, row))
        .collect::<Result<Vec<_>, _>>()?;
    let surf = crate::surface::Surface::Splus(surface.clone());
    let mut worst = 0.0f64;
    for local in 0..grid.per_slice() {
        let p = surf.node(grid, 0, local);
        let q = surface.glue_point([p[0], p[1], p[2]]);
        let mut value = 0.0;
        for (k, sampler) in samplers.iter().enumerate() {
            let c = sampler.at_point(q[2], q[1]);
            let wave = Complex64::from_polar(1.0, 2.0 * PI * k as f64 * q[0] / surface.c3);
            value += if k == 0 { c.re } else { 2.0 * (c * wave).re };
        }
        worst = worst.max((value - u.slice(0)[local]).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::build_splus;

    fn surface() -> SurfaceSplus {
        build_splus(&[[2, 1], [1, 1]], 1, 0, 1, Complex64::new(0.2, 0.3)).unwrap()
    }

    #[test]
    fn sampler_continues_beyond_the_cell() {
        use crate::potentials::{OrbitSeed, SplusPotential};
        let s = surface();
        let surf = crate::surface::Surface::Splus(s.clone());
        let grid = surf.grid_cell(32, 32, 8, 5).unwrap();
        let seed = OrbitSeed { k: 1, center: [0.3, 0.2], width: 0.35, amplitude: Complex64::new(1.0, 0.5) };
        let pot = SplusPotential::new(&s, vec![seed], vec![]);
        let slice = 2;
        let y2 = grid.y2(slice);
        let field = pot.sample(&surf, &grid);
        let d = dims(&grid).unwrap();
        let coeffs = x1_coefficients(&s, &d, field.slice(slice), 1);
        let sampler = ModeSampler::new(&s, y2, 1, &d, &coeffs[1]).unwrap();
        let shape = s.cell_shape(y2);
        for (theta, sigma) in [(0.31, 1.7 * shape.height), (0.62, -0.45 * shape.height), (0.05, 2.2 * shape.height)] {
            let (x2, y1) = shape.point(theta, sigma);
            let exact: Complex64 = (0..8)
                .map(|l| {
                    let x1 = l as f64 * s.x1_period() / 8.0;
                    Complex64::from_polar(pot.value([x1, y1, x2, y2]), -2.0 * PI * x1 / s.c3) / 8.0
                })
                .sum();
            assert!((sampler.at_point(x2, y1) - exact).norm() < 1e-5 * exact.norm().max(1e-3), "{theta} {sigma}");
        }
    }

    #[test]
    fn cell_point_is_fixed() {
        let s = surface();
        let shape = s.cell_shape(1.3);
        let (x2, y1) = shape.point(0.4, 0.3 * shape.height);
        let r = reduce_to_cell(&s, (x2, y1), 1.3, 1).unwrap();
        assert!((r.theta - 0.4).abs() < 1e-14 && (r.sigma - 0.3 * shape.height).abs() < 1e-14);
        assert!((r.phase - Complex64::new(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn first_generator_phase() {
        let s = surface();
        let y2 = 1.3;
        let shape = s.cell_shape(y2);
        let (x2, y1) = shape.point(0.25, 0.5 * shape.height);
        let [a1, _] = s.a();
        let [b1, _] = s.b();
        let moved = (x2 + a1, y1 + y2 * b1);
        let r0 = reduce_to_cell(&s, moved, y2, 0).unwrap();
        assert!((r0.x2 - x2).abs() < 1e-13 && (r0.y1 - y1).abs() < 1e-13);
        assert_eq!(r0.phase, Complex64::new(1.0, 0.0));
        let r1 = reduce_to_cell(&s, moved, y2, 1).unwrap();
        let expected = Complex64::from_polar(1.0, 2.0 * PI * (b1 * x2 / s.c3 + s.c1 / s.c3));
        assert!((r1.phase - expected).norm() < 1e-12);
    }

    #[test]
    fn far_points_reduce_consistently() {
        let s = surface();
        for (i, y2) in [1.0, 1.7, 2.6].iter().enumerate() {
            let p = (3.7 - i as f64 * 5.1, -8.2 + i as f64 * 7.3);
            let r = reduce_to_cell(&s, p, *y2, 2).unwrap();
            let h = s.cell_shape(*y2).height;
            assert!((0.0..1.0).contains(&r.theta) && r.sigma >= -1e-12 && r.sigma < h + 1e-12);
        }
    }
}
