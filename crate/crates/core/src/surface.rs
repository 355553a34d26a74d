//! Geometric data of the two surface families: lattices, the leaf matrix, coframes and gluing.

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::algebra::{
    self, spectral_sm, spectral_splus, transpose3, unimodular_inverse3, AlgebraError, IntMatrix2, IntMatrix3,
    LiouvilleMargin, SpectralDataSm, SpectralDataSplus,
};
use crate::grid::{DomainGrid, FiberGrid, GridError};

const KERNEL_TOL: f64 = 1e-8;
const COCYCLE_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SurfaceError {
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("leaf matrix does not annihilate the real eigenvector (ratio {0:.3e})")]
    KernelMismatch(f64),
    #[error("lattice basis is singular")]
    SingularLattice,
    #[error("r must be nonzero")]
    InvalidR,
    #[error("structure constants fail their linear system (residual {0:.3e})")]
    StructureResidual(f64),
    #[error("grid does not belong to this surface family")]
    WrongFamily,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Family {
    Sm,
    Splus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GlueDirection {
    /// From heights near the period down to heights near 1: out(t) = in(M^T t).
    Down,
    /// From heights near 1 up to heights near the period: out(t) = in(M^{-T} t).
    Up,
}

#[derive(Debug, Clone, Serialize)]
pub struct SurfaceSm {
    pub spectral: SpectralDataSm,
    pub lattice: [[f64; 3]; 3],
    pub eps: f64,
    pub a: [f64; 3],
    pub b: [f64; 3],
    pub c: [f64; 3],
    pub z: [[f64; 3]; 3],
    pub z_eigenvalues: [f64; 3],
    pub glue_matrix: IntMatrix3,
    pub glue_inverse: IntMatrix3,
    pub kernel_residual: f64,
    pub ratio_margin: LiouvilleMargin,
}

pub fn build_sm(m: &IntMatrix3) -> Result<SurfaceSm, SurfaceError> {
    let spectral = spectral_sm(m)?;
    let mut lattice = [[0.0; 3]; 3];
    for j in 0..3 {
        lattice[0][j] = spectral.m_vec[j].re;
        lattice[1][j] = spectral.m_vec[j].im;
        lattice[2][j] = spectral.ell[j];
    }
    let p = Matrix3::from_fn(|i, j| lattice[i][j]);
    let eps = p.determinant();
    let inv = p.try_inverse().filter(|_| eps.abs() > 1e-14).ok_or(SurfaceError::SingularLattice)?;
    let col = |j: usize| [inv[(0, j)], inv[(1, j)], inv[(2, j)]];
    let (a, b, c) = (col(0), col(1), col(2));
    let mut z = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            z[i][j] = a[i] * a[j] + b[i] * b[j];
        }
    }
    let zm = Matrix3::from_fn(|i, j| z[i][j]);
    let ell = Vector3::from(spectral.ell);
    let z_norm = zm.norm().max(1.0);
    let kernel_residual = (zm * ell).norm() / (ell.norm() * z_norm);
    if kernel_residual > KERNEL_TOL {
        return Err(SurfaceError::KernelMismatch(kernel_residual));
    }
    let mut ev: Vec<f64> = SymmetricEigen::new(zm).eigenvalues.iter().copied().collect();
    ev.sort_by(|x, y| x.total_cmp(y));
    let glue_matrix = transpose3(m);
    let glue_inverse = unimodular_inverse3(&glue_matrix)?;
    let ratio_margin = algebra::liouville_margin(spectral.ratio, spectral.degree_d.max(2), 1000)?;
    Ok(SurfaceSm {
        spectral,
        lattice,
        eps,
        a,
        b,
        c,
        z,
        z_eigenvalues: [ev[0], ev[1], ev[2]],
        glue_matrix,
        glue_inverse,
        kernel_residual,
        ratio_margin,
    })
}

impl SurfaceSm {
    pub fn period(&self) -> f64 {
        self.spectral.lambda
    }

    pub fn mu(&self) -> Complex64 {
        self.spectral.mu
    }

    /// Numerical rank of the leaf matrix relative to its largest eigenvalue.
    pub fn z_rank(&self, tol: f64) -> usize {
        let top = self.z_eigenvalues[2].abs().max(f64::MIN_POSITIVE);
        self.z_eigenvalues.iter().filter(|v| v.abs() > tol * top).count()
    }

    /// k^T Z k.
    pub fn divisor(&self, k: [i64; 3]) -> f64 {
        let kf = k.map(|v| v as f64);
        let mut acc = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                acc += kf[i] * self.z[i][j] * kf[j];
            }
        }
        acc
    }

    pub fn dot_a(&self, k: [i64; 3]) -> f64 {
        (0..3).map(|i| self.a[i] * k[i] as f64).sum()
    }

    pub fn dot_b(&self, k: [i64; 3]) -> f64 {
        (0..3).map(|i| self.b[i] * k[i] as f64).sum()
    }

    pub fn dot_c(&self, k: [i64; 3]) -> f64 {
        (0..3).map(|i| self.c[i] * k[i] as f64).sum()
    }

    /// (x1, y1, x2) of lattice coordinates t.
    pub fn point(&self, t: [f64; 3]) -> [f64; 3] {
        let mut x = [0.0; 3];
        for i in 0..3 {
            x[i] = (0..3).map(|j| self.lattice[i][j] * t[j]).sum();
        }
        x
    }

    fn glue_int(&self, dir: GlueDirection) -> &IntMatrix3 {
        match dir {
            GlueDirection::Down => &self.glue_matrix,
            GlueDirection::Up => &self.glue_inverse,
        }
    }

    /// Index remap of a torus slice along the gluing map.
    pub fn transport<T: Copy>(&self, n: usize, values: &[T], dir: GlueDirection) -> Vec<T> {
        let mat = self.glue_int(dir);
        let ni = n as i64;
        let mut out = Vec::with_capacity(values.len());
        for i in 0..ni {
            for j in 0..ni {
                for k in 0..ni {
                    let src = algebra::apply3(mat, [i, j, k]);
                    let w = |v: i64| v.rem_euclid(ni) as usize;
                    out.push(values[(w(src[0]) * n + w(src[1])) * n + w(src[2])]);
                }
            }
        }
        out
    }

    /// Precomputed permutation for repeated transports.
    pub fn transport_map(&self, n: usize, dir: GlueDirection) -> Vec<usize> {
        let idx: Vec<usize> = (0..n * n * n).collect();
        self.transport(n, &idx, dir)
    }

    /// Multipliers of (g_zz, g_zw, g_ww) carried across the seam.
    pub fn metric_glue_factors(&self, dir: GlueDirection) -> (f64, Complex64, f64) {
        let mu = self.mu();
        let lam = self.period();
        match dir {
            GlueDirection::Down => (mu.norm_sqr(), mu * lam, lam * lam),
            GlueDirection::Up => (1.0 / mu.norm_sqr(), 1.0 / (mu * lam), 1.0 / (lam * lam)),
        }
    }

    /// Multiplier of the frame off-diagonal component across the seam (unit modulus).
    pub fn frame_glue_factor(&self, dir: GlueDirection) -> Complex64 {
        let f = self.mu() * self.period().sqrt();
        match dir {
            GlueDirection::Down => f,
            GlueDirection::Up => f.conj(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SurfaceSplus {
    pub spectral: SpectralDataSplus,
    pub p: i64,
    pub q: i64,
    pub r: i64,
    pub t_param: [f64; 2],
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub e1: f64,
    pub e2: f64,
    pub m_twist: f64,
    pub det_ab: f64,
    pub structure_residual: f64,
    pub slope_margin: LiouvilleMargin,
}

pub fn build_splus(n: &IntMatrix2, p: i64, q: i64, r: i64, t_param: Complex64) -> Result<SurfaceSplus, SurfaceError> {
    if r == 0 {
        return Err(SurfaceError::InvalidR);
    }
    let spectral = spectral_splus(n)?;
    let [a1, a2] = spectral.a_vec;
    let [b1, b2] = spectral.b_vec;
    let nf = n.map(|row| row.map(|v| v as f64));
    let e = |j: usize| {
        let (n1, n2) = (nf[j][0], nf[j][1]);
        0.5 * n1 * (n1 - 1.0) * a1 * b1 + 0.5 * n2 * (n2 - 1.0) * a2 * b2 + n1 * n2 * b1 * a2
    };
    let (e1, e2) = (e(0), e(1));
    let c3 = (b1 * a2 - b2 * a1) / r as f64;
    let rhs = [e1 + c3 * p as f64, e2 + c3 * q as f64];
    // (I - N) c = rhs
    let m = [[1.0 - nf[0][0], -nf[0][1]], [-nf[1][0], 1.0 - nf[1][1]]];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let c1 = (rhs[0] * m[1][1] - m[0][1] * rhs[1]) / det;
    let c2 = (m[0][0] * rhs[1] - m[1][0] * rhs[0]) / det;
    let res = [c1 - (c1 * nf[0][0] + c2 * nf[0][1]) - rhs[0], c2 - (c1 * nf[1][0] + c2 * nf[1][1]) - rhs[1]];
    let scale = 1.0 + c1.abs().max(c2.abs()) + rhs[0].abs().max(rhs[1].abs());
    let structure_residual = res[0].hypot(res[1]) / scale;
    if structure_residual > COCYCLE_TOL {
        return Err(SurfaceError::StructureResidual(structure_residual));
    }
    let slope_margin = algebra::liouville_margin(a2 / a1, spectral.degree_d.max(2), 1000)?;
    let gamma = spectral.gamma;
    Ok(SurfaceSplus {
        spectral,
        p,
        q,
        r,
        t_param: [t_param.re, t_param.im],
        c1,
        c2,
        c3,
        e1,
        e2,
        m_twist: t_param.im / gamma.ln(),
        det_ab: a1 * b2 - a2 * b1,
        structure_residual,
        slope_margin,
    })
}

/// A point (x1, y1, x2) of a fiber of the nilmanifold bundle.
pub type NilPoint = [f64; 3];

impl SurfaceSplus {
    pub fn period(&self) -> f64 {
        self.spectral.gamma
    }

    pub fn a(&self) -> [f64; 2] {
        self.spectral.a_vec
    }

    pub fn b(&self) -> [f64; 2] {
        self.spectral.b_vec
    }

    pub fn c(&self, j: usize) -> f64 {
        if j == 0 {
            self.c1
        } else {
            self.c2
        }
    }

    /// j-th lattice generator (j = 0, 1) raised to `power`, acting on the fiber at height y2.
    pub fn generator_power(&self, j: usize, power: i64, y2: f64, x: NilPoint) -> NilPoint {
        let (a, b, c) = (self.a()[j], self.b()[j], self.c(j));
        let n = power as f64;
        [x[0] + n * b * x[2] + b * a * n * (n - 1.0) / 2.0 + n * c, x[1] + n * y2 * b, x[2] + n * a]
    }

    pub fn central_shift(&self, power: i64, x: NilPoint) -> NilPoint {
        [x[0] + power as f64 * self.c3, x[1], x[2]]
    }

    /// Action of the gluing automorphism: fiber at y2 to fiber at period*y2.
    pub fn glue_point(&self, x: NilPoint) -> NilPoint {
        [x[0] + self.t_param[0], x[1] + self.t_param[1], self.period() * x[2]]
    }

    /// (det, height H, a1) of the sheared cell at height y2.
    pub fn cell_shape(&self, y2: f64) -> CellShape {
        let d = y2 * self.det_ab;
        let a1 = self.a()[0];
        CellShape { a1, a2: self.a()[1], b1y: y2 * self.b()[0], height: d.abs() / a1, orientation: d.signum() }
    }

    pub fn x1_period(&self) -> f64 {
        self.c3.abs()
    }
}

/// Fundamental cell {theta v1 + sigma e_y1 : theta in [0,1), sigma in [0,height)} of the period lattice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellShape {
    pub a1: f64,
    pub a2: f64,
    pub b1y: f64,
    pub height: f64,
    pub orientation: f64,
}

impl CellShape {
    /// (x2, y1) of cell coordinates.
    pub fn point(&self, theta: f64, sigma: f64) -> (f64, f64) {
        (theta * self.a1, theta * self.b1y + sigma)
    }

    pub fn coords(&self, x2: f64, y1: f64) -> (f64, f64) {
        let theta = x2 / self.a1;
        (theta, y1 - theta * self.b1y)
    }
}

#[derive(Debug, Clone, Serialize)]
pub enum Surface {
    Sm(SurfaceSm),
    Splus(SurfaceSplus),
}

impl Surface {
    pub fn family(&self) -> Family {
        match self {
            Surface::Sm(_) => Family::Sm,
            Surface::Splus(_) => Family::Splus,
        }
    }

    pub fn period(&self) -> f64 {
        match self {
            Surface::Sm(s) => s.period(),
            Surface::Splus(s) => s.period(),
        }
    }

    /// Multiple of alpha attained by the normalized flow.
    pub fn limit_multiple(&self) -> f64 {
        match self {
            Surface::Sm(_) => 1.0,
            Surface::Splus(_) => 2.0,
        }
    }

    /// Coordinate volume of a fiber times the density of the reference volume in (fiber, log y2).
    pub fn fiber_volume(&self) -> f64 {
        match self {
            Surface::Sm(s) => s.eps.abs(),
            Surface::Splus(s) => (s.c3 * s.det_ab).abs(),
        }
    }

    pub fn as_sm(&self) -> Option<&SurfaceSm> {
        match self {
            Surface::Sm(s) => Some(s),
            Surface::Splus(_) => None,
        }
    }

    pub fn as_splus(&self) -> Option<&SurfaceSplus> {
        match self {
            Surface::Splus(s) => Some(s),
            Surface::Sm(_) => None,
        }
    }

    pub fn grid_torus(&self, n: usize, n_y2: usize) -> Result<DomainGrid, SurfaceError> {
        match self {
            Surface::Sm(s) => Ok(DomainGrid::torus(n, n_y2, s.period())?),
            Surface::Splus(_) => Err(SurfaceError::WrongFamily),
        }
    }

    pub fn grid_cell(&self, n_theta: usize, n_sigma: usize, n_x1: usize, n_y2: usize) -> Result<DomainGrid, SurfaceError> {
        match self {
            Surface::Splus(s) => Ok(DomainGrid::cell(n_theta, n_sigma, n_x1, n_y2, s.period())?),
            Surface::Sm(_) => Err(SurfaceError::WrongFamily),
        }
    }

    /// (x1, y1, x2, y2) of a grid node.
    pub fn node(&self, grid: &DomainGrid, slice: usize, local: usize) -> [f64; 4] {
        let y2 = grid.y2(slice);
        match (self, grid.fiber) {
            (Surface::Sm(s), FiberGrid::Torus { .. }) => {
                let x = s.point(grid.torus_t(local));
                [x[0], x[1], x[2], y2]
            }
            (Surface::Splus(s), FiberGrid::Cell { n_theta, n_sigma, n_x1 }) => {
                let shape = s.cell_shape(y2);
                let (it, rest) = (local / (n_sigma * n_x1), local % (n_sigma * n_x1));
                let (js, l) = (rest / n_x1, rest % n_x1);
                let theta = it as f64 / n_theta as f64;
                let sigma = js as f64 * shape.height / n_sigma as f64;
                let (x2, y1) = shape.point(theta, sigma);
                [l as f64 * s.x1_period() / n_x1 as f64, y1, x2, y2]
            }
            _ => panic!("grid family does not match surface"),
        }
    }

    /// Coframe matrix E with phi^a = sum_i E[a][i] dz^i at a point.
    pub fn coframe(&self, y1: f64, y2: f64) -> [[f64; 2]; 2] {
        match self {
            Surface::Sm(_) => [[y2.sqrt(), 0.0], [0.0, 1.0 / y2]],
            Surface::Splus(s) => {
                let rho = y1 - s.m_twist * y2.ln();
                [[1.0, -rho / y2], [0.0, 1.0 / y2]]
            }
        }
    }
}

/// Components (r, s, u) of a real (1,1)-form in the coframe: r i phi1^phi1b + s i phi2^phi2b + u, conj(u) cross terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameComponents {
    pub r: f64,
    pub s: f64,
    pub u: Complex64,
}

/// Components g_{i jbar} of a real (1,1)-form i g_{i jbar} dz^i ^ dzbar^j.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoordComponents {
    pub zz: f64,
    pub zw: Complex64,
    pub ww: f64,
}

impl FrameComponents {
    pub fn new(r: f64, s: f64, u: Complex64) -> Self {
        Self { r, s, u }
    }

    pub fn det(&self) -> f64 {
        self.r * self.s - self.u.norm_sqr()
    }

    pub fn is_positive(&self) -> bool {
        self.r > 0.0 && self.s > 0.0 && self.det() > 0.0
    }

    fn matrix(&self) -> [[Complex64; 2]; 2] {
        let i = Complex64::i();
        [[self.r.into(), -i * self.u], [i * self.u.conj(), self.s.into()]]
    }
}

impl CoordComponents {
    pub fn det(&self) -> f64 {
        self.zz * self.ww - self.zw.norm_sqr()
    }

    pub fn matrix(&self) -> [[Complex64; 2]; 2] {
        [[self.zz.into(), self.zw], [self.zw.conj(), self.ww.into()]]
    }

    pub fn from_matrix(m: [[Complex64; 2]; 2]) -> Self {
        Self { zz: m[0][0].re, zw: m[0][1], ww: m[1][1].re }
    }
}

fn congruence(e: &[[f64; 2]; 2], h: &[[Complex64; 2]; 2]) -> [[Complex64; 2]; 2] {
    let mut g = [[Complex64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            for a in 0..2 {
                for b in 0..2 {
                    g[i][j] += h[a][b] * (e[a][i] * e[b][j]);
                }
            }
        }
    }
    g
}

fn inverse2(e: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let d = e[0][0] * e[1][1] - e[0][1] * e[1][0];
    [[e[1][1] / d, -e[0][1] / d], [-e[1][0] / d, e[0][0] / d]]
}

pub fn frame_to_coord(e: &[[f64; 2]; 2], h: &FrameComponents) -> CoordComponents {
    CoordComponents::from_matrix(congruence(e, &h.matrix()))
}

pub fn coord_to_frame(e: &[[f64; 2]; 2], g: &CoordComponents) -> FrameComponents {
    let h = congruence(&inverse2(e), &g.matrix());
    FrameComponents { r: h[0][0].re, s: h[1][1].re, u: Complex64::i() * h[0][1] }
}

/// Reference forms evaluated at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceForms {
    pub alpha: CoordComponents,
    pub beta: CoordComponents,
    pub omega_tv: CoordComponents,
    pub coframe: [[f64; 2]; 2],
}

impl Surface {
    pub fn reference_forms(&self, y1: f64, y2: f64) -> ReferenceForms {
        let e = self.coframe(y1, y2);
        let alpha = CoordComponents { zz: 0.0, zw: Complex64::new(0.0, 0.0), ww: 0.25 / (y2 * y2) };
        let beta = frame_to_coord(&e, &FrameComponents::new(1.0, 0.0, Complex64::new(0.0, 0.0)));
        let omega_tv = frame_to_coord(&e, &FrameComponents::new(1.0, 1.0, Complex64::new(0.0, 0.0)));
        ReferenceForms { alpha, beta, omega_tv, coframe: e }
    }

    /// Frame components of the flow limit.
    pub fn omega_inf_frame(&self) -> FrameComponents {
        FrameComponents::new(0.0, 0.25 * self.limit_multiple(), Complex64::new(0.0, 0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const COMPANION: IntMatrix3 = [[0, 1, 0], [0, 0, 1], [1, 1, 0]];

    #[test]
    fn companion_surface_invariants() {
        let s = build_sm(&COMPANION).unwrap();
        assert!(s.kernel_residual <= 1e-10);
        assert_eq!(s.z_rank(1e-10), 2);
        // Z annihilates ell exactly since A and B are orthogonal to it
        let ell = s.spectral.ell;
        let za: f64 = (0..3).map(|i| s.a[i] * ell[i]).sum();
        assert!(za.abs() < 1e-14);
        // C reproduces the x2 coordinate
        let x = s.point(s.c);
        assert!((x[0]).abs() < 1e-13 && (x[1]).abs() < 1e-13 && (x[2] - 1.0).abs() < 1e-13);
        assert_eq!(s.glue_matrix, [[0, 0, 1], [1, 0, 1], [0, 1, 0]]);
    }

    #[test]
    fn transport_round_trip_and_mode_map() {
        let s = build_sm(&COMPANION).unwrap();
        let n = 8;
        let data: Vec<f64> = (0..n * n * n).map(|i| (i as f64 * 0.37).sin()).collect();
        let up = s.transport(n, &data, GlueDirection::Up);
        let back = s.transport(n, &up, GlueDirection::Down);
        assert_eq!(back, data);
        // mode k goes to mode M k under the downward transport
        let k = [1i64, 0, 2];
        let mk = algebra::apply3(&COMPANION, k);
        let mode = |k: [i64; 3], local: usize| {
            let t = [local / (n * n), (local / n) % n, local % n];
            let ph: i64 = (0..3).map(|i| k[i] * t[i] as i64).sum();
            (2.0 * std::f64::consts::PI * ph as f64 / n as f64).cos()
        };
        let src: Vec<f64> = (0..n * n * n).map(|l| mode(k, l)).collect();
        let out = s.transport(n, &src, GlueDirection::Down);
        for (l, v) in out.iter().enumerate() {
            assert!((v - mode(mk, l)).abs() < 1e-12);
        }
    }

    #[test]
    fn alpha_is_glue_invariant() {
        let s = build_sm(&COMPANION).unwrap();
        let (_, _, ww) = s.metric_glue_factors(GlueDirection::Down);
        let lam = s.period();
        let y = 1.1;
        assert!((0.25 / (lam * y * lam * y) * ww - 0.25 / (y * y)).abs() < 1e-15);
        assert!((s.frame_glue_factor(GlueDirection::Down).norm() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn splus_structure() {
        let s = build_splus(&[[2, 1], [1, 1]], 0, 0, 1, Complex64::new(0.0, 0.0)).unwrap();
        let [a1, a2] = s.a();
        let [b1, b2] = s.b();
        assert!((s.c3 - (b1 * a2 - b2 * a1)).abs() < 1e-15);
        assert!(s.structure_residual <= 1e-12);
        assert_eq!(
            build_splus(&[[2, 1], [1, 1]], 0, 0, 0, Complex64::new(0.0, 0.0)).unwrap_err(),
            SurfaceError::InvalidR
        );
        let g = s.period();
        let t = build_splus(&[[2, 1], [1, 1]], 0, 0, 1, Complex64::new(0.0, g.ln())).unwrap();
        assert!((t.m_twist - 1.0).abs() < 1e-15);
    }

    #[test]
    fn generators_commute_up_to_center() {
        let s = build_splus(&[[2, 1], [1, 1]], 1, -1, 2, Complex64::new(0.3, 0.2)).unwrap();
        let x = [0.1, 0.7, -0.4];
        let y2 = 1.7;
        let p = s.generator_power(0, 1, y2, s.generator_power(1, 1, y2, x));
        let q = s.generator_power(1, 1, y2, s.generator_power(0, 1, y2, x));
        let k = (p[0] - q[0]) / s.c3;
        assert!((k - k.round()).abs() < 1e-12);
        assert!((p[1] - q[1]).abs() < 1e-14 && (p[2] - q[2]).abs() < 1e-14);
        let back = s.generator_power(0, -3, y2, s.generator_power(0, 3, y2, x));
        assert!(back.iter().zip(&x).all(|(u, v)| (u - v).abs() < 1e-13));
    }

    #[test]
    fn frame_conversion_examples() {
        let s = Surface::Sm(build_sm(&COMPANION).unwrap());
        let f = s.reference_forms(0.0, 2.0);
        assert!((f.omega_tv.zz - 2.0).abs() < 1e-15);
        assert!((f.omega_tv.ww - 0.25).abs() < 1e-15);
        assert!((f.beta.zz - 2.0).abs() < 1e-15);
        let a = coord_to_frame(&f.coframe, &f.alpha);
        assert!(a.r.abs() < 1e-15 && (a.s - 0.25).abs() < 1e-15 && a.u.norm() < 1e-15);
        assert!(!a.is_positive());
        let h = FrameComponents::new(1.3, 0.7, Complex64::new(0.2, -0.4));
        for surf in [s, Surface::Splus(build_splus(&[[3, 1], [2, 1]], 0, 1, 1, Complex64::new(0.1, 0.5)).unwrap())] {
            let e = surf.coframe(0.8, 1.9);
            let back = coord_to_frame(&e, &frame_to_coord(&e, &h));
            assert!((back.r - h.r).abs() < 1e-13 && (back.s - h.s).abs() < 1e-13 && (back.u - h.u).norm() < 1e-13);
        }
    }
}
