//! Differential operators on torus-bundle grids: spectral in the fiber, centered in log y2.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::fft::{wavenumber, GridFft};
use crate::grid::{DomainGrid, FiberGrid};
use crate::slab::Slab;
use crate::surface::{CoordComponents, GlueDirection, SurfaceError, SurfaceSm};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TorusOp {
    X1,
    Y1,
    X2,
    X1X1,
    Y1Y1,
    X2X2,
    X1Y1,
    X1X2,
    Y1X2,
    /// x1x1 + y1y1.
    Leaf,
}

pub struct SmOperator<'a> {
    pub surface: &'a SurfaceSm,
    pub grid: &'a DomainGrid,
    n: usize,
    fft: GridFft,
    ka: Vec<f64>,
    kb: Vec<f64>,
    kc: Vec<f64>,
    modes: Vec<Option<[i64; 3]>>,
    down: Vec<usize>,
    up: Vec<usize>,
}

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

impl<'a> SmOperator<'a> {
    pub fn new(surface: &'a SurfaceSm, grid: &'a DomainGrid) -> Result<Self, SurfaceError> {
        let n = match grid.fiber {
            FiberGrid::Torus { n } => n,
            FiberGrid::Cell { .. } => return Err(SurfaceError::WrongFamily),
        };
        let mut modes = Vec::with_capacity(n * n * n);
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    modes.push(match (wavenumber(i, n), wavenumber(j, n), wavenumber(l, n)) {
                        (Some(a), Some(b), Some(c)) => Some([a, b, c]),
                        _ => None,
                    });
                }
            }
        }
        let dot = |v: &[f64; 3]| -> Vec<f64> {
            modes.iter().map(|m| m.map_or(0.0, |k| (0..3).map(|i| v[i] * k[i] as f64).sum())).collect()
        };
        Ok(Self {
            surface,
            grid,
            n,
            fft: GridFft::new(&[n, n, n]),
            ka: dot(&surface.a),
            kb: dot(&surface.b),
            kc: dot(&surface.c),
            down: surface.transport_map(n, GlueDirection::Down),
            up: surface.transport_map(n, GlueDirection::Up),
            modes,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn per_slice(&self) -> usize {
        self.n * self.n * self.n
    }

    /// Wavenumber of a spectral index, `None` on any Nyquist plane.
    pub fn mode(&self, idx: usize) -> Option<[i64; 3]> {
        self.modes[idx]
    }

    pub fn divisor(&self, idx: usize) -> f64 {
        self.ka[idx] * self.ka[idx] + self.kb[idx] * self.kb[idx]
    }

    pub fn forward(&self, data: &[f64]) -> Vec<Complex64> {
        self.fft.forward_real(data)
    }

    pub fn forward_complex(&self, data: &[Complex64]) -> Vec<Complex64> {
        let mut c = data.to_vec();
        self.fft.forward_axes(&mut c, &[0, 1, 2]);
        c
    }

    pub fn inverse_complex(&self, mut spec: Vec<Complex64>) -> Vec<Complex64> {
        self.fft.inverse_axes(&mut spec, &[0, 1, 2]);
        spec
    }

    pub fn inverse_real(&self, spec: Vec<Complex64>) -> Vec<f64> {
        self.fft.inverse_to_real(spec)
    }

    pub fn symbol(&self, op: TorusOp, idx: usize) -> Complex64 {
        if self.modes[idx].is_none() {
            return ZERO;
        }
        let tau = 2.0 * PI;
        let (a, b, c) = (tau * self.ka[idx], tau * self.kb[idx], tau * self.kc[idx]);
        match op {
            TorusOp::X1 => Complex64::new(0.0, a),
            TorusOp::Y1 => Complex64::new(0.0, b),
            TorusOp::X2 => Complex64::new(0.0, c),
            TorusOp::X1X1 => (-a * a).into(),
            TorusOp::Y1Y1 => (-b * b).into(),
            TorusOp::X2X2 => (-c * c).into(),
            TorusOp::X1Y1 => (-a * b).into(),
            TorusOp::X1X2 => (-a * c).into(),
            TorusOp::Y1X2 => (-b * c).into(),
            TorusOp::Leaf => (-(a * a + b * b)).into(),
        }
    }

    pub fn apply_symbol(&self, spec: &[Complex64], f: impl Fn(usize) -> Complex64) -> Vec<Complex64> {
        spec.iter().enumerate().map(|(i, &v)| v * f(i)).collect()
    }

    /// Real derivative of a real slice.
    pub fn derive(&self, data: &[f64], op: TorusOp) -> Vec<f64> {
        if is_constant(data) {
            return vec![0.0; data.len()];
        }
        let spec = self.forward(data);
        self.inverse_real(self.apply_symbol(&spec, |i| self.symbol(op, i)))
    }

    pub fn derive_complex(&self, data: &[Complex64], op: TorusOp) -> Vec<Complex64> {
        if is_constant(data) {
            return vec![ZERO; data.len()];
        }
        let spec = self.forward_complex(data);
        self.inverse_complex(self.apply_symbol(&spec, |i| self.symbol(op, i)))
    }

    pub fn transport_map(&self, dir: GlueDirection) -> &[usize] {
        match dir {
            GlueDirection::Down => &self.down,
            GlueDirection::Up => &self.up,
        }
    }

    /// Scalar slices below and above `slice`, using glued ghosts at the seam.
    pub fn scalar_neighbors<T: Copy>(&self, slices: &[Slab<T>], slice: usize) -> (Slab<T>, Slab<T>) {
        let last = slices.len() - 1;
        let prev = if slice == 0 { slices[last - 1].permuted(&self.down) } else { slices[slice - 1].clone() };
        let next = if slice == last { slices[1].permuted(&self.up) } else { slices[slice + 1].clone() };
        (prev, next)
    }

    /// First and second log-y2 derivatives of a scalar.
    pub fn s_derivatives(&self, slices: &[Slab<f64>], slice: usize) -> (Slab<f64>, Slab<f64>) {
        let ds = self.grid.ds();
        let (prev, next) = self.scalar_neighbors(slices, slice);
        let first = next.zip_with(&prev, |a, b| (a - b) / (2.0 * ds));
        let second = prev.zip3(&slices[slice], &next, |a, b, c| (a - 2.0 * b + c) / (ds * ds));
        (first, second)
    }

    /// Coordinate components of i ddbar f for a scalar f given slice by slice.
    pub fn ddbar(&self, f: &[Slab<f64>]) -> Vec<Slab<CoordComponents>> {
        (0..f.len()).map(|i| self.ddbar_slice(f, i)).collect()
    }

    pub fn ddbar_slice(&self, f: &[Slab<f64>], slice: usize) -> Slab<CoordComponents> {
        let s = self.grid.s(slice);
        let (e1, e2) = ((-s).exp(), (-2.0 * s).exp());
        let (fs, fss) = self.s_derivatives(f, slice);
        let vertical = fss.zip_with(&fs, |b, a| 0.25 * e2 * (b - a));
        if let (Slab::Uniform(_), Slab::Uniform(_)) = (&f[slice], &fs) {
            return vertical.map(|ww| CoordComponents { zz: 0.0, zw: ZERO, ww });
        }
        let np = self.per_slice();
        let spec_f = match &f[slice] {
            Slab::Uniform(_) => None,
            Slab::Dense(d) => Some(self.forward(d)),
        };
        let spec_fs = match &fs {
            Slab::Uniform(_) => None,
            Slab::Dense(d) => Some(self.forward(d)),
        };
        let i = Complex64::i();
        // zz + i (ww torus part), and zw, each from one inverse transform
        let mut diag = vec![ZERO; np];
        let mut cross = vec![ZERO; np];
        if let Some(sf) = &spec_f {
            for idx in 0..np {
                let v = sf[idx];
                diag[idx] += 0.25 * v * (self.symbol(TorusOp::Leaf, idx) + i * self.symbol(TorusOp::X2X2, idx));
                cross[idx] += 0.25 * v * (self.symbol(TorusOp::X1X2, idx) - i * self.symbol(TorusOp::Y1X2, idx));
            }
        }
        if let Some(sfs) = &spec_fs {
            for idx in 0..np {
                let v = sfs[idx];
                cross[idx] += 0.25 * e1 * v * (self.symbol(TorusOp::Y1, idx) + i * self.symbol(TorusOp::X1, idx));
            }
        }
        let diag = self.inverse_complex(diag);
        let cross = self.inverse_complex(cross);
        Slab::Dense(
            (0..np)
                .map(|idx| CoordComponents { zz: diag[idx].re, zw: cross[idx], ww: diag[idx].im + vertical.at(idx) })
                .collect(),
        )
    }
}

pub fn is_constant<T: PartialEq>(data: &[T]) -> bool {
    data.iter().all(|v| *v == data[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::build_sm;

    const COMPANION: [[i64; 3]; 3] = [[0, 1, 0], [0, 0, 1], [1, 1, 0]];

    #[test]
    fn derivatives_of_a_mode_follow_the_chain_rule() {
        let s = build_sm(&COMPANION).unwrap();
        let grid = DomainGrid::torus(8, 5, s.period()).unwrap();
        let op = SmOperator::new(&s, &grid).unwrap();
        let k = [1i64, -2, 1];
        let phase = |l: usize| {
            let t = grid.torus_t(l);
            2.0 * PI * (0..3).map(|i| k[i] as f64 * t[i]).sum::<f64>()
        };
        let data: Vec<f64> = (0..512).map(|l| phase(l).sin()).collect();
        let d = op.derive(&data, TorusOp::X1);
        let a = 2.0 * PI * s.dot_a(k);
        for l in 0..512 {
            assert!((d[l] - a * phase(l).cos()).abs() < 1e-11);
        }
        let lap = op.derive(&data, TorusOp::Leaf);
        let z = 4.0 * PI * PI * s.divisor(k);
        for l in 0..512 {
            assert!((lap[l] + z * phase(l).sin()).abs() < 1e-10);
        }
    }

    #[test]
    fn ddbar_of_log_y2_is_minus_alpha() {
        let s = build_sm(&COMPANION).unwrap();
        let grid = DomainGrid::torus(4, 33, s.period()).unwrap();
        let op = SmOperator::new(&s, &grid).unwrap();
        // log y2 is not seam periodic; its s-derivative is, so use s(s - L) corrections only through interior slices
        let f: Vec<Slab<f64>> = (0..33).map(|i| Slab::Uniform(grid.s(i))).collect();
        for i in 1..32 {
            let y2 = grid.y2(i);
            match op.ddbar_slice(&f, i) {
                Slab::Uniform(c) => assert!((c.ww + 0.25 / (y2 * y2)).abs() < 1e-12),
                Slab::Dense(_) => panic!("expected uniform slice"),
            }
        }
    }
}
