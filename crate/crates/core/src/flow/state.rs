//! Frame components stored slice by slice, fiber-constant slices kept as one value.

use num_complex::Complex64;

use crate::fields::HermitianMetricField;
use crate::grid::{DomainGrid, Field};
use crate::slab::Slab;
use crate::surface::FrameComponents;

#[derive(Debug, Clone, PartialEq)]
pub struct FrameSlabs {
    pub r: Vec<Slab<f64>>,
    pub s: Vec<Slab<f64>>,
    pub u: Vec<Slab<Complex64>>,
}

impl FrameSlabs {
    pub fn from_field(h: &HermitianMetricField) -> Self {
        let n = h.r.n_slices();
        Self {
            r: (0..n).map(|i| Slab::Dense(h.r.slice(i).to_vec()).compressed()).collect(),
            s: (0..n).map(|i| Slab::Dense(h.s.slice(i).to_vec()).compressed()).collect(),
            u: (0..n).map(|i| Slab::Dense(h.u.slice(i).to_vec()).compressed()).collect(),
        }
    }

    pub fn to_field(&self, grid: &DomainGrid) -> HermitianMetricField {
        let np = grid.per_slice();
        let r = Field::from_vec(grid.n_y2, np, self.r.iter().flat_map(|s| s.to_vec(np)).collect()).expect("shape");
        let s = Field::from_vec(grid.n_y2, np, self.s.iter().flat_map(|s| s.to_vec(np)).collect()).expect("shape");
        let u = Field::from_vec(grid.n_y2, np, self.u.iter().flat_map(|s| s.to_vec(np)).collect()).expect("shape");
        HermitianMetricField::form(r, s, u)
    }

    pub fn n_slices(&self) -> usize {
        self.r.len()
    }

    pub fn at(&self, slice: usize, node: usize) -> FrameComponents {
        FrameComponents::new(self.r[slice].at(node), self.s[slice].at(node), self.u[slice].at(node))
    }

    pub fn is_uniform(&self, slice: usize) -> bool {
        self.r[slice].is_uniform() && self.s[slice].is_uniform() && self.u[slice].is_uniform()
    }

    /// a * self + b * other, slice by slice.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Self {
        Self {
            r: self.r.iter().zip(&other.r).map(|(x, y)| x.zip_with(y, |p, q| a * p + b * q)).collect(),
            s: self.s.iter().zip(&other.s).map(|(x, y)| x.zip_with(y, |p, q| a * p + b * q)).collect(),
            u: self.u.iter().zip(&other.u).map(|(x, y)| x.zip_with(y, |p, q| a * p + b * q)).collect(),
        }
    }

    /// Largest operator norm of the frame difference over all nodes.
    pub fn sup_distance(&self, other: &Self, per_slice: usize) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n_slices() {
            let nodes = if self.is_uniform(i) && other.is_uniform(i) { 1 } else { per_slice };
            for node in 0..nodes {
                let (a, b) = (self.at(i, node), other.at(i, node));
                worst = worst.max(operator_norm(a.r - b.r, a.s - b.s, a.u - b.u));
            }
        }
        worst
    }

    /// First node violating positivity.
    pub fn first_non_positive(&self, per_slice: usize) -> Option<(usize, usize)> {
        for i in 0..self.n_slices() {
            let nodes = if self.is_uniform(i) { 1 } else { per_slice };
            for node in 0..nodes {
                let c = self.at(i, node);
                if !(c.is_positive() && c.det().is_finite()) {
                    return Some((i, node));
                }
            }
        }
        None
    }
}

/// Largest |eigenvalue| of [[r, -iu], [i conj(u), s]].
pub fn operator_norm(r: f64, s: f64, u: Complex64) -> f64 {
    let mean = 0.5 * (r + s);
    let radius = (0.25 * (r - s) * (r - s) + u.norm_sqr()).sqrt();
    (mean + radius).abs().max((mean - radius).abs())
}

/// Smallest and largest eigenvalues of the frame matrix.
pub fn eigen_range(c: &FrameComponents) -> (f64, f64) {
    let mean = 0.5 * (c.r + c.s);
    let radius = (0.25 * (c.r - c.s) * (c.r - c.s) + c.u.norm_sqr()).sqrt();
    (mean - radius, mean + radius)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn operator_norm_of_diagonal_and_offdiagonal() {
        assert_eq!(operator_norm(1.0, -3.0, Complex64::new(0.0, 0.0)), 3.0);
        assert!((operator_norm(0.0, 0.0, Complex64::new(0.6, 0.8)) - 1.0).abs() < 1e-15);
        let (lo, hi) = eigen_range(&FrameComponents::new(2.0, 2.0, Complex64::new(1.0, 0.0)));
        assert!((lo - 1.0).abs() < 1e-15 && (hi - 3.0).abs() < 1e-15);
    }
}
