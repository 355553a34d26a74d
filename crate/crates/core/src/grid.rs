//! Discretization of the fundamental domain and slice-major field storage.

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("fiber resolution {0} must be a power of two and at least 4")]
    BadFiberResolution(usize),
    #[error("y2 resolution {0} must be 2^k + 1 with k >= 1")]
    BadSliceCount(usize),
    #[error("field shape {found:?} does not match grid shape {expected:?}")]
    ShapeMismatch { expected: (usize, usize), found: (usize, usize) },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FiberGrid {
    /// Lattice coordinates t in [0,1)^3, n points per axis.
    Torus { n: usize },
    /// Sheared cell (theta, sigma) times the x1 circle.
    Cell { n_theta: usize, n_sigma: usize, n_x1: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DomainGrid {
    pub fiber: FiberGrid,
    pub n_y2: usize,
    pub period: f64,
    pub log_period: f64,
}

fn check_pow2(n: usize) -> Result<(), GridError> {
    if n >= 4 && n.is_power_of_two() {
        Ok(())
    } else {
        Err(GridError::BadFiberResolution(n))
    }
}

impl DomainGrid {
    pub fn torus(n: usize, n_y2: usize, period: f64) -> Result<Self, GridError> {
        check_pow2(n)?;
        Self::with_fiber(FiberGrid::Torus { n }, n_y2, period)
    }

    pub fn cell(n_theta: usize, n_sigma: usize, n_x1: usize, n_y2: usize, period: f64) -> Result<Self, GridError> {
        check_pow2(n_theta)?;
        check_pow2(n_sigma)?;
        check_pow2(n_x1)?;
        Self::with_fiber(FiberGrid::Cell { n_theta, n_sigma, n_x1 }, n_y2, period)
    }

    fn with_fiber(fiber: FiberGrid, n_y2: usize, period: f64) -> Result<Self, GridError> {
        if n_y2 < 3 || !(n_y2 - 1).is_power_of_two() {
            return Err(GridError::BadSliceCount(n_y2));
        }
        Ok(Self { fiber, n_y2, period, log_period: period.ln() })
    }

    pub fn per_slice(&self) -> usize {
        match self.fiber {
            FiberGrid::Torus { n } => n * n * n,
            FiberGrid::Cell { n_theta, n_sigma, n_x1 } => n_theta * n_sigma * n_x1,
        }
    }

    pub fn len(&self) -> usize {
        self.per_slice() * self.n_y2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn ds(&self) -> f64 {
        self.log_period / (self.n_y2 - 1) as f64
    }

    pub fn s(&self, slice: usize) -> f64 {
        if slice == self.n_y2 - 1 {
            self.log_period
        } else {
            slice as f64 * self.ds()
        }
    }

    pub fn y2(&self, slice: usize) -> f64 {
        if slice == 0 {
            1.0
        } else if slice == self.n_y2 - 1 {
            self.period
        } else {
            self.s(slice).exp()
        }
    }

    /// Trapezoid weights in s normalized to unit sum.
    pub fn slice_weights(&self) -> Vec<f64> {
        let m = (self.n_y2 - 1) as f64;
        (0..self.n_y2).map(|i| if i == 0 || i == self.n_y2 - 1 { 0.5 / m } else { 1.0 / m }).collect()
    }

    pub fn torus_n(&self) -> Option<usize> {
        match self.fiber {
            FiberGrid::Torus { n } => Some(n),
            FiberGrid::Cell { .. } => None,
        }
    }

    /// Lattice coordinates of a torus node.
    pub fn torus_t(&self, local: usize) -> [f64; 3] {
        let n = self.torus_n().expect("torus grid");
        let (i, j, k) = (local / (n * n), (local / n) % n, local % n);
        [i as f64 / n as f64, j as f64 / n as f64, k as f64 / n as f64]
    }

    pub fn check<T>(&self, field: &Field<T>) -> Result<(), GridError> {
        let found = (field.n_slices, field.per_slice);
        let expected = (self.n_y2, self.per_slice());
        if found == expected {
            Ok(())
        } else {
            Err(GridError::ShapeMismatch { expected, found })
        }
    }

    pub fn zeros(&self) -> ScalarField {
        Field::filled(self.n_y2, self.per_slice(), 0.0)
    }

    pub fn zeros_complex(&self) -> ComplexField {
        Field::filled(self.n_y2, self.per_slice(), Complex64::new(0.0, 0.0))
    }
}

/// Values stored slice by slice, fiber index fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Field<T> {
    n_slices: usize,
    per_slice: usize,
    data: Vec<T>,
}

pub type ScalarField = Field<f64>;
pub type ComplexField = Field<Complex64>;

impl<T: Copy> Field<T> {
    pub fn filled(n_slices: usize, per_slice: usize, value: T) -> Self {
        Self { n_slices, per_slice, data: vec![value; n_slices * per_slice] }
    }

    pub fn from_vec(n_slices: usize, per_slice: usize, data: Vec<T>) -> Result<Self, GridError> {
        if data.len() != n_slices * per_slice {
            return Err(GridError::ShapeMismatch { expected: (n_slices, per_slice), found: (data.len(), 1) });
        }
        Ok(Self { n_slices, per_slice, data })
    }

    pub fn from_fn(grid: &DomainGrid, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let per_slice = grid.per_slice();
        let mut data = Vec::with_capacity(grid.len());
        for slice in 0..grid.n_y2 {
            for local in 0..per_slice {
                data.push(f(slice, local));
            }
        }
        Self { n_slices: grid.n_y2, per_slice, data }
    }

    pub fn n_slices(&self) -> usize {
        self.n_slices
    }

    pub fn per_slice(&self) -> usize {
        self.per_slice
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn slice(&self, i: usize) -> &[T] {
        &self.data[i * self.per_slice..(i + 1) * self.per_slice]
    }

    pub fn slice_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.per_slice..(i + 1) * self.per_slice]
    }

    pub fn set_slice(&mut self, i: usize, values: &[T]) {
        self.slice_mut(i).copy_from_slice(values);
    }

    pub fn map<U: Copy>(&self, f: impl Fn(T) -> U) -> Field<U> {
        Field { n_slices: self.n_slices, per_slice: self.per_slice, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_map<U: Copy, V: Copy>(&self, other: &Field<U>, f: impl Fn(T, U) -> V) -> Field<V> {
        assert_eq!((self.n_slices, self.per_slice), (other.n_slices, other.per_slice));
        Field {
            n_slices: self.n_slices,
            per_slice: self.per_slice,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }
}

impl ScalarField {
    pub fn slice_mean(&self, i: usize) -> f64 {
        self.slice(i).iter().sum::<f64>() / self.per_slice as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &ScalarField) -> f64 {
        self.data.iter().zip(&other.data).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slice_geometry() {
        let g = DomainGrid::torus(8, 9, 2.0).unwrap();
        assert_eq!(g.y2(0), 1.0);
        assert_eq!(g.y2(8), 2.0);
        assert!((g.y2(4) - 2f64.sqrt()).abs() < 1e-15);
        assert!((g.slice_weights().iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(g.per_slice(), 512);
        assert_eq!(g.torus_t(8 * 8 + 3), [0.125, 0.0, 0.375]);
    }

    #[test]
    fn rejects_bad_resolutions() {
        assert_eq!(DomainGrid::torus(6, 9, 2.0).unwrap_err(), GridError::BadFiberResolution(6));
        assert_eq!(DomainGrid::torus(8, 8, 2.0).unwrap_err(), GridError::BadSliceCount(8));
        assert!(DomainGrid::cell(8, 8, 4, 5, 2.0).is_ok());
    }
}
