//! Smooth seam-compatible test potentials with closed-form leafwise Laplacians.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;

use crate::fields::{metric_from_potential, FieldError};
use crate::grid::{DomainGrid, Field, ScalarField};
use crate::surface::{Surface, SurfaceSm, SurfaceSplus};

/// C-infinity bump in log y2 supported in the middle 80% of the period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogBump {
    pub log_period: f64,
}

impl LogBump {
    pub fn at(&self, s: f64) -> f64 {
        let x = (2.0 * s / self.log_period - 1.0) / 0.8;
        if x.abs() >= 1.0 {
            0.0
        } else {
            (1.0 - 1.0 / (1.0 - x * x)).exp()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusMode {
    pub k: [i64; 3],
    pub cos: f64,
    pub sin: f64,
}

/// bump(log y2) * sum of lattice-coordinate modes on a torus bundle.
#[derive(Debug, Clone, PartialEq)]
pub struct SmPotential {
    pub modes: Vec<TorusMode>,
    pub bump: LogBump,
}

impl SmPotential {
    /// `count` distinct nonzero modes with max-norm at most `k_max` and coefficients in [-1, 1].
    pub fn random(rng: &mut impl Rng, surface: &SurfaceSm, k_max: i64, count: usize) -> Self {
        let mut modes: Vec<TorusMode> = Vec::with_capacity(count);
        while modes.len() < count {
            let k = [rng.gen_range(-k_max..=k_max), rng.gen_range(-k_max..=k_max), rng.gen_range(-k_max..=k_max)];
            if k == [0, 0, 0] || modes.iter().any(|m| m.k == k || m.k == [-k[0], -k[1], -k[2]]) {
                continue;
            }
            modes.push(TorusMode { k, cos: rng.gen_range(-1.0..=1.0), sin: rng.gen_range(-1.0..=1.0) });
        }
        Self { modes, bump: LogBump { log_period: surface.period().ln() } }
    }

    pub fn scaled(&self, c: f64) -> Self {
        let modes = self.modes.iter().map(|m| TorusMode { k: m.k, cos: c * m.cos, sin: c * m.sin }).collect();
        Self { modes, bump: self.bump }
    }

    fn wave(&self, t: [f64; 3], weight: impl Fn(&TorusMode) -> f64) -> f64 {
        self.modes
            .iter()
            .map(|m| {
                let ph = 2.0 * PI * (0..3).map(|i| m.k[i] as f64 * t[i]).sum::<f64>();
                weight(m) * (m.cos * ph.cos() + m.sin * ph.sin())
            })
            .sum()
    }

    pub fn value(&self, s: f64, t: [f64; 3]) -> f64 {
        self.bump.at(s) * self.wave(t, |_| 1.0)
    }

    /// Delta_D of the potential.
    pub fn leaf_laplacian(&self, surface: &SurfaceSm, s: f64, t: [f64; 3]) -> f64 {
        let w = self.wave(t, |m| -4.0 * PI * PI * surface.divisor(m.k));
        self.bump.at(s) * w / (32.0 * s.exp())
    }

    pub fn sample(&self, grid: &DomainGrid) -> ScalarField {
        Field::from_fn(grid, |i, l| self.value(grid.s(i), grid.torus_t(l)))
    }

    pub fn sample_leaf_laplacian(&self, surface: &SurfaceSm, grid: &DomainGrid) -> ScalarField {
        Field::from_fn(grid, |i, l| self.leaf_laplacian(surface, grid.s(i), grid.torus_t(l)))
    }

    /// Rescales so that omega_TV + i ddbar psi deviates from omega_TV by at most `deviation` in frame components.
    pub fn normalized(&self, surface: &Surface, grid: &DomainGrid, deviation: f64) -> Result<Self, FieldError> {
        let probe = self.scaled(1e-6);
        let h = metric_from_potential(surface, grid, &probe.sample(grid))?;
        let mut worst = 0.0f64;
        for i in 0..grid.n_y2 {
            for l in 0..grid.per_slice() {
                let c = h.at(i, l);
                worst = worst.max((c.r - 1.0).abs()).max((c.s - 1.0).abs()).max(c.u.norm());
            }
        }
        Ok(self.scaled(1e-6 * deviation / worst))
    }
}

/// Gaussian seed in (x2, y1) carried by the x1 wave e^{2 pi i k x1 / c3}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitSeed {
    pub k: i64,
    pub center: [f64; 2],
    pub width: f64,
    pub amplitude: Complex64,
}

/// Lattice-invariant plane wave in (x2, y1) with integer labels (m, n).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeWave {
    pub m: i64,
    pub n: i64,
    pub cos: f64,
    pub sin: f64,
}

/// bump(log y2) times a real function on the nilmanifold bundle, built as orbit sums of Gaussians plus lattice waves.
#[derive(Debug, Clone)]
pub struct SplusPotential {
    pub surface: SurfaceSplus,
    pub seeds: Vec<OrbitSeed>,
    pub waves: Vec<LatticeWave>,
    pub bump: LogBump,
    /// Orbit terms with |n1|, |n2| up to this radius around the nearest lattice point.
    pub orbit_radius: i64,
}

#[derive(Debug, Clone, Copy, Default)]
struct Jet {
    value: f64,
    leaf: f64,
}

impl SplusPotential {
    pub fn new(surface: &SurfaceSplus, seeds: Vec<OrbitSeed>, waves: Vec<LatticeWave>) -> Self {
        Self { surface: surface.clone(), seeds, waves, bump: LogBump { log_period: surface.period().ln() }, orbit_radius: 6 }
    }

    fn nearest_shift(&self, y2: f64, x2: f64, y1: f64, center: [f64; 2]) -> [i64; 2] {
        let [a1, a2] = self.surface.a();
        let [b1, b2] = self.surface.b();
        let (dx, dy) = (center[0] - x2, (center[1] - y1) / y2);
        let det = a1 * b2 - a2 * b1;
        [((dx * b2 - a2 * dy) / det).round() as i64, ((a1 * dy - b1 * dx) / det).round() as i64]
    }

    fn jet(&self, p: [f64; 4]) -> Jet {
        let y2 = p[3];
        let x = [p[0], p[1], p[2]];
        let c3 = self.surface.c3;
        let mut acc = Jet::default();
        for seed in &self.seeds {
            let base = self.nearest_shift(y2, x[2], x[1], seed.center);
            let a2 = (2.0 * PI * seed.k as f64 / c3).powi(2);
            let w2 = seed.width * seed.width;
            let mut sum = Complex64::new(0.0, 0.0);
            let mut leaf = Complex64::new(0.0, 0.0);
            for n1 in base[0] - self.orbit_radius..=base[0] + self.orbit_radius {
                for n2 in base[1] - self.orbit_radius..=base[1] + self.orbit_radius {
                    let q = self.surface.generator_power(0, n1, y2, self.surface.generator_power(1, n2, y2, x));
                    let (dx, dy) = (q[2] - seed.center[0], q[1] - seed.center[1]);
                    let g = (-(dx * dx + dy * dy) / (2.0 * w2)).exp();
                    let g_yy = g * (dy * dy / (w2 * w2) - 1.0 / w2);
                    let wave = Complex64::from_polar(1.0, 2.0 * PI * seed.k as f64 * q[0] / c3);
                    sum += wave * g;
                    leaf += wave * (g_yy - a2 * g);
                }
            }
            acc.value += (seed.amplitude * sum).re;
            acc.leaf += (seed.amplitude * leaf).re;
        }
        let [a1, a2] = self.surface.a();
        let [b1, b2] = self.surface.b();
        let d = y2 * self.surface.det_ab;
        for w in &self.waves {
            let (m, n) = (w.m as f64, w.n as f64);
            let ph = 2.0 * PI * ((y2 * b2 * x[2] - a2 * x[1]) * m + (-y2 * b1 * x[2] + a1 * x[1]) * n) / d;
            let q = 2.0 * PI * (n * a1 - m * a2) / d;
            let v = w.cos * ph.cos() + w.sin * ph.sin();
            acc.value += v;
            acc.leaf -= q * q * v;
        }
        let b = self.bump.at(y2.ln());
        Jet { value: b * acc.value, leaf: b * acc.leaf / 32.0 }
    }

    pub fn value(&self, p: [f64; 4]) -> f64 {
        self.jet(p).value
    }

    /// Delta_D of the potential.
    pub fn leaf_laplacian(&self, p: [f64; 4]) -> f64 {
        self.jet(p).leaf
    }

    pub fn sample(&self, surface: &Surface, grid: &DomainGrid) -> ScalarField {
        Field::from_fn(grid, |i, l| self.value(surface.node(grid, i, l)))
    }

    pub fn sample_leaf_laplacian(&self, surface: &Surface, grid: &DomainGrid) -> ScalarField {
        Field::from_fn(grid, |i, l| self.leaf_laplacian(surface.node(grid, i, l)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::build_splus;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn bump_vanishes_near_the_seam() {
        let b = LogBump { log_period: 1.0 };
        assert_eq!(b.at(0.05), 0.0);
        assert_eq!(b.at(0.95), 0.0);
        assert!((b.at(0.5) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn orbit_sum_is_lattice_invariant() {
        let s = build_splus(&[[2, 1], [1, 1]], 1, 0, 1, Complex64::new(0.2, 0.3)).unwrap();
        let seed = OrbitSeed { k: 1, center: [0.3, 0.2], width: 0.3, amplitude: Complex64::new(1.0, 0.5) };
        let wave = LatticeWave { m: 1, n: -1, cos: 0.3, sin: 0.1 };
        let pot = SplusPotential::new(&s, vec![seed], vec![wave]);
        let y2 = s.period().sqrt();
        let x = [0.37, -0.21, 0.64];
        let moved = s.generator_power(1, 2, y2, s.generator_power(0, -1, y2, x));
        let f = |q: [f64; 3]| pot.value([q[0], q[1], q[2], y2]);
        assert!((f(x) - f(moved)).abs() < 1e-12);
        assert!((f(x) - f(s.central_shift(3, x))).abs() < 1e-12);
        let mut wider = pot.clone();
        wider.orbit_radius = 10;
        assert!((f(x) - wider.value([x[0], x[1], x[2], y2])).abs() < 1e-14);
    }

    #[test]
    fn random_modes_are_distinct() {
        let s = crate::surface::build_sm(&[[0, 1, 0], [0, 0, 1], [1, 1, 0]]).unwrap();
        let p = SmPotential::random(&mut ChaCha8Rng::seed_from_u64(7), &s, 2, 10);
        assert_eq!(p.modes.len(), 10);
        assert!(p.modes.iter().all(|m| m.k.iter().all(|v| v.abs() <= 2)));
    }
}
