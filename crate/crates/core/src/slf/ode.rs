//! Bounded solution of u'' - a^2 u = g on the line via the exponential Green kernel.

use num_complex::Complex64;

use super::SlfError;

const STENCIL: usize = 6;
const QUAD_POINTS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct OdeSolution {
    /// Solution on the core samples `margin..len - margin`.
    pub u: Vec<Complex64>,
    pub truncation_bound: f64,
}

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|i| {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let step = p1 / dp;
                x -= step;
                if step.abs() < 1e-16 {
                    break;
                }
            }
            (x, 2.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

fn lagrange(nodes: &[f64], m: usize, t: f64) -> f64 {
    nodes.iter().enumerate().filter(|(j, _)| *j != m).map(|(_, &x)| (t - x) / (nodes[m] - x)).product()
}

/// Half-width of the kernel window that meets `tol` for data bounded by `g_max`.
pub fn window_half_width(a: f64, g_max: f64, tol: f64) -> f64 {
    let needed = (g_max / (a * a * tol)).ln() / a;
    needed.max(3.0)
}

pub fn truncation_bound(a: f64, g_max: f64, half_width: f64) -> f64 {
    g_max / (a * a) * (-a * half_width).exp()
}

/// Product-integration weights per stencil offset: [offset][m] for the forward and backward recursions.
struct PanelWeights {
    forward: Vec<[f64; STENCIL]>,
    backward: Vec<[f64; STENCIL]>,
}

impl PanelWeights {
    fn new(a: f64, h: f64) -> Self {
        let quad = gauss_legendre(QUAD_POINTS);
        let mut forward = Vec::new();
        let mut backward = Vec::new();
        for shift in 0..=4 {
            let nodes: Vec<f64> = (0..STENCIL).map(|m| m as f64 - shift as f64).collect();
            let mut fw = [0.0; STENCIL];
            let mut bw = [0.0; STENCIL];
            for &(x, w) in &quad {
                let t = 0.5 * (x + 1.0);
                for m in 0..STENCIL {
                    let l = lagrange(&nodes, m, t) * 0.5 * w * h;
                    fw[m] += (-a * h * (1.0 - t)).exp() * l;
                    bw[m] += (-a * h * t).exp() * l;
                }
            }
            forward.push(fw);
            backward.push(bw);
        }
        Self { forward, backward }
    }
}

/// Solves u'' - a^2 u = g for samples of g with spacing `h`; the outer `margin` samples on each side
/// only feed the kernel and are not returned.
pub fn bounded_ode_solve(a: f64, g: &[Complex64], h: f64, margin: usize, tol: f64) -> Result<OdeSolution, SlfError> {
    let n = g.len();
    if n < STENCIL || 2 * margin >= n {
        return Err(SlfError::WindowTooSmall { bound: f64::INFINITY, tolerance: tol });
    }
    let g_max = g.iter().fold(0.0f64, |m, v| m.max(v.norm()));
    let bound = truncation_bound(a, g_max, margin as f64 * h);
    if bound > tol {
        return Err(SlfError::WindowTooSmall { bound, tolerance: tol });
    }
    let weights = PanelWeights::new(a, h);
    let decay = (-a * h).exp();
    let panel = |left: usize, table: &[[f64; STENCIL]]| {
        let start = left.saturating_sub(2).min(n - STENCIL);
        let w = &table[left - start];
        (0..STENCIL).map(|m| g[start + m] * w[m]).sum::<Complex64>()
    };
    let mut forward = vec![Complex64::new(0.0, 0.0); n];
    for j in 1..n {
        forward[j] = forward[j - 1] * decay + panel(j - 1, &weights.forward);
    }
    let mut backward = vec![Complex64::new(0.0, 0.0); n];
    for j in (0..n - 1).rev() {
        backward[j] = backward[j + 1] * decay + panel(j, &weights.backward);
    }
    let scale = -0.5 / a;
    let u = (margin..n - margin).map(|j| (forward[j] + backward[j]) * scale).collect();
    Ok(OdeSolution { u, truncation_bound: bound })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn samples(n: usize, h: f64, f: impl Fn(f64) -> f64) -> Vec<Complex64> {
        (0..n).map(|j| Complex64::new(f(j as f64 * h), 0.0)).collect()
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let q = gauss_legendre(10);
        let int = |p: i32| q.iter().map(|(x, w)| w * x.powi(p)).sum::<f64>();
        assert!((int(0) - 2.0).abs() < 1e-14);
        assert!((int(18) - 2.0 / 19.0).abs() < 1e-14);
    }

    #[test]
    fn constant_forcing() {
        let (a, h) = (2.0, 0.05);
        let margin = (window_half_width(a, 1.0, 1e-13) / h).ceil() as usize;
        let g = vec![Complex64::new(3.0, 0.0); 2 * margin + 40];
        let sol = bounded_ode_solve(a, &g, h, margin, 1e-12).unwrap();
        assert!(sol.u.iter().all(|v| (v.re + 0.75).abs() < 1e-12 && v.im == 0.0));
    }

    #[test]
    fn cosine_forcing() {
        let (a, h, nu) = (1.5, 0.02, 2.3);
        let margin = (window_half_width(a, 1.0, 1e-12) / h).ceil() as usize;
        let g = samples(2 * margin + 100, h, |s| (nu * s).cos());
        let sol = bounded_ode_solve(a, &g, h, margin, 1e-11).unwrap();
        for (i, v) in sol.u.iter().enumerate() {
            let y = (i + margin) as f64 * h;
            assert!((v.re + (nu * y).cos() / (a * a + nu * nu)).abs() < 1e-10);
        }
    }

    #[test]
    fn short_window_is_reported() {
        let g = vec![Complex64::new(1.0, 0.0); 20];
        assert!(matches!(bounded_ode_solve(1.0, &g, 0.1, 5, 1e-10), Err(SlfError::WindowTooSmall { .. })));
    }
}
