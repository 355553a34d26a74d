//! Integer matrix spectra and Diophantine margins.

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

pub type IntMatrix3 = [[i64; 3]; 3];
pub type IntMatrix2 = [[i64; 2]; 2];

const EIGEN_RESIDUAL_TOL: f64 = 1e-12;
const RATIO_FLOOR: f64 = 1e-10;
const RATIONAL_Q_MAX: i64 = 1_000_000;
const RATIONAL_TOL: f64 = 1e-15;
const MARGIN_FLOOR: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlgebraError {
    #[error("matrix is not unimodular (det = {0})")]
    NotUnimodular(i64),
    #[error("no real eigenvalue > 1 paired with non-real eigenvalues")]
    NoInoueSpectrum,
    #[error("no real eigenvalue > 1 (|trace| <= 2 or negative spectrum)")]
    NoHyperbolicSpectrum,
    #[error("eigenvector has no usable ratio")]
    DegenerateEigenvector,
    #[error("eigen-equation residual {0:.3e} above tolerance")]
    EigenResidual(f64),
    #[error("{0} = {1} matches the rational {2}/{3}")]
    RationalRatio(&'static str, f64, i64, i64),
    #[error("input is rational to working precision (margin {0:.3e})")]
    RationalInput(f64),
    #[error("invalid Liouville parameters: degree {0}, q bound {1}")]
    InvalidMarginParameters(u32, u64),
}

pub fn det3(m: &IntMatrix3) -> i64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

pub fn det2(m: &IntMatrix2) -> i64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

pub fn transpose3(m: &IntMatrix3) -> IntMatrix3 {
    let mut t = [[0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            t[i][j] = m[j][i];
        }
    }
    t
}

pub fn mul3(a: &IntMatrix3, b: &IntMatrix3) -> IntMatrix3 {
    let mut c = [[0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    c
}

/// Inverse of a unimodular integer matrix via the adjugate.
pub fn unimodular_inverse3(m: &IntMatrix3) -> Result<IntMatrix3, AlgebraError> {
    let d = det3(m);
    if d != 1 && d != -1 {
        return Err(AlgebraError::NotUnimodular(d));
    }
    let mut inv = [[0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let (r0, r1) = other_two(j);
            let (c0, c1) = other_two(i);
            let minor = m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
            let sign = if (i + j) % 2 == 0 { 1 } else { -1 };
            inv[i][j] = sign * minor * d;
        }
    }
    Ok(inv)
}

fn other_two(i: usize) -> (usize, usize) {
    match i {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    }
}

pub fn apply3(m: &IntMatrix3, k: [i64; 3]) -> [i64; 3] {
    let mut out = [0; 3];
    for i in 0..3 {
        out[i] = (0..3).map(|j| m[i][j] * k[j]).sum();
    }
    out
}

/// Coefficients (c2, c1, c0) of t^3 - c2 t^2 + c1 t - c0.
pub fn char_poly3(m: &IntMatrix3) -> (i64, i64, i64) {
    let tr = m[0][0] + m[1][1] + m[2][2];
    let minors = m[0][0] * m[1][1] - m[0][1] * m[1][0] + m[0][0] * m[2][2] - m[0][2] * m[2][0]
        + m[1][1] * m[2][2]
        - m[1][2] * m[2][1];
    (tr, minors, det3(m))
}

fn eval_cubic(c: (i64, i64, i64), t: f64) -> f64 {
    ((t - c.0 as f64) * t + c.1 as f64) * t - c.2 as f64
}

fn eval_cubic_int(c: (i64, i64, i64), t: i64) -> i128 {
    let t = t as i128;
    ((t - c.0 as i128) * t + c.1 as i128) * t - c.2 as i128
}

fn cubic_discriminant(c: (i64, i64, i64)) -> i128 {
    let (b, cc, d) = (-(c.0 as i128), c.1 as i128, -(c.2 as i128));
    18 * b * cc * d - 4 * b * b * b * d + b * b * cc * cc - 4 * cc * cc * cc - 27 * d * d
}

/// The unique real root of a cubic whose discriminant is negative.
fn single_real_root(c: (i64, i64, i64)) -> f64 {
    let bound = 1.0 + [c.0, c.1, c.2].iter().map(|v| v.abs() as f64).fold(0.0, f64::max);
    let (mut lo, mut hi) = (-bound, bound);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if eval_cubic(c, mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let mut t = 0.5 * (lo + hi);
    for _ in 0..3 {
        let d = (3.0 * t - 2.0 * c.0 as f64) * t + c.1 as f64;
        if d == 0.0 {
            break;
        }
        let next = t - eval_cubic(c, t) / d;
        if (next - t).abs() > (hi - lo).abs() + 1e-300 {
            break;
        }
        t = next;
    }
    t
}

/// Degree of the minimal polynomial over Q of the real root `lambda` of a monic integer cubic.
fn minimal_degree3(c: (i64, i64, i64), lambda: f64) -> u32 {
    let c0 = c.2.abs();
    if c0 == 0 {
        return if lambda.abs() < 1e-12 { 1 } else { 2 };
    }
    let mut rational_roots = Vec::new();
    for d in 1..=c0 {
        if c0 % d == 0 {
            for r in [d, -d] {
                if eval_cubic_int(c, r) == 0 {
                    rational_roots.push(r);
                }
            }
        }
    }
    match rational_roots.iter().find(|&&r| (r as f64 - lambda).abs() < 1e-9) {
        Some(_) => 1,
        None if rational_roots.is_empty() => 3,
        None => 2,
    }
}

fn cross<T>(a: [T; 3], b: [T; 3]) -> [T; 3]
where
    T: Copy + std::ops::Mul<Output = T> + std::ops::Sub<Output = T>,
{
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn null_vector_complex(m: &IntMatrix3, ev: Complex64) -> [Complex64; 3] {
    let rows: Vec<[Complex64; 3]> = (0..3)
        .map(|i| {
            let mut r = [Complex64::new(0.0, 0.0); 3];
            for j in 0..3 {
                r[j] = Complex64::new(m[i][j] as f64, 0.0) - if i == j { ev } else { Complex64::new(0.0, 0.0) };
            }
            r
        })
        .collect();
    let candidates = [cross(rows[0], rows[1]), cross(rows[0], rows[2]), cross(rows[1], rows[2])];
    let norm = |v: &[Complex64; 3]| v.iter().map(|z| z.norm_sqr()).sum::<f64>();
    let best = candidates.iter().max_by(|a, b| norm(a).total_cmp(&norm(b))).copied().unwrap_or(candidates[0]);
    let n = norm(&best).sqrt();
    best.map(|z| z / n)
}

fn complex_residual(m: &IntMatrix3, ev: Complex64, v: &[Complex64; 3]) -> f64 {
    let scale = m.iter().flatten().map(|x| x.abs() as f64).fold(0.0, f64::max).max(ev.norm()).max(1.0);
    let mut r = 0.0;
    for i in 0..3 {
        let mv: Complex64 = (0..3).map(|j| v[j] * m[i][j] as f64).sum();
        r += (mv - ev * v[i]).norm_sqr();
    }
    r.sqrt() / scale
}

/// Best rational approximation p/q (q <= q_max) within `tol` of `x`, if one exists.
pub fn rational_match(x: f64, q_max: i64, tol: f64) -> Option<(i64, i64)> {
    let (mut h_prev, mut h) = (1i64, x.floor() as i64);
    let (mut k_prev, mut k) = (0i64, 1i64);
    let mut frac = x - x.floor();
    loop {
        if (x - h as f64 / k as f64).abs() <= tol * x.abs().max(1.0) {
            return Some((h, k));
        }
        if frac < 1e-300 {
            return None;
        }
        let inv = 1.0 / frac;
        let a = inv.floor();
        frac = inv - a;
        if a > 1e12 {
            return None;
        }
        let a = a as i64;
        let k_next = a.checked_mul(k).and_then(|v| v.checked_add(k_prev))?;
        if k_next > q_max {
            return None;
        }
        let h_next = a.checked_mul(h).and_then(|v| v.checked_add(h_prev))?;
        (h_prev, h, k_prev, k) = (h, h_next, k, k_next);
    }
}

fn ensure_irrational(label: &'static str, x: f64) -> Result<(), AlgebraError> {
    match rational_match(x, RATIONAL_Q_MAX, RATIONAL_TOL) {
        Some((p, q)) => Err(AlgebraError::RationalRatio(label, x, p, q)),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralDataSm {
    pub matrix: IntMatrix3,
    pub lambda: f64,
    #[serde(serialize_with = "ser_complex")]
    pub mu: Complex64,
    pub ell: [f64; 3],
    #[serde(serialize_with = "ser_complex3")]
    pub m_vec: [Complex64; 3],
    pub degree_d: u32,
    pub ratio_index: (usize, usize),
    pub ratio: f64,
    pub residual_lambda: f64,
    pub residual_mu: f64,
    pub unit_defect: f64,
}

fn ser_complex<S: serde::Serializer>(z: &Complex64, s: S) -> Result<S::Ok, S::Error> {
    [z.re, z.im].serialize(s)
}

fn ser_complex3<S: serde::Serializer>(v: &[Complex64; 3], s: S) -> Result<S::Ok, S::Error> {
    v.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>().serialize(s)
}

pub fn spectral_sm(m: &IntMatrix3) -> Result<SpectralDataSm, AlgebraError> {
    let d = det3(m);
    if d != 1 {
        return Err(AlgebraError::NotUnimodular(d));
    }
    let c = char_poly3(m);
    if cubic_discriminant(c) >= 0 {
        return Err(AlgebraError::NoInoueSpectrum);
    }
    let lambda = single_real_root(c);
    if lambda <= 1.0 {
        return Err(AlgebraError::NoInoueSpectrum);
    }
    let beta = lambda - c.0 as f64;
    let gamma = c.2 as f64 / lambda;
    let disc = 4.0 * gamma - beta * beta;
    if disc <= 0.0 {
        return Err(AlgebraError::NoInoueSpectrum);
    }
    let mu = Complex64::new(-0.5 * beta, 0.5 * disc.sqrt());

    let ell_c = null_vector_complex(m, Complex64::new(lambda, 0.0));
    let mut ell = ell_c.map(|z| z.re);
    let n = ell.iter().map(|x| x * x).sum::<f64>().sqrt();
    ell.iter_mut().for_each(|x| *x /= n);
    if let Some(&first) = ell.iter().find(|x| x.abs() > RATIO_FLOOR) {
        if first < 0.0 {
            ell.iter_mut().for_each(|x| *x = -*x);
        }
    }

    let mut m_vec = null_vector_complex(m, mu);
    let pivot = m_vec.iter().find(|z| z.norm() > RATIO_FLOOR).copied().ok_or(AlgebraError::DegenerateEigenvector)?;
    let phase = pivot.conj() / pivot.norm();
    m_vec.iter_mut().for_each(|z| *z *= phase);

    let residual_lambda = complex_residual(m, Complex64::new(lambda, 0.0), &ell.map(|x| Complex64::new(x, 0.0)));
    let residual_mu = complex_residual(m, mu, &m_vec);
    let worst = residual_lambda.max(residual_mu);
    if worst > EIGEN_RESIDUAL_TOL {
        return Err(AlgebraError::EigenResidual(worst));
    }
    let unit_defect = (lambda * mu.norm_sqr() - 1.0).abs();
    if unit_defect > EIGEN_RESIDUAL_TOL {
        return Err(AlgebraError::EigenResidual(unit_defect));
    }

    let ratio_index = (0..3)
        .flat_map(|i| (0..3).map(move |j| (i, j)))
        .find(|&(i, j)| i != j && ell[j].abs() > RATIO_FLOOR)
        .ok_or(AlgebraError::DegenerateEigenvector)?;
    let ratio = ell[ratio_index.0] / ell[ratio_index.1];
    ensure_irrational("eigenvector ratio", ratio)?;

    Ok(SpectralDataSm {
        matrix: *m,
        lambda,
        mu,
        ell,
        m_vec,
        degree_d: minimal_degree3(c, lambda),
        ratio_index,
        ratio,
        residual_lambda,
        residual_mu,
        unit_defect,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralDataSplus {
    pub matrix: IntMatrix2,
    pub gamma: f64,
    pub a_vec: [f64; 2],
    pub b_vec: [f64; 2],
    pub degree_d: u32,
    pub residual: f64,
}

fn eigvec2(n: &IntMatrix2, ev: f64) -> Result<[f64; 2], AlgebraError> {
    let c1 = [n[0][1] as f64, ev - n[0][0] as f64];
    let c2 = [ev - n[1][1] as f64, n[1][0] as f64];
    let norm = |v: &[f64; 2]| v[0].hypot(v[1]);
    let mut v = if norm(&c1) >= norm(&c2) { c1 } else { c2 };
    let len = norm(&v);
    if len < RATIO_FLOOR {
        return Err(AlgebraError::DegenerateEigenvector);
    }
    v = v.map(|x| x / len);
    if let Some(&first) = v.iter().find(|x| x.abs() > RATIO_FLOOR) {
        if first < 0.0 {
            v = v.map(|x| -x);
        }
    }
    Ok(v)
}

pub fn spectral_splus(n: &IntMatrix2) -> Result<SpectralDataSplus, AlgebraError> {
    let d = det2(n);
    if d != 1 {
        return Err(AlgebraError::NotUnimodular(d));
    }
    let tr = n[0][0] + n[1][1];
    if tr <= 2 {
        return Err(AlgebraError::NoHyperbolicSpectrum);
    }
    let tr_f = tr as f64;
    let gamma = 0.5 * (tr_f + (tr_f * tr_f - 4.0).sqrt());
    let a_vec = eigvec2(n, gamma)?;
    let b_vec = eigvec2(n, 1.0 / gamma)?;
    let res = |v: &[f64; 2], ev: f64| {
        (0..2)
            .map(|i| (n[i][0] as f64 * v[0] + n[i][1] as f64 * v[1] - ev * v[i]).powi(2))
            .sum::<f64>()
            .sqrt()
            / tr_f.max(1.0)
    };
    let residual = res(&a_vec, gamma).max(res(&b_vec, 1.0 / gamma));
    if residual > EIGEN_RESIDUAL_TOL {
        return Err(AlgebraError::EigenResidual(residual));
    }
    if a_vec[0].abs() < RATIO_FLOOR || b_vec[0].abs() < RATIO_FLOOR {
        return Err(AlgebraError::DegenerateEigenvector);
    }
    ensure_irrational("slope of a", a_vec[1] / a_vec[0])?;
    ensure_irrational("slope of b", b_vec[1] / b_vec[0])?;
    let sq = ((tr * tr - 4) as f64).sqrt().round() as i64;
    let degree_d = if sq * sq == tr * tr - 4 { 1 } else { 2 };
    Ok(SpectralDataSplus { matrix: *n, gamma, a_vec, b_vec, degree_d, residual })
}

#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct LiouvilleMargin {
    pub x: f64,
    pub degree_d: u32,
    pub q_bound: u64,
    pub margin: f64,
    pub argmin_q: u64,
}

/// Minimum of q^d |x - p/q| over 2 <= q <= q_bound with p the nearest integer to q x.
pub fn liouville_margin(x: f64, degree_d: u32, q_bound: u64) -> Result<LiouvilleMargin, AlgebraError> {
    if degree_d < 2 || q_bound < 2 {
        return Err(AlgebraError::InvalidMarginParameters(degree_d, q_bound));
    }
    let (margin, argmin_q) = (2..=q_bound)
        .map(|q| {
            let qf = q as f64;
            let qx = qf * x;
            (qf.powi(degree_d as i32 - 1) * (qx - qx.round()).abs(), q)
        })
        .fold((f64::INFINITY, 0), |best, cur| if cur.0 < best.0 { cur } else { best });
    if margin < MARGIN_FLOOR {
        return Err(AlgebraError::RationalInput(margin));
    }
    Ok(LiouvilleMargin { x, degree_d, q_bound, margin, argmin_q })
}

#[cfg(test)]
mod tests {
    use super::*;

    const COMPANION: IntMatrix3 = [[0, 1, 0], [0, 0, 1], [1, 1, 0]];

    #[test]
    fn companion_spectrum() {
        let s = spectral_sm(&COMPANION).unwrap();
        assert!((s.lambda - 1.324_717_957_244_746).abs() < 1e-13);
        assert!((s.mu.norm_sqr() - 0.754_877_666_246_693).abs() < 1e-12);
        assert_eq!(s.degree_d, 3);
        assert_eq!(s.ratio_index, (0, 1));
        for j in 0..3 {
            let row: f64 = (0..3).map(|k| COMPANION[j][k] as f64 * s.ell[k]).sum();
            assert!((row - s.lambda * s.ell[j]).abs() < 1e-12);
        }
        // (1, lambda, lambda^2) direction
        assert!((s.ell[1] / s.ell[0] - s.lambda).abs() < 1e-12);
        assert!((s.ell[2] / s.ell[0] - s.lambda * s.lambda).abs() < 1e-12);
        assert!(s.m_vec[0].im.abs() < 1e-15 && s.m_vec[0].re > 0.0);
    }

    #[test]
    fn rejected_sm_inputs() {
        let id = [[1, 0, 0], [0, 1, 0], [0, 0, 1]];
        assert_eq!(spectral_sm(&id).unwrap_err(), AlgebraError::NoInoueSpectrum);
        let sym = [[1, 1, 1], [1, 2, 2], [1, 2, 3]];
        assert_eq!(spectral_sm(&sym).unwrap_err(), AlgebraError::NoInoueSpectrum);
        let two = [[2, 0, 0], [0, 1, 0], [0, 0, 1]];
        assert_eq!(spectral_sm(&two).unwrap_err(), AlgebraError::NotUnimodular(2));
        // inverse companion: real root < 1
        let inv = unimodular_inverse3(&COMPANION).unwrap();
        assert_eq!(spectral_sm(&inv).unwrap_err(), AlgebraError::NoInoueSpectrum);
    }

    #[test]
    fn inverse_and_transpose() {
        let inv = unimodular_inverse3(&COMPANION).unwrap();
        assert_eq!(inv, [[-1, 0, 1], [1, 0, 0], [0, 1, 0]]);
        assert_eq!(mul3(&inv, &COMPANION), [[1, 0, 0], [0, 1, 0], [0, 0, 1]]);
        assert_eq!(transpose3(&transpose3(&COMPANION)), COMPANION);
    }

    #[test]
    fn splus_spectrum() {
        let s = spectral_splus(&[[2, 1], [1, 1]]).unwrap();
        assert!((s.gamma - (3.0 + 5f64.sqrt()) / 2.0).abs() < 1e-14);
        assert_eq!(s.degree_d, 2);
        assert_eq!(spectral_splus(&[[1, 0], [0, 1]]).unwrap_err(), AlgebraError::NoHyperbolicSpectrum);
        assert_eq!(spectral_splus(&[[0, -1], [1, 0]]).unwrap_err(), AlgebraError::NoHyperbolicSpectrum);
        assert_eq!(spectral_splus(&[[-2, 1], [1, -1]]).unwrap_err(), AlgebraError::NoHyperbolicSpectrum);
    }

    fn brute_margin(x: f64, d: i32, q_bound: u64) -> f64 {
        let mut best = f64::INFINITY;
        for q in 2..=q_bound {
            for p in ((q as f64 * x).floor() as i64 - 1)..=((q as f64 * x).ceil() as i64 + 1) {
                let v = (q as f64).powi(d) * (x - p as f64 / q as f64).abs();
                best = best.min(v);
            }
        }
        best
    }

    #[test]
    fn margins_match_exhaustive_search() {
        let r2 = liouville_margin(2f64.sqrt(), 2, 100).unwrap();
        assert!((r2.margin - brute_margin(2f64.sqrt(), 2, 100)).abs() < 1e-12);
        assert!((r2.margin - 0.343_145_750_507_619_8).abs() < 1e-12);
        assert_eq!(r2.argmin_q, 2);
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        let g = liouville_margin(phi, 2, 1000).unwrap();
        assert!((g.margin - brute_margin(phi, 2, 1000)).abs() < 1e-12);
        assert!((g.margin - 0.437_694_101_250_945_9).abs() < 1e-12);
        assert!(matches!(liouville_margin(0.5, 2, 10), Err(AlgebraError::RationalInput(_))));
    }

    #[test]
    fn rational_detection() {
        assert_eq!(rational_match(0.375, 1000, 1e-15), Some((3, 8)));
        assert_eq!(rational_match(2f64.sqrt(), 1_000_000, 1e-15), None);
        assert_eq!(rational_match(-1.25, 100, 1e-15), Some((-5, 4)));
    }
}
