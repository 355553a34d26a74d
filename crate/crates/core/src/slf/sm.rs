//! Fourier division on torus-bundle grids.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::{check_means, slice_means, DecayPoint, LeafPotential, SlfError, SolverOptions, SolverReport};
use crate::grid::{DomainGrid, ScalarField};
use crate::sm_ops::{SmOperator, TorusOp};
use crate::surface::{GlueDirection, SurfaceSm};

const DIVISOR_FLOOR: f64 = 1e-14;

fn norm(k: [i64; 3]) -> f64 {
    ((k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64).sqrt()
}

/// min z_k |k|^(2(d-1)) over 0 < |k| <= k_max.
pub fn liouville_check(surface: &SurfaceSm, k_max: i64) -> f64 {
    let power = 2.0 * (surface.spectral.degree_d as f64 - 1.0);
    let mut best = f64::INFINITY;
    for i in -k_max..=k_max {
        for j in -k_max..=k_max {
            for l in -k_max..=k_max {
                let k = [i, j, l];
                let kn = norm(k);
                if kn == 0.0 || kn > k_max as f64 {
                    continue;
                }
                best = best.min(surface.divisor(k) * kn.powf(power));
            }
        }
    }
    best
}

/// Delta_D u = (u_x1x1 + u_y1y1) / (32 y2).
pub fn leafwise_laplacian(surface: &SurfaceSm, grid: &DomainGrid, u: &ScalarField) -> Result<ScalarField, SlfError> {
    grid.check(u)?;
    let op = SmOperator::new(surface, grid)?;
    let mut out = grid.zeros();
    for i in 0..grid.n_y2 {
        let lap = op.derive(u.slice(i), TorusOp::Leaf);
        let scale = 1.0 / (32.0 * grid.y2(i));
        out.slice_mut(i).iter_mut().zip(lap).for_each(|(o, v)| *o = v * scale);
    }
    Ok(out)
}

/// max |u(p, 1) - u(Psi(p), Lambda)| for the torus-bundle gluing.
pub fn seam_residual(surface: &SurfaceSm, grid: &DomainGrid, u: &ScalarField) -> f64 {
    let n = grid.torus_n().expect("torus grid");
    let top = surface.transport(n, u.slice(grid.n_y2 - 1), GlueDirection::Down);
    u.slice(0).iter().zip(&top).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
}

pub fn solve_sm(surface: &SurfaceSm, grid: &DomainGrid, rhs: &ScalarField, opts: &SolverOptions) -> Result<(LeafPotential, SolverReport), SlfError> {
    grid.check(rhs)?;
    check_means(rhs, opts.mean_tol)?;
    let op = SmOperator::new(surface, grid)?;
    let np = op.per_slice();
    let modes: Vec<Option<[i64; 3]>> = (0..np).map(|idx| op.mode(idx)).collect();
    let mut min_divisor = f64::INFINITY;
    let mut liouville = f64::INFINITY;
    let power = 2.0 * (surface.spectral.degree_d as f64 - 1.0);
    for (idx, mode) in modes.iter().enumerate() {
        let Some(k) = *mode else { continue };
        if k == [0, 0, 0] {
            continue;
        }
        let z = op.divisor(idx);
        if z < DIVISOR_FLOOR {
            return Err(SlfError::DivisorUnderflow { mode: k, divisor: z });
        }
        min_divisor = min_divisor.min(z);
        liouville = liouville.min(z * norm(k).powf(power));
    }

    let mut u = grid.zeros();
    let shells = op.n() / 2;
    let mut decay: Vec<DecayPoint> =
        (0..=3 * shells).map(|s| DecayPoint { mode_norm: s as f64, abs_coeff: 0.0, divisor: f64::INFINITY }).collect();
    let mid = grid.n_y2 / 2;
    for i in 0..grid.n_y2 {
        let y2 = grid.y2(i);
        let d = op.forward(rhs.slice(i));
        let a: Vec<Complex64> = d
            .iter()
            .enumerate()
            .map(|(idx, &dk)| match modes[idx] {
                Some(k) if k != [0, 0, 0] => -32.0 * y2 * dk / (4.0 * PI * PI * op.divisor(idx)),
                _ => Complex64::new(0.0, 0.0),
            })
            .collect();
        if i == mid {
            for (idx, c) in a.iter().enumerate() {
                let Some(k) = modes[idx] else { continue };
                if k == [0, 0, 0] {
                    continue;
                }
                let p = &mut decay[norm(k).round() as usize];
                p.abs_coeff = p.abs_coeff.max(c.norm() / np as f64);
                p.divisor = p.divisor.min(op.divisor(idx));
            }
        }
        u.set_slice(i, &op.inverse_real(a));
    }
    decay.retain(|p| p.divisor.is_finite());

    let lap = leafwise_laplacian(surface, grid, &u)?;
    let residual_linf = lap.max_abs_diff(rhs);
    let seam = seam_residual(surface, grid, &u);
    let limit = 1e2 * opts.tol * u.max_abs().max(1.0);
    if seam > limit {
        return Err(SlfError::SeamMismatch { residual: seam, limit });
    }
    let report = SolverReport {
        truncation: shells - 1,
        min_divisor,
        liouville_check: liouville,
        residual_linf,
        reality_defect: 0.0,
        decay,
    };
    let mean_per_slice = slice_means(&u);
    Ok((LeafPotential { u, seam_residual: seam, mean_per_slice }, report))
}
