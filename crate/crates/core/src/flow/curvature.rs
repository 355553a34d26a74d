//! Chern curvature R_{i jb k lb} = -d_i d_jb g_{k lb} + g^{p qb} d_i g_{k qb} d_jb g_{p lb} and its pointwise norm.

use num_complex::Complex64;

use super::state::FrameSlabs;
use super::FlowError;
use crate::grid::{DomainGrid, FiberGrid};
use crate::slab::Slab;
use crate::sm_ops::{is_constant, SmOperator, TorusOp};
use crate::surface::{frame_to_coord, FrameComponents, GlueDirection, Surface, SurfaceSm};

pub type M2 = [[Complex64; 2]; 2];

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const Z2: M2 = [[ZERO; 2]; 2];

/// Metric matrix with its first and mixed second holomorphic derivatives at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricJet {
    pub g: M2,
    /// d[i] = d_i G for i in (z, w).
    pub d: [M2; 2],
    /// dd[i][j] = d_i d_jb G.
    pub dd: [[M2; 2]; 2],
}

fn mul(a: &M2, b: &M2) -> M2 {
    let mut c = Z2;
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

fn adjoint(a: &M2) -> M2 {
    [[a[0][0].conj(), a[1][0].conj()], [a[0][1].conj(), a[1][1].conj()]]
}

fn inverse(a: &M2) -> M2 {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    [[a[1][1] / det, -a[0][1] / det], [-a[1][0] / det, a[0][0] / det]]
}

/// |Rm|_g from a metric jet, or None when g is not positive.
pub fn curvature_norm(jet: &MetricJet) -> Option<f64> {
    let g = &jet.g;
    let g00 = g[0][0].re;
    if !(g00 > 0.0) {
        return None;
    }
    let l00 = g00.sqrt();
    let l10 = g[1][0] / l00;
    let rest = g[1][1].re - l10.norm_sqr();
    if !(rest > 0.0) {
        return None;
    }
    let l11 = rest.sqrt();
    let w: M2 = [[Complex64::new(1.0 / l00, 0.0), ZERO], [-l10 / (l00 * l11), Complex64::new(1.0 / l11, 0.0)]];
    let w_adj = adjoint(&w);
    let h = inverse(g);
    let mut m = [[Z2; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let quad = mul(&mul(&jet.d[i], &h), &adjoint(&jet.d[j]));
            let mut r = Z2;
            for k in 0..2 {
                for l in 0..2 {
                    r[k][l] = quad[k][l] - jet.dd[i][j][k][l];
                }
            }
            m[i][j] = mul(&mul(&w, &r), &w_adj);
        }
    }
    let mut total = 0.0;
    for a in 0..2 {
        for b in 0..2 {
            for c in 0..2 {
                for d in 0..2 {
                    let mut t = ZERO;
                    for i in 0..2 {
                        for j in 0..2 {
                            t += w[a][i] * w[b][j].conj() * m[i][j][c][d];
                        }
                    }
                    total += t.norm_sqr();
                }
            }
        }
    }
    Some(total.sqrt())
}

/// Real partial derivatives of one complex component; x/y pairs per complex coordinate, y2 through log y2.
#[derive(Default)]
struct Partials {
    x1: Vec<Complex64>,
    y1: Vec<Complex64>,
    x2: Vec<Complex64>,
    y2: Vec<Complex64>,
    x1x1: Vec<Complex64>,
    y1y1: Vec<Complex64>,
    x2x2: Vec<Complex64>,
    y2y2: Vec<Complex64>,
    x1x2: Vec<Complex64>,
    y1x2: Vec<Complex64>,
    x1y2: Vec<Complex64>,
    y1y2: Vec<Complex64>,
}

impl Partials {
    fn at(v: &[Complex64], i: usize) -> Complex64 {
        if v.is_empty() {
            ZERO
        } else if v.len() == 1 {
            v[0]
        } else {
            v[i]
        }
    }

    /// (d_z c, d_zb c, d_w c, d_wb c).
    fn first(&self, i: usize) -> [Complex64; 4] {
        let im = Complex64::i();
        let (x1, y1, x2, y2) = (Self::at(&self.x1, i), Self::at(&self.y1, i), Self::at(&self.x2, i), Self::at(&self.y2, i));
        [0.5 * (x1 - im * y1), 0.5 * (x1 + im * y1), 0.5 * (x2 - im * y2), 0.5 * (x2 + im * y2)]
    }

    /// dd[i][j] = d_i d_jb c.
    fn mixed(&self, i: usize) -> [[Complex64; 2]; 2] {
        let im = Complex64::i();
        let g = |v: &Vec<Complex64>| Self::at(v, i);
        let zz = 0.25 * (g(&self.x1x1) + g(&self.y1y1));
        let ww = 0.25 * (g(&self.x2x2) + g(&self.y2y2));
        let re = g(&self.x1x2) + g(&self.y1y2);
        let cross = g(&self.x1y2) - g(&self.y1x2);
        [[zz, 0.25 * (re + im * cross)], [0.25 * (re - im * cross), ww]]
    }
}

fn jet_from(p: &[Partials; 3], g: [Complex64; 3], i: usize) -> MetricJet {
    let f: Vec<[Complex64; 4]> = p.iter().map(|c| c.first(i)).collect();
    let m: Vec<[[Complex64; 2]; 2]> = p.iter().map(|c| c.mixed(i)).collect();
    let (zz, zw, ww) = (0, 1, 2);
    let d = |k: usize| -> M2 {
        // d_i of conj(zw) is conj(d_ib zw)
        let bar = if k == 0 { 1 } else { 3 };
        [[f[zz][2 * k], f[zw][2 * k]], [f[zw][bar].conj(), f[ww][2 * k]]]
    };
    let dd = |a: usize, b: usize| -> M2 { [[m[zz][a][b], m[zw][a][b]], [m[zw][b][a].conj(), m[ww][a][b]]] };
    MetricJet {
        g: [[g[0], g[1]], [g[1].conj(), g[2]]],
        d: [d(0), d(1)],
        dd: [[dd(0, 0), dd(0, 1)], [dd(1, 0), dd(1, 1)]],
    }
}

fn coord_slab(surface: &Surface, y2: f64, r: &Slab<f64>, s: &Slab<f64>, u: &Slab<Complex64>) -> [Slab<Complex64>; 3] {
    let e = surface.coframe(0.0, y2);
    let c = r.zip3(s, u, |r, s, u| frame_to_coord(&e, &FrameComponents::new(r, s, u)));
    [c.map(|c| c.zz.into()), c.map(|c| c.zw), c.map(|c| c.ww.into())]
}

/// Frame slabs of the slice `offset` away from `slice`, with glued ghosts past the seam.
fn neighbor_frame(sm: &SurfaceSm, op: &SmOperator, state: &FrameSlabs, slice: usize, up: bool) -> (Slab<f64>, Slab<f64>, Slab<Complex64>) {
    let last = state.n_slices() - 1;
    let (src, dir) = match (up, slice) {
        (false, 0) => (last - 1, Some(GlueDirection::Down)),
        (false, i) => (i - 1, None),
        (true, i) if i == last => (1, Some(GlueDirection::Up)),
        (true, i) => (i + 1, None),
    };
    match dir {
        None => (state.r[src].clone(), state.s[src].clone(), state.u[src].clone()),
        Some(dir) => {
            let map = op.transport_map(dir);
            let f = sm.frame_glue_factor(dir);
            (state.r[src].permuted(map), state.s[src].permuted(map), state.u[src].permuted(map).map(|u| u * f))
        }
    }
}

fn spectral(op: &SmOperator, data: &Slab<Complex64>, ops: &[TorusOp]) -> Vec<Vec<Complex64>> {
    match data {
        Slab::Dense(d) if !is_constant(d) => {
            let spec = op.forward_complex(d);
            ops.iter().map(|&o| op.inverse_complex(op.apply_symbol(&spec, |i| op.symbol(o, i)))).collect()
        }
        _ => vec![Vec::new(); ops.len()],
    }
}

fn torus_curvature(surface: &Surface, sm: &SurfaceSm, grid: &DomainGrid, state: &FrameSlabs) -> Result<f64, FlowError> {
    let op = SmOperator::new(sm, grid)?;
    let ds = grid.ds();
    let mut worst = 0.0f64;
    for i in 0..grid.n_y2 {
        let s = grid.s(i);
        let (e1, e2) = ((-s).exp(), (-2.0 * s).exp());
        let (pr, ps, pu) = neighbor_frame(sm, &op, state, i, false);
        let (nr, ns, nu) = neighbor_frame(sm, &op, state, i, true);
        let prev = coord_slab(surface, (s - ds).exp(), &pr, &ps, &pu);
        let cur = coord_slab(surface, grid.y2(i), &state.r[i], &state.s[i], &state.u[i]);
        let next = coord_slab(surface, (s + ds).exp(), &nr, &ns, &nu);
        let mut parts: [Partials; 3] = Default::default();
        let mut uniform = true;
        for c in 0..3 {
            let fs = next[c].zip_with(&prev[c], |a, b| (a - b) / (2.0 * ds));
            let fss = prev[c].zip3(&cur[c], &next[c], |a, b, d| (a - 2.0 * b + d) / (ds * ds));
            let torus = spectral(&op, &cur[c], &[TorusOp::X1, TorusOp::Y1, TorusOp::X2, TorusOp::X1X1, TorusOp::Y1Y1, TorusOp::X2X2, TorusOp::X1X2, TorusOp::Y1X2]);
            let vertical = spectral(&op, &fs, &[TorusOp::X1, TorusOp::Y1, TorusOp::X2]);
            uniform &= cur[c].is_uniform() && fs.is_uniform() && fss.is_uniform();
            let np = if fs.is_uniform() && fss.is_uniform() { 1 } else { op.per_slice() };
            let p = &mut parts[c];
            p.y2 = (0..np).map(|k| e1 * fs.at(k)).collect();
            p.y2y2 = (0..np).map(|k| e2 * (fss.at(k) - fs.at(k))).collect();
            let mut it = torus.into_iter();
            p.x1 = it.next().unwrap_or_default();
            p.y1 = it.next().unwrap_or_default();
            p.x2 = it.next().unwrap_or_default();
            p.x1x1 = it.next().unwrap_or_default();
            p.y1y1 = it.next().unwrap_or_default();
            p.x2x2 = it.next().unwrap_or_default();
            p.x1x2 = it.next().unwrap_or_default();
            p.y1x2 = it.next().unwrap_or_default();
            let mut vt = vertical.into_iter().map(|v| v.into_iter().map(|x| x * e1).collect::<Vec<_>>());
            p.x1y2 = vt.next().unwrap_or_default();
            p.y1y2 = vt.next().unwrap_or_default();
            // x2y2 does not enter the mixed holomorphic derivatives
            let _ = vt.next();
        }
        let nodes = if uniform { 1 } else { op.per_slice() };
        for k in 0..nodes {
            let g = [cur[0].at(k), cur[1].at(k), cur[2].at(k)];
            let norm = curvature_norm(&jet_from(&parts, g, k)).ok_or(FlowError::NotPositive { slice: i, node: k })?;
            worst = worst.max(norm);
        }
    }
    Ok(worst)
}

fn homogeneous_curvature(surface: &Surface, grid: &DomainGrid, state: &FrameSlabs) -> Result<f64, FlowError> {
    let Surface::Splus(sp) = surface else { unreachable!("homogeneous curvature is only used on nilmanifold bundles") };
    let last = grid.n_y2 - 1;
    let ds = grid.ds();
    let frame = |j: usize| -> Result<FrameComponents, FlowError> {
        if !state.is_uniform(j) {
            return Err(FlowError::NotHomogeneous(j));
        }
        Ok(state.at(j, 0))
    };
    let mut worst = 0.0f64;
    for i in 0..grid.n_y2 {
        let s = grid.s(i);
        let (e1, e2) = ((-s).exp(), (-2.0 * s).exp());
        let hp = frame(if i == 0 { last - 1 } else { i - 1 })?;
        let hc = frame(i)?;
        let hn = frame(if i == last { 1 } else { i + 1 })?;
        let y1 = sp.m_twist * s;
        // coordinate components at (y1 + dy, slice offset); quadratic in y1 so unit steps are exact
        let at = |h: &FrameComponents, dy: f64, sy: f64| -> [Complex64; 3] {
            let c = frame_to_coord(&surface.coframe(y1 + dy, sy.exp()), h);
            [c.zz.into(), c.zw, c.ww.into()]
        };
        let mut parts: [Partials; 3] = Default::default();
        let rows: Vec<[[Complex64; 3]; 3]> = [(hp, s - ds), (hc, s), (hn, s + ds)]
            .iter()
            .map(|(h, sy)| [at(h, -1.0, *sy), at(h, 0.0, *sy), at(h, 1.0, *sy)])
            .collect();
        for c in 0..3 {
            let v = |j: usize, k: usize| rows[j][k][c];
            let fs = (v(2, 1) - v(0, 1)) / (2.0 * ds);
            let fss = (v(0, 1) - 2.0 * v(1, 1) + v(2, 1)) / (ds * ds);
            let dy = |j: usize| 0.5 * (v(j, 2) - v(j, 0));
            let p = &mut parts[c];
            p.y1 = vec![dy(1)];
            p.y1y1 = vec![v(1, 2) - 2.0 * v(1, 1) + v(1, 0)];
            p.y2 = vec![e1 * fs];
            p.y2y2 = vec![e2 * (fss - fs)];
            p.y1y2 = vec![e1 * (dy(2) - dy(0)) / (2.0 * ds)];
        }
        let g = rows[1][1];
        worst = worst.max(curvature_norm(&jet_from(&parts, g, 0)).ok_or(FlowError::NotPositive { slice: i, node: 0 })?);
    }
    Ok(worst)
}

/// Grid maximum of |Rm(omega)|_omega.
pub fn curvature_sup(surface: &Surface, grid: &DomainGrid, state: &FrameSlabs) -> Result<f64, FlowError> {
    match (surface, grid.fiber) {
        (Surface::Sm(sm), FiberGrid::Torus { .. }) => torus_curvature(surface, sm, grid, state),
        (Surface::Splus(_), FiberGrid::Cell { .. }) => homogeneous_curvature(surface, grid, state),
        _ => Err(crate::surface::SurfaceError::WrongFamily.into()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::HermitianMetricField;
    use crate::flow::reference_family;
    use crate::surface::build_sm;

    fn companion() -> Surface {
        Surface::Sm(build_sm(&[[0, 1, 0], [0, 0, 1], [1, 1, 0]]).unwrap())
    }

    fn family_state(grid: &DomainGrid, h: FrameComponents) -> FrameSlabs {
        FrameSlabs::from_field(&HermitianMetricField::uniform(grid, h))
    }

    #[test]
    fn tricerri_curvature_closed_form() {
        let s = companion();
        let expected = 5f64.sqrt() / 4.0;
        let mut errors = Vec::new();
        for n_y2 in [17, 33] {
            let grid = s.grid_torus(4, n_y2).unwrap();
            let k = curvature_sup(&s, &grid, &family_state(&grid, FrameComponents::new(1.0, 1.0, ZERO))).unwrap();
            errors.push((k - expected).abs());
        }
        assert!(errors[1] < 1e-3);
        // second-order differences in log y2
        assert!((errors[0] / errors[1] - 4.0).abs() < 0.2);
    }

    #[test]
    fn reference_family_scales_with_alpha_part() {
        let s = companion();
        let grid = s.grid_torus(4, 65).unwrap();
        let t = 1.3;
        let h = reference_family(t);
        let k = curvature_sup(&s, &grid, &family_state(&grid, h)).unwrap();
        assert!((k - 5f64.sqrt() / (4.0 * h.s)).abs() < 1e-3);
        // rescaling the beta part leaves the curvature unchanged
        let k2 = curvature_sup(&s, &grid, &family_state(&grid, FrameComponents::new(7.0 * h.r, h.s, ZERO))).unwrap();
        assert!((k - k2).abs() < 1e-12);
    }

    #[test]
    fn flat_jet_has_zero_curvature() {
        let jet = MetricJet { g: [[Complex64::new(2.0, 0.0), ZERO], [ZERO, Complex64::new(3.0, 0.0)]], d: [Z2; 2], dd: [[Z2; 2]; 2] };
        assert_eq!(curvature_norm(&jet), Some(0.0));
    }
}
