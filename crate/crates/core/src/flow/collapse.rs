//! Collapse diagnostics: fiber diameters, length of the base circle, bounds on the stretched metric.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;
use serde::Serialize;

use super::state::{eigen_range, FrameSlabs};
use super::FlowError;
use crate::grid::{DomainGrid, FiberGrid};
use crate::slab::Slab;
use crate::slf::splus::reduce_to_cell;
use crate::sm_ops::{SmOperator, TorusOp};
use crate::surface::{frame_to_coord, Surface};

/// Largest points per axis in the distance graph.
const GRAPH_AXIS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FiberDiameters {
    /// Diameter measured with the dz part of the metric only.
    pub z: f64,
    /// Diameter measured with the dx2 part of the metric only.
    pub x2: f64,
}

struct FiberGraph {
    /// Full-grid node index of each graph vertex.
    nodes: Vec<usize>,
    /// (target vertex, dz length, dx2 length) with lengths before metric weights.
    edges: Vec<Vec<(usize, f64, f64)>>,
}

#[derive(PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0)
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn eccentricity(graph: &FiberGraph, source: usize, weight: impl Fn(usize, usize, f64, f64) -> f64) -> f64 {
    let mut dist = vec![f64::INFINITY; graph.nodes.len()];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(Entry(0.0, source));
    while let Some(Entry(d, v)) = heap.pop() {
        if d > dist[v] {
            continue;
        }
        for &(w, dz, dx2) in &graph.edges[v] {
            let nd = d + weight(v, w, dz, dx2);
            if nd < dist[w] {
                dist[w] = nd;
                heap.push(Entry(nd, w));
            }
        }
    }
    dist.into_iter().fold(0.0, f64::max)
}

fn stride(n: usize) -> usize {
    (n / GRAPH_AXIS).max(1)
}

fn offsets() -> impl Iterator<Item = [i64; 3]> {
    (0..27).map(|c| [c / 9 - 1, (c / 3) % 3 - 1, c % 3 - 1]).filter(|o| *o != [0, 0, 0])
}

fn torus_graph(surface: &Surface, n: usize) -> FiberGraph {
    let Surface::Sm(sm) = surface else { unreachable!("torus grid on a torus bundle") };
    let st = stride(n);
    let m = (n / st) as i64;
    let vertex = |a: i64, b: i64, c: i64| ((a.rem_euclid(m) * m + b.rem_euclid(m)) * m + c.rem_euclid(m)) as usize;
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    for a in 0..m {
        for b in 0..m {
            for c in 0..m {
                let st = st as i64;
                nodes.push((((a * st) * n as i64 + b * st) * n as i64 + c * st) as usize);
                let step = st as f64 / n as f64;
                edges.push(
                    offsets()
                        .map(|o| {
                            let x = sm.point([o[0] as f64 * step, o[1] as f64 * step, o[2] as f64 * step]);
                            (vertex(a + o[0], b + o[1], c + o[2]), x[0].hypot(x[1]), x[2].abs())
                        })
                        .collect(),
                );
            }
        }
    }
    FiberGraph { nodes, edges }
}

fn cell_graph(surface: &Surface, grid: &DomainGrid, slice: usize) -> Result<FiberGraph, FlowError> {
    let (Surface::Splus(sp), FiberGrid::Cell { n_theta, n_sigma, n_x1 }) = (surface, grid.fiber) else {
        unreachable!("cell grid on a nilmanifold bundle")
    };
    let y2 = grid.y2(slice);
    let shape = sp.cell_shape(y2);
    let (st, ss, sx) = (stride(n_theta), stride(n_sigma), stride(n_x1));
    let (mt, ms, mx) = (n_theta / st, n_sigma / ss, n_x1 / sx);
    let (dt, ds, dx) = (st as f64 / n_theta as f64, ss as f64 * shape.height / n_sigma as f64, sx as f64 * sp.x1_period() / n_x1 as f64);
    let vertex = |a: i64, b: i64, c: i64| ((a.rem_euclid(mt as i64) as usize * ms + b.rem_euclid(ms as i64) as usize) * mx) + c.rem_euclid(mx as i64) as usize;
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    for a in 0..mt {
        for b in 0..ms {
            for c in 0..mx {
                nodes.push(((a * st) * n_sigma + b * ss) * n_x1 + c * sx);
                let (theta, sigma, x1) = (a as f64 * dt, b as f64 * ds, c as f64 * dx);
                let (x2, y1) = shape.point(theta, sigma);
                let mut out = Vec::with_capacity(26);
                for o in offsets() {
                    let (nx2, ny1) = shape.point(theta + o[0] as f64 * dt, sigma + o[1] as f64 * ds);
                    let nx1 = x1 + o[2] as f64 * dx;
                    let red = reduce_to_cell(sp, (nx2, ny1), y2, 0).map_err(|_| crate::surface::SurfaceError::WrongFamily)?;
                    let x1_cell = nx1 + red.x1_shift;
                    let target = vertex(
                        (red.theta / dt).round() as i64,
                        (red.sigma / ds).round() as i64,
                        (x1_cell / dx).round() as i64,
                    );
                    let (ddx1, ddy1) = (o[2] as f64 * dx, ny1 - y1);
                    out.push((target, ddx1.hypot(ddy1), (nx2 - x2).abs()));
                }
                edges.push(out);
            }
        }
    }
    Ok(FiberGraph { nodes, edges })
}

/// Node y1 used in coordinate components; only the nilmanifold coframe depends on it.
fn node_y1(surface: &Surface, grid: &DomainGrid, slice: usize, node: usize) -> f64 {
    match surface {
        Surface::Sm(_) => 0.0,
        Surface::Splus(_) => surface.node(grid, slice, node)[1],
    }
}

/// Largest fiber diameters over the slices, from shortest paths on a subsampled neighbour graph.
pub fn fiber_diameters(surface: &Surface, grid: &DomainGrid, state: &FrameSlabs) -> FiberDiameters {
    let torus = match grid.fiber {
        FiberGrid::Torus { n } => Some(torus_graph(surface, n)),
        FiberGrid::Cell { .. } => None,
    };
    let mut out = FiberDiameters { z: 0.0, x2: 0.0 };
    for i in 0..grid.n_y2 {
        let owned;
        let graph = match &torus {
            Some(g) => g,
            None => match cell_graph(surface, grid, i) {
                Ok(g) => {
                    owned = g;
                    &owned
                }
                Err(_) => return FiberDiameters { z: f64::NAN, x2: f64::NAN },
            },
        };
        let y2 = grid.y2(i);
        let (zz, ww): (Vec<f64>, Vec<f64>) = graph
            .nodes
            .iter()
            .map(|&node| {
                let c = frame_to_coord(&surface.coframe(node_y1(surface, grid, i, node), y2), &state.at(i, node));
                (c.zz.max(0.0).sqrt(), c.ww.max(0.0).sqrt())
            })
            .unzip();
        let n = graph.nodes.len();
        let sources: Vec<usize> = if state.is_uniform(i) && torus.is_some() { vec![0] } else { vec![0, n / 3, n / 2, (2 * n) / 3] };
        for &src in &sources {
            out.z = out.z.max(eccentricity(graph, src, |v, w, dz, _| 0.5 * (zz[v] + zz[w]) * dz));
            out.x2 = out.x2.max(eccentricity(graph, src, |v, w, _, dx2| 0.5 * (ww[v] + ww[w]) * dx2));
        }
    }
    out
}

/// Length of the base circle through fiber node 0: y2 from 1 to the period, with rho = 0 on nilmanifold bundles.
pub fn base_length(surface: &Surface, grid: &DomainGrid, state: &FrameSlabs) -> f64 {
    let twist = match surface {
        Surface::Sm(_) => 0.0,
        Surface::Splus(sp) => sp.m_twist,
    };
    let speed = |i: usize| {
        let y2 = grid.y2(i);
        let e = surface.coframe(twist * grid.s(i), y2);
        // d/ds of (y1, y2) = (twist, y2) in dz, dw
        let v = [Complex64::new(0.0, twist), Complex64::new(0.0, y2)];
        let phi = [e[0][0] * v[0] + e[0][1] * v[1], e[1][0] * v[0] + e[1][1] * v[1]];
        let h = state.at(i, 0);
        let i_ = Complex64::i();
        let q = h.r * phi[0].norm_sqr() + h.s * phi[1].norm_sqr() + 2.0 * (phi[0].conj() * (-i_ * h.u) * phi[1]).re;
        q.max(0.0).sqrt()
    };
    let ds = grid.ds();
    (0..grid.n_y2 - 1).map(|i| 0.5 * ds * (speed(i) + speed(i + 1))).sum()
}

/// Uniform bounds on the fiber-stretched metric r e^t, u e^{t/2}, s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StretchReport {
    pub t: f64,
    /// max(lambda_max, 1 / lambda_min) of the stretched frame matrix.
    pub c0: f64,
    /// Largest first derivative, torus directions along z weighted by e^{t/2}.
    pub c1: f64,
    /// Largest second derivative with the same weights.
    pub c2: f64,
}

fn stretched(state: &FrameSlabs, t: f64) -> FrameSlabs {
    let (er, eu) = (t.exp(), (0.5 * t).exp());
    FrameSlabs {
        r: state.r.iter().map(|s| s.map(|v| v * er)).collect(),
        s: state.s.clone(),
        u: state.u.iter().map(|s| s.map(|v| v * eu)).collect(),
    }
}

fn max_abs<T: Copy>(slab: &Slab<T>, norm: impl Fn(T) -> f64, n: usize) -> f64 {
    match slab {
        Slab::Uniform(v) => norm(*v),
        Slab::Dense(d) => d.iter().take(n).map(|v| norm(*v)).fold(0.0, f64::max),
    }
}

pub fn stretch_diagnostic(surface: &Surface, grid: &DomainGrid, state: &FrameSlabs, t: f64) -> Result<StretchReport, FlowError> {
    let h = stretched(state, t);
    let np = grid.per_slice();
    let mut c0 = 0.0f64;
    for i in 0..grid.n_y2 {
        let nodes = if h.is_uniform(i) { 1 } else { np };
        for node in 0..nodes {
            let (lo, hi) = eigen_range(&h.at(i, node));
            if !(lo > 0.0) {
                return Err(FlowError::NotPositive { slice: i, node });
            }
            c0 = c0.max(hi).max(1.0 / lo);
        }
    }
    let op = match surface {
        Surface::Sm(sm) => Some(SmOperator::new(sm, grid)?),
        Surface::Splus(_) => None,
    };
    let ds = grid.ds();
    let last = grid.n_y2 - 1;
    let weight = (0.5 * t).exp();
    let comps: [Vec<Slab<Complex64>>; 3] = [
        h.r.iter().map(|s| s.map(Complex64::from)).collect(),
        h.s.iter().map(|s| s.map(Complex64::from)).collect(),
        h.u.clone(),
    ];
    let (mut c1, mut c2) = (0.0f64, 0.0f64);
    for slabs in &comps {
        for i in 0..grid.n_y2 {
            // one-sided differences at the two ends of the fundamental domain
            let (a, b, c) = match i {
                0 => (0, 1, 2),
                i if i == last => (last - 2, last - 1, last),
                i => (i - 1, i, i + 1),
            };
            let span = if i == 0 || i == last { ds } else { 2.0 * ds };
            let (lo, hi) = match i {
                0 => (0, 1),
                i if i == last => (last - 1, last),
                i => (i - 1, i + 1),
            };
            let first = slabs[hi].zip_with(&slabs[lo], |x, y| (x - y) / span);
            let second = slabs[a].zip3(&slabs[b], &slabs[c], |x, y, z| (x - 2.0 * y + z) / (ds * ds));
            c1 = c1.max(max_abs(&first, |v| v.norm(), np));
            c2 = c2.max(max_abs(&second, |v| v.norm(), np));
            if let (Some(op), Slab::Dense(d)) = (&op, &slabs[i]) {
                for (o, w) in [(TorusOp::X1, weight), (TorusOp::Y1, weight), (TorusOp::X2, 1.0)] {
                    c1 = c1.max(w * op.derive_complex(d, o).iter().map(|v| v.norm()).fold(0.0, f64::max));
                }
                for (o, w) in [(TorusOp::X1X1, weight * weight), (TorusOp::Y1Y1, weight * weight), (TorusOp::X2X2, 1.0), (TorusOp::X1X2, weight)] {
                    c2 = c2.max(w * op.derive_complex(d, o).iter().map(|v| v.norm()).fold(0.0, f64::max));
                }
            }
        }
    }
    Ok(StretchReport { t, c0, c1, c2 })
}
