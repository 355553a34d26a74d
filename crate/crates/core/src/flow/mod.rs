//! Normalized Chern-Ricci flow d omega / dt = -Ric(omega) - omega.

pub mod collapse;
pub mod curvature;
pub mod state;

use std::io::Write;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::fields::{FieldError, HermitianMetricField};
use crate::grid::{DomainGrid, GridError};
use crate::slab::Slab;
use crate::sm_ops::SmOperator;
use crate::surface::{coord_to_frame, CoordComponents, FrameComponents, Surface, SurfaceError};

pub use collapse::{base_length, fiber_diameters, stretch_diagnostic, FiberDiameters, StretchReport};
pub use curvature::curvature_sup;
pub use state::FrameSlabs;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("metric lost positivity at t = {t}, slice {slice}, node {node}")]
    PositivityLost { t: f64, slice: usize, node: usize },
    #[error("time step too large: residual {residual:e} at t = {t}")]
    StepTooLarge { t: f64, residual: f64 },
    #[error("flow on this family needs fiber-constant data; slice {0} varies along the fiber")]
    NotHomogeneous(usize),
    #[error("metric is not positive at slice {slice}, node {node}")]
    NotPositive { slice: usize, node: usize },
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Surface(#[from] SurfaceError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// i ddbar of scalars given slice by slice.
pub enum Ddbar<'a> {
    Torus(SmOperator<'a>),
    /// Fiber-constant scalars on any grid: only the log-y2 part survives.
    Vertical(&'a DomainGrid),
}

impl<'a> Ddbar<'a> {
    pub fn new(surface: &'a Surface, grid: &'a DomainGrid) -> Result<Self, FlowError> {
        Ok(match surface {
            Surface::Sm(s) => Ddbar::Torus(SmOperator::new(s, grid)?),
            Surface::Splus(_) => Ddbar::Vertical(grid),
        })
    }

    pub fn grid(&self) -> &DomainGrid {
        match self {
            Ddbar::Torus(op) => op.grid,
            Ddbar::Vertical(g) => g,
        }
    }

    pub fn slice(&self, f: &[Slab<f64>], i: usize) -> Result<Slab<CoordComponents>, FlowError> {
        match self {
            Ddbar::Torus(op) => Ok(op.ddbar_slice(f, i)),
            Ddbar::Vertical(grid) => {
                let last = f.len() - 1;
                let value = |j: usize| match f[j] {
                    Slab::Uniform(v) => Ok(v),
                    Slab::Dense(_) => Err(FlowError::NotHomogeneous(j)),
                };
                let prev = value(if i == 0 { last - 1 } else { i - 1 })?;
                let next = value(if i == last { 1 } else { i + 1 })?;
                let ds = grid.ds();
                let fs = (next - prev) / (2.0 * ds);
                let fss = (next - 2.0 * value(i)? + prev) / (ds * ds);
                let ww = 0.25 * (-2.0 * grid.s(i)).exp() * (fss - fs);
                Ok(Slab::Uniform(CoordComponents { zz: 0.0, zw: ZERO, ww }))
            }
        }
    }
}

/// log det of the frame matrix; log det g differs from it by a multiple of log y2.
fn log_det(state: &FrameSlabs) -> Vec<Slab<f64>> {
    (0..state.n_slices())
        .map(|i| state.r[i].zip3(&state.s[i], &state.u[i], |r, s, u| (r * s - u.norm_sqr()).ln()).compressed())
        .collect()
}

/// Frame components of Ric = -i ddbar log det g.
pub fn chern_ricci_slabs(surface: &Surface, d: &Ddbar, state: &FrameSlabs) -> Result<FrameSlabs, FlowError> {
    let f = log_det(state);
    let grid = d.grid();
    let quarter = 0.25 * surface.limit_multiple();
    let mut out = FrameSlabs { r: Vec::new(), s: Vec::new(), u: Vec::new() };
    for i in 0..grid.n_y2 {
        let e = surface.coframe(0.0, grid.y2(i));
        let frame = d.slice(&f, i)?.map(|c| coord_to_frame(&e, &c));
        out.r.push(frame.map(|h| -h.r));
        out.s.push(frame.map(|h| -h.s - quarter));
        out.u.push(frame.map(|h| -h.u));
    }
    Ok(out)
}

/// Ric(omega) as a frame-component field.
pub fn chern_ricci_form(surface: &Surface, grid: &DomainGrid, omega: &HermitianMetricField) -> Result<HermitianMetricField, FlowError> {
    omega.check_positive()?;
    let d = Ddbar::new(surface, grid)?;
    Ok(chern_ricci_slabs(surface, &d, &FrameSlabs::from_field(omega))?.to_field(grid))
}

/// -Ric(h) - h.
fn velocity(surface: &Surface, d: &Ddbar, h: &FrameSlabs) -> Result<FrameSlabs, FlowError> {
    Ok(chern_ricci_slabs(surface, d, h)?.combine(-1.0, h, -1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowOptions {
    pub t_end: f64,
    pub dt: f64,
    pub sample_every: f64,
    pub keep_snapshots: bool,
    pub curvature: bool,
    pub collapse: bool,
    /// Shrink the step with the smallest beta component, dt_n = dt min(1, r_min(t) / r_min(0)).
    pub adaptive: bool,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self { t_end: 5.0, dt: 1e-3, sample_every: 0.1, keep_snapshots: false, curvature: true, collapse: true, adaptive: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlowSample {
    pub t: f64,
    pub sup_dist_to_omega_inf: f64,
    pub ncrf_residual: f64,
    pub curvature_sup: f64,
    pub fiber_diam_z: f64,
    pub fiber_diam_x2: f64,
    pub base_length: f64,
    pub decay_rate_fit: f64,
}

#[derive(Debug, Clone)]
pub struct FlowTrace {
    pub samples: Vec<FlowSample>,
    pub snapshots: Vec<(f64, FrameSlabs)>,
    pub final_state: FrameSlabs,
    pub max_residual: f64,
    pub steps: usize,
}

impl FlowTrace {
    pub fn decay_rate(&self) -> f64 {
        self.samples.last().map_or(f64::NAN, |s| s.decay_rate_fit)
    }

    pub fn write_csv(&self, out: &mut dyn Write) -> std::io::Result<()> {
        writeln!(out, "t,sup_dist_to_omega_inf,ncrf_residual,curvature_sup,fiber_diam_z,fiber_diam_x2,base_length,decay_rate_fit")?;
        for s in &self.samples {
            writeln!(
                out,
                "{:.6},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
                s.t, s.sup_dist_to_omega_inf, s.ncrf_residual, s.curvature_sup, s.fiber_diam_z, s.fiber_diam_x2, s.base_length, s.decay_rate_fit
            )?;
        }
        Ok(())
    }
}

/// Least-squares exponential rate of `values` over the samples with t in [t_last / 2, t_last].
pub fn fit_decay_rate(times: &[f64], values: &[f64]) -> Option<f64> {
    let t_last = *times.last()?;
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(t, v)| **t >= 0.5 * t_last && **v > 0.0)
        .map(|(t, v)| (*t, v.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mv = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let cov: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - mv)).sum();
    let var: f64 = pts.iter().map(|p| (p.0 - mt) * (p.0 - mt)).sum();
    Some(-cov / var)
}

fn limit_state(surface: &Surface, n: usize) -> FrameSlabs {
    let h = surface.omega_inf_frame();
    FrameSlabs { r: vec![Slab::Uniform(h.r); n], s: vec![Slab::Uniform(h.s); n], u: vec![Slab::Uniform(h.u); n] }
}

fn residual(next: &FrameSlabs, prev: &FrameSlabs, span: f64, slope: &FrameSlabs, per_slice: usize) -> f64 {
    let diff = next.combine(1.0 / span, prev, -1.0 / span);
    diff.sup_distance(slope, per_slice)
}

/// Three-point derivative at the middle of unequal steps h1 (behind) and h2 (ahead).
fn centered_residual(prev: &FrameSlabs, cur: &FrameSlabs, next: &FrameSlabs, h1: f64, h2: f64, slope: &FrameSlabs, per_slice: usize) -> f64 {
    let den = h1 * h2 * (h1 + h2);
    let diff = next.combine(h1 * h1 / den, prev, -h2 * h2 / den).combine(1.0, cur, (h2 * h2 - h1 * h1) / den);
    diff.sup_distance(slope, per_slice)
}

fn check_homogeneous(surface: &Surface, state: &FrameSlabs) -> Result<(), FlowError> {
    if let Surface::Splus(_) = surface {
        if let Some(i) = (0..state.n_slices()).find(|&i| !state.is_uniform(i)) {
            return Err(FlowError::NotHomogeneous(i));
        }
    }
    Ok(())
}

/// Classical fourth-order Runge-Kutta integration of the normalized flow with diagnostics at a fixed cadence.
pub fn ncrf_run(surface: &Surface, grid: &DomainGrid, omega0: &HermitianMetricField, opts: &FlowOptions) -> Result<FlowTrace, FlowError> {
    grid.check(&omega0.r)?;
    omega0.check_positive().map_err(|e| match e {
        FieldError::NotPositive { slice, node } => FlowError::NotPositive { slice, node },
        other => other.into(),
    })?;
    let d = Ddbar::new(surface, grid)?;
    let np = grid.per_slice();
    let mut h = FrameSlabs::from_field(omega0);
    check_homogeneous(surface, &h)?;
    let limit = limit_state(surface, grid.n_y2);
    let r_min = |state: &FrameSlabs| state.r.iter().map(|r| r.to_vec(np).into_iter().fold(f64::INFINITY, f64::min)).fold(f64::INFINITY, f64::min);
    let r0 = r_min(&h);
    let eps = 1e-9 * opts.dt;

    let mut samples: Vec<FlowSample> = Vec::new();
    let mut snapshots = Vec::new();
    let mut residuals: Vec<f64> = Vec::new();
    let mut prev: Option<FrameSlabs> = None;
    let mut record = |t: f64, state: &FrameSlabs, res: f64, samples: &mut Vec<FlowSample>| -> Result<(), FlowError> {
        let curvature = if opts.curvature { curvature_sup(surface, grid, state)? } else { f64::NAN };
        let (diam, base) = if opts.collapse {
            (fiber_diameters(surface, grid, state), base_length(surface, grid, state))
        } else {
            (FiberDiameters { z: f64::NAN, x2: f64::NAN }, f64::NAN)
        };
        let dist = state.sup_distance(&limit, np);
        samples.push(FlowSample {
            t,
            sup_dist_to_omega_inf: dist,
            ncrf_residual: res,
            curvature_sup: curvature,
            fiber_diam_z: diam.z,
            fiber_diam_x2: diam.x2,
            base_length: base,
            decay_rate_fit: f64::NAN,
        });
        let times: Vec<f64> = samples.iter().map(|s| s.t).collect();
        let dists: Vec<f64> = samples.iter().map(|s| s.sup_dist_to_omega_inf).collect();
        if let Some(rate) = fit_decay_rate(&times, &dists) {
            samples.last_mut().expect("sample").decay_rate_fit = rate;
        }
        if opts.keep_snapshots {
            snapshots.push((t, state.clone()));
        }
        Ok(())
    };

    let mut t = 0.0;
    let mut last_dt = opts.dt;
    let mut next_sample = 0.0;
    let mut n = 0usize;
    while t < opts.t_end - eps {
        let mut dt = opts.dt;
        if opts.adaptive {
            dt *= (r_min(&h) / r0).min(1.0);
        }
        dt = dt.min(opts.t_end - t);
        let k1 = velocity(surface, &d, &h)?;
        let k2 = velocity(surface, &d, &h.combine(1.0, &k1, 0.5 * dt))?;
        let k3 = velocity(surface, &d, &h.combine(1.0, &k2, 0.5 * dt))?;
        let k4 = velocity(surface, &d, &h.combine(1.0, &k3, dt))?;
        let incr = k1.combine(1.0, &k2, 2.0).combine(1.0, &k3.combine(2.0, &k4, 1.0), 1.0);
        let next = h.combine(1.0, &incr, dt / 6.0);
        let res = match &prev {
            Some(p) => centered_residual(p, &h, &next, last_dt, dt, &k1, np),
            None => residual(&next, &h, dt, &k1, np),
        };
        if !res.is_finite() {
            return Err(FlowError::StepTooLarge { t: t + dt, residual: res });
        }
        residuals.push(res);
        if n >= 10 && res > 1e-8 && res > 10.0 * residuals[n - 10] {
            return Err(FlowError::StepTooLarge { t: t + dt, residual: res });
        }
        if let Some((slice, node)) = next.first_non_positive(np) {
            return Err(FlowError::PositivityLost { t: t + dt, slice, node });
        }
        if t >= next_sample - eps {
            record(t, &h, res, &mut samples)?;
            next_sample += opts.sample_every;
        }
        prev = Some(std::mem::replace(&mut h, next));
        t += dt;
        last_dt = dt;
        n += 1;
    }
    let final_res = match &prev {
        Some(p) => residual(&h, p, last_dt, &velocity(surface, &d, &h)?, np),
        None => 0.0,
    };
    record(t, &h, final_res, &mut samples)?;
    if samples.len() > 1 && samples[0].decay_rate_fit.is_nan() {
        samples[0].decay_rate_fit = samples[1].decay_rate_fit;
    }
    let max_residual = residuals.iter().copied().fold(final_res, f64::max);
    Ok(FlowTrace { samples, snapshots, final_state: h, max_residual, steps: n })
}

/// Frame components of the closed-form family (1 + 3e^{-t}) alpha + e^{-t} beta.
pub fn reference_family(t: f64) -> FrameComponents {
    FrameComponents::new((-t).exp(), 0.25 * (1.0 + 3.0 * (-t).exp()), ZERO)
}
