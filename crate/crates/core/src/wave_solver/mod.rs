//! Explicit leapfrog solver for `□u = F(∂u)` on a square grid `[−L, L]²`.
//!
//! The update is `u⁺ = 2u − u⁻ + dt²(Δ_h u + F(∂u))` with the 5-point
//! Laplacian, centered spatial gradients and the backward difference
//! `(u − u⁻)/dt` for `∂_t u`. With `correction` enabled the nonlinearity is
//! re-evaluated once with the centered `(u⁺ − u⁻)/(2dt)` from the predicted
//! `u⁺`, which is pointwise and so costs no extra pass.
//!
//! The domain is sized so that the solution never reaches the boundary, which
//! is held at zero. Work is restricted to per-row spans of nodes carrying
//! values above a relative floor (round-off level by default); spans only grow.
//!
//! Derived quantities of a [`FieldState`] are evaluated at the half level
//! `t − dt/2`: `∂_t u = (u − u⁻)/dt` and spatial derivatives of `(u + u⁻)/2`,
//! both second-order accurate there.

mod observe;

pub use observe::*;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::nonlinearity::SystemSpec;

/// Default Courant safety bound on `dt·√2/h`.
pub const MAX_CFL: f64 = 0.95;

/// Default ratio `dt/h` at desk scale.
pub const DESK_DT_RATIO: f64 = 0.45;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("CFL number {cfl:.4} exceeds the limit {limit}")]
    Cfl { cfl: f64, limit: f64 },
    #[error("domain half-width {half_width} is below t_end + R + 2h = {required}")]
    DomainTooSmall { half_width: f64, required: f64 },
    #[error("half-width {half_width} is not a multiple of h = {h}")]
    MisalignedGrid { half_width: f64, h: f64 },
    #[error("invalid parameter: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub h: f64,
    pub dt: f64,
    pub half_width: f64,
    pub t_end: f64,
    #[serde(default = "default_true")]
    pub correction: bool,
    #[serde(default = "default_blowup")]
    pub blowup_threshold: f64,
    /// Values below `zero_floor × (initial peak)` do not enlarge the active region.
    #[serde(default = "default_floor")]
    pub zero_floor: f64,
    #[serde(default = "default_max_cfl")]
    pub max_cfl: f64,
}

fn default_true() -> bool {
    true
}
fn default_blowup() -> f64 {
    1e6
}
fn default_floor() -> f64 {
    1e-18
}
fn default_max_cfl() -> f64 {
    MAX_CFL
}

impl GridConfig {
    /// `dt = 0.45h` and the smallest aligned half-width admitting data of
    /// radius `radius` up to `t_end`.
    pub fn desk(h: f64, t_end: f64, radius: f64) -> Self {
        let half_width = ((t_end + radius) / h + 2.0).ceil() * h;
        Self {
            h,
            dt: DESK_DT_RATIO * h,
            half_width,
            t_end,
            correction: true,
            blowup_threshold: default_blowup(),
            zero_floor: default_floor(),
            max_cfl: MAX_CFL,
        }
    }

    pub fn cfl(&self) -> f64 {
        self.dt * std::f64::consts::SQRT_2 / self.h
    }

    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    pub fn validate(&self, radius: f64) -> Result<(), SolverError> {
        for (name, v) in [("h", self.h), ("dt", self.dt), ("half_width", self.half_width)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(SolverError::Invalid(format!("{name} must be positive")));
            }
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(SolverError::Invalid("t_end must be non-negative".into()));
        }
        if self.cfl() > self.max_cfl.min(1.0) {
            return Err(SolverError::Cfl { cfl: self.cfl(), limit: self.max_cfl.min(1.0) });
        }
        let ratio = self.half_width / self.h;
        if (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) {
            return Err(SolverError::MisalignedGrid { half_width: self.half_width, h: self.h });
        }
        let required = self.t_end + radius + 2.0 * self.h;
        if self.half_width < required - 1e-12 {
            return Err(SolverError::DomainTooSmall { half_width: self.half_width, required });
        }
        Ok(())
    }
}

/// Node layout derived from a [`GridConfig`]: `(2n+1)²` nodes with the origin
/// at index `(n, n)`; node `(i, j)` sits at `((i−n)h, (j−n)h)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub h: f64,
    pub dt: f64,
    pub n_half: usize,
    pub size: usize,
}

impl Grid {
    pub fn new(config: &GridConfig) -> Self {
        let n_half = (config.half_width / config.h).round() as usize;
        Self { h: config.h, dt: config.dt, n_half, size: 2 * n_half + 1 }
    }

    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        (i as f64 - self.n_half as f64) * self.h
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.size + i
    }

    pub fn half_width(&self) -> f64 {
        self.n_half as f64 * self.h
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataShape {
    /// `exp(−1/(1−|x/R|²))` on `|x| < R`.
    RadialBump,
    /// Two bumps of radius `R/2` centred at `(±R/2, 0)`, the second with sign
    /// `second_sign`.
    BumpPair {
        #[serde(default = "one")]
        second_sign: f64,
    },
    /// Node samples of `f` and `g`, one flat array per component in grid order.
    Custom { f: Vec<Vec<f64>>, g: Vec<Vec<f64>> },
}

fn one() -> f64 {
    1.0
}

/// `u(0) = εf`, `∂_t u(0) = εg` with `f_j = f_scale[j]·φ`, `g_j = g_scale[j]·φ`
/// for the chosen profile `φ` (custom samples are used as given).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialData {
    #[serde(flatten)]
    pub shape: DataShape,
    pub radius: f64,
    pub eps: f64,
    pub f_scale: Vec<f64>,
    pub g_scale: Vec<f64>,
}

/// Smooth compactly supported bump `exp(−1/(1−s²))`, `s = |x|/R`.
pub fn bump(r: f64, radius: f64) -> f64 {
    let s = (r / radius).abs();
    if s >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - s * s)).exp()
    }
}

impl InitialData {
    pub fn radial_bump(radius: f64, eps: f64, f_scale: Vec<f64>, g_scale: Vec<f64>) -> Self {
        Self { shape: DataShape::RadialBump, radius, eps, f_scale, g_scale }
    }

    fn profile(&self, x: f64, y: f64) -> f64 {
        match &self.shape {
            DataShape::RadialBump => bump(x.hypot(y), self.radius),
            DataShape::BumpPair { second_sign } => {
                let c = 0.5 * self.radius;
                bump((x - c).hypot(y), c) + second_sign * bump((x + c).hypot(y), c)
            }
            DataShape::Custom { .. } => unreachable!("custom data is sampled directly"),
        }
    }

    fn validate(&self, n: usize, grid: &Grid) -> Result<(), SolverError> {
        if !(self.eps >= 0.0 && self.eps.is_finite()) {
            return Err(SolverError::Invalid("eps must be finite and non-negative".into()));
        }
        if !(self.radius > 0.0) {
            return Err(SolverError::Invalid("radius must be positive".into()));
        }
        match &self.shape {
            DataShape::Custom { f, g } => {
                let nodes = grid.size * grid.size;
                if f.len() != n || g.len() != n || f.iter().chain(g).any(|c| c.len() != nodes) {
                    return Err(SolverError::Invalid(format!("custom data needs {n} arrays of {nodes} samples")));
                }
                for j in 0..grid.size {
                    for i in 0..grid.size {
                        let r = grid.coord(i).hypot(grid.coord(j));
                        let k = grid.index(i, j);
                        if r >= self.radius && f.iter().chain(g).any(|c| c[k] != 0.0) {
                            return Err(SolverError::Invalid("custom data not supported in |x| < R".into()));
                        }
                    }
                }
            }
            _ => {
                if self.f_scale.len() != n || self.g_scale.len() != n {
                    return Err(SolverError::Invalid(format!("f_scale and g_scale need {n} entries")));
                }
            }
        }
        Ok(())
    }

    /// `(εf, εg)` sampled at the grid nodes.
    fn sample(&self, n: usize, grid: &Grid) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        if let DataShape::Custom { f, g } = &self.shape {
            let scale = |c: &Vec<Vec<f64>>| c.iter().map(|a| a.iter().map(|v| self.eps * v).collect()).collect();
            return (scale(f), scale(g));
        }
        let nodes = grid.size * grid.size;
        let mut f = vec![vec![0.0; nodes]; n];
        let mut g = vec![vec![0.0; nodes]; n];
        let reach = (self.radius / grid.h).ceil() as usize + 1;
        let lo = grid.n_half.saturating_sub(reach);
        let hi = (grid.n_half + reach).min(grid.size - 1);
        for j in lo..=hi {
            for i in lo..=hi {
                let phi = self.profile(grid.coord(i), grid.coord(j));
                if phi == 0.0 {
                    continue;
                }
                let k = grid.index(i, j);
                for c in 0..n {
                    f[c][k] = self.eps * self.f_scale[c] * phi;
                    g[c][k] = self.eps * self.g_scale[c] * phi;
                }
            }
        }
        (f, g)
    }
}

/// Per-row node spans outside of which both levels are (numerically) zero.
/// `spans[j] = (lo, hi)` is inclusive; `lo > hi` marks an empty row. Spans
/// only ever grow.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActiveRows {
    spans: Vec<(usize, usize)>,
}

const EMPTY: (usize, usize) = (usize::MAX, 0);

impl ActiveRows {
    pub fn empty(size: usize) -> Self {
        Self { spans: vec![EMPTY; size] }
    }

    /// Spans covering every node where some array is nonzero.
    pub fn from_nonzero(levels: &[&Vec<f64>], size: usize) -> Self {
        let mut rows = Self::empty(size);
        for j in 0..size {
            for i in 0..size {
                if levels.iter().any(|a| a[j * size + i] != 0.0) {
                    rows.mark(i, j);
                }
            }
        }
        rows
    }

    #[inline]
    pub fn mark(&mut self, i: usize, j: usize) {
        let sp = &mut self.spans[j];
        sp.0 = sp.0.min(i);
        sp.1 = sp.1.max(i);
    }

    pub fn is_empty(&self) -> bool {
        self.spans.iter().all(|(lo, hi)| lo > hi)
    }

    /// `(j, lo, hi)` for every non-empty row.
    pub fn rows(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        self.spans.iter().enumerate().filter(|(_, (lo, hi))| lo <= hi).map(|(j, &(lo, hi))| (j, lo, hi))
    }

    /// Nodes within one stencil step of the active set, clipped to the
    /// interior `1..=size−2` in both directions.
    pub fn expanded(&self) -> Self {
        let size = self.spans.len();
        let mut out = Self::empty(size);
        for j in 1..size.saturating_sub(1) {
            let (mut lo, mut hi) = EMPTY;
            for r in j - 1..=j + 1 {
                let (a, b) = self.spans[r];
                if a <= b {
                    lo = lo.min(a.saturating_sub(1));
                    hi = hi.max(b + 1);
                }
            }
            if lo <= hi {
                out.spans[j] = (lo.max(1), hi.min(size - 2));
            }
        }
        out
    }

    /// Largest `|x|` over the corners of the active spans.
    pub fn reach(&self, grid: &Grid) -> f64 {
        self.rows()
            .map(|(j, lo, hi)| grid.coord(lo).abs().max(grid.coord(hi).abs()).hypot(grid.coord(j)))
            .fold(0.0, f64::max)
    }
}

/// Two time levels of the solution.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    /// Time of the level `u`.
    pub t: f64,
    pub step: usize,
    pub u: Vec<Vec<f64>>,
    pub u_prev: Vec<Vec<f64>>,
    pub active: ActiveRows,
}

impl FieldState {
    pub fn n_components(&self) -> usize {
        self.u.len()
    }

    /// Time at which derived quantities are evaluated.
    pub fn diagnostic_time(&self, grid: &Grid) -> f64 {
        self.t - 0.5 * grid.dt
    }

    /// Calls `visit(i, j, x, y, p, mid)` for every node that can carry a
    /// nonzero gradient, with the half-level gradient `p[a·N + c]` and the
    /// half-level value `mid[c]`.
    pub fn visit_gradients<F: FnMut(usize, usize, f64, f64, &[f64], &[f64])>(&self, grid: &Grid, mut visit: F) {
        let n = self.n_components();
        let s = grid.size;
        let inv_dt = 1.0 / grid.dt;
        let inv_2h = 0.5 / grid.h;
        let mut p = vec![0.0; 3 * n];
        let mut mid = vec![0.0; n];
        for (j, lo, hi) in self.active.expanded().rows() {
            let y = grid.coord(j);
            for i in lo..=hi {
                let k = j * s + i;
                for c in 0..n {
                    let (u, v) = (&self.u[c], &self.u_prev[c]);
                    p[c] = (u[k] - v[k]) * inv_dt;
                    p[n + c] = 0.5 * ((u[k + 1] + v[k + 1]) - (u[k - 1] + v[k - 1])) * inv_2h;
                    p[2 * n + c] = 0.5 * ((u[k + s] + v[k + s]) - (u[k - s] + v[k - s])) * inv_2h;
                    mid[c] = 0.5 * (u[k] + v[k]);
                }
                visit(i, j, grid.coord(i), y, &p, &mid);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum StepOutcome {
    Continue,
    BlowUp { t: f64, max_abs: f64 },
}

/// A running simulation: configuration, nonlinearity, state and scratch.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub config: GridConfig,
    pub grid: Grid,
    pub spec: SystemSpec,
    pub state: FieldState,
    next: Vec<Vec<f64>>,
    floor: f64,
}

/// Builds the two starting levels: `u = εf` and the Taylor start
/// `u⁻ = εf − dt·εg + (dt²/2)(Δ_h εf + F(∂u(0)))` with `∂_t u(0) = εg`.
pub fn initialize(config: &GridConfig, data: &InitialData, spec: &SystemSpec) -> Result<FieldState, SolverError> {
    config.validate(data.radius)?;
    let grid = Grid::new(config);
    let n = spec.n_components();
    data.validate(n, &grid)?;
    let (f, g) = data.sample(n, &grid);
    let s = grid.size;
    let mut u_prev = vec![vec![0.0; s * s]; n];
    let inv_h2 = 1.0 / (grid.h * grid.h);
    let inv_2h = 0.5 / grid.h;
    let dt = grid.dt;
    let mut p = vec![0.0; 3 * n];
    let mut force = vec![0.0; n];
    let seeds: Vec<&Vec<f64>> = f.iter().chain(&g).collect();
    let touched = ActiveRows::from_nonzero(&seeds, s).expanded();
    for (j, lo, hi) in touched.rows() {
        for i in lo..=hi {
            let k = j * s + i;
            for c in 0..n {
                let u = &f[c];
                p[c] = g[c][k];
                p[n + c] = (u[k + 1] - u[k - 1]) * inv_2h;
                p[2 * n + c] = (u[k + s] - u[k - s]) * inv_2h;
            }
            spec.eval_into(&p, &mut force);
            for c in 0..n {
                let u = &f[c];
                let lap = (u[k + 1] + u[k - 1] + u[k + s] + u[k - s] - 4.0 * u[k]) * inv_h2;
                u_prev[c][k] = u[k] - dt * g[c][k] + 0.5 * dt * dt * (lap + force[c]);
            }
        }
    }
    let levels: Vec<&Vec<f64>> = f.iter().chain(&u_prev).collect();
    let active = ActiveRows::from_nonzero(&levels, s);
    Ok(FieldState { t: 0.0, step: 0, u: f, u_prev, active })
}

impl Simulation {
    pub fn new(config: GridConfig, data: &InitialData, spec: SystemSpec) -> Result<Self, SolverError> {
        let state = initialize(&config, data, &spec)?;
        Self::assemble(config, spec, state)
    }

    /// Resumes from given levels (e.g. a snapshot or hand-built data). Only the
    /// CFL bound and array shapes are checked; keeping the solution away from
    /// the boundary is the caller's business. The active spans are recomputed.
    pub fn from_state(config: GridConfig, spec: SystemSpec, mut state: FieldState) -> Result<Self, SolverError> {
        if config.cfl() > config.max_cfl.min(1.0) {
            return Err(SolverError::Cfl { cfl: config.cfl(), limit: config.max_cfl.min(1.0) });
        }
        let grid = Grid::new(&config);
        let n = spec.n_components();
        let nodes = grid.size * grid.size;
        if state.u.len() != n || state.u_prev.len() != n || state.u.iter().chain(&state.u_prev).any(|c| c.len() != nodes) {
            return Err(SolverError::Invalid(format!("state needs {n} arrays of {nodes} nodes per level")));
        }
        let levels: Vec<&Vec<f64>> = state.u.iter().chain(&state.u_prev).collect();
        state.active = ActiveRows::from_nonzero(&levels, grid.size);
        Self::assemble(config, spec, state)
    }

    fn assemble(config: GridConfig, spec: SystemSpec, state: FieldState) -> Result<Self, SolverError> {
        let grid = Grid::new(&config);
        let peak = state.u.iter().chain(&state.u_prev).flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        let next = vec![vec![0.0; grid.size * grid.size]; spec.n_components()];
        Ok(Self { config, grid, spec, state, next, floor: config.zero_floor * peak })
    }

    pub fn n_steps(&self) -> usize {
        self.config.n_steps()
    }

    pub fn is_finished(&self) -> bool {
        self.state.step >= self.n_steps()
    }

    /// Advances one time step.
    pub fn advance(&mut self) -> StepOutcome {
        let g = self.grid;
        let s = g.size;
        let n = self.spec.n_components();
        let dt = g.dt;
        let dt2 = dt * dt;
        let lam2 = dt2 / (g.h * g.h);
        let inv_2h = 0.5 / g.h;
        let inv_dt = 1.0 / dt;
        let linear = self.spec.is_linear();
        let correct = self.config.correction && !linear;
        let compute = self.state.active.expanded();
        let (u, u_prev, next) = (&self.state.u, &self.state.u_prev, &mut self.next);

        // linear part, row by row
        for c in 0..n {
            let (uc, vc, nc) = (&u[c], &u_prev[c], &mut next[c]);
            for (j, lo, hi) in compute.rows() {
                let k0 = j * s + lo;
                let len = hi - lo + 1;
                let mid = &uc[k0 - 1..k0 + len + 1];
                let up = &uc[k0 + s..k0 + s + len];
                let dn = &uc[k0 - s..k0 - s + len];
                let prev = &vc[k0..k0 + len];
                let out = &mut nc[k0..k0 + len];
                for m in 0..len {
                    let centre = mid[m + 1];
                    let lap = mid[m] + mid[m + 2] + up[m] + dn[m] - 4.0 * centre;
                    out[m] = 2.0 * centre - prev[m] + lam2 * lap;
                }
            }
        }

        if !linear {
            // row-batched: gradients and forces stored column-wise per row
            let width = s;
            let mut p = vec![vec![0.0; width]; 3 * n];
            let mut force = vec![vec![0.0; width]; n];
            for (j, lo, hi) in compute.rows() {
                let k0 = j * s + lo;
                let len = hi - lo + 1;
                for c in 0..n {
                    let (uc, vc) = (&u[c], &u_prev[c]);
                    let mid = &uc[k0 - 1..k0 + len + 1];
                    let up = &uc[k0 + s..k0 + s + len];
                    let dn = &uc[k0 - s..k0 - s + len];
                    let prev = &vc[k0..k0 + len];
                    let (pt, rest) = p.split_at_mut(n);
                    let (px, py) = rest.split_at_mut(n);
                    let (pt, px, py) = (&mut pt[c][..len], &mut px[c][..len], &mut py[c][..len]);
                    for m in 0..len {
                        pt[m] = (mid[m + 1] - prev[m]) * inv_dt;
                        px[m] = (mid[m + 2] - mid[m]) * inv_2h;
                        py[m] = (up[m] - dn[m]) * inv_2h;
                    }
                }
                self.spec.eval_batch(&p, &mut force, len);
                if correct {
                    for c in 0..n {
                        let prev = &u_prev[c][k0..k0 + len];
                        let lin = &next[c][k0..k0 + len];
                        let (pt, f) = (&mut p[c][..len], &force[c][..len]);
                        for m in 0..len {
                            pt[m] = (lin[m] + dt2 * f[m] - prev[m]) * (0.5 * inv_dt);
                        }
                    }
                    self.spec.eval_batch(&p, &mut force, len);
                }
                for c in 0..n {
                    let out = &mut next[c][k0..k0 + len];
                    for (o, f) in out.iter_mut().zip(&force[c][..len]) {
                        *o += dt2 * f;
                    }
                }
            }
        }

        // growth of the active set and blow-up detection
        let floor = self.floor;
        let mut max_abs = 0.0f64;
        let mut finite = true;
        let mut grown = self.state.active.clone();
        for (j, lo, hi) in compute.rows() {
            let mut first = usize::MAX;
            let mut last = 0;
            for c in 0..n {
                let row = &next[c][j * s + lo..=j * s + hi];
                for (m, v) in row.iter().enumerate() {
                    let a = v.abs();
                    finite &= v.is_finite();
                    max_abs = max_abs.max(a);
                    if a > floor {
                        first = first.min(m);
                        last = last.max(m);
                    }
                }
            }
            if first <= last {
                grown.mark(lo + first, j);
                grown.mark(lo + last, j);
            }
        }

        // rotate levels: prev ← u, u ← next, next ← old prev (overwritten next step)
        let st = &mut self.state;
        std::mem::swap(&mut st.u_prev, &mut st.u);
        std::mem::swap(&mut st.u, &mut self.next);
        st.active = grown;
        st.step += 1;
        st.t = st.step as f64 * dt;

        if !finite || max_abs > self.config.blowup_threshold {
            StepOutcome::BlowUp { t: st.t, max_abs: if finite { max_abs } else { f64::INFINITY } }
        } else {
            StepOutcome::Continue
        }
    }

    /// Steps to `t_end`, calling `observe` on the initial state and after every
    /// `every`-th step (and on the last one). Stops early on blow-up.
    pub fn run<F: FnMut(&FieldState, &Grid)>(&mut self, every: usize, mut observe: F) -> StepOutcome {
        let every = every.max(1);
        if self.state.step == 0 {
            observe(&self.state, &self.grid);
        }
        while !self.is_finished() {
            let outcome = self.advance();
            if let StepOutcome::BlowUp { .. } = outcome {
                return outcome;
            }
            if self.state.step % every == 0 || self.is_finished() {
                observe(&self.state, &self.grid);
            }
        }
        StepOutcome::Continue
    }
}
