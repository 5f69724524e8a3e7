//! Observables of a [`FieldState`]: energy, weighted sup norms, support and
//! ray profiles.

use serde::{Deserialize, Serialize};

use super::{FieldState, Grid};
use crate::profile_ode::RayCoordinate;

/// Japanese bracket `⟨z⟩ = (1 + z²)^{1/2}`.
#[inline]
pub fn bracket(z: f64) -> f64 {
    (1.0 + z * z).sqrt()
}

/// Energy norm `(½∫ Σ_a |∂_a u|²)^{1/2}` in its discrete leapfrog form
///
/// `E = ½ h² Σ [ (D_t u)² + D⁺_x u·D⁺_x u⁻ + D⁺_y u·D⁺_y u⁻ ]`,
///
/// which is exactly conserved by the scheme when `F ≡ 0` and changes by
/// `h² Σ F·(u⁺ − u⁻)/2` per step otherwise.
pub fn energy(state: &FieldState, grid: &Grid) -> f64 {
    energy_squared(state, grid).max(0.0).sqrt()
}

/// The squared energy norm, which may be compared across steps without the
/// square root.
pub fn energy_squared(state: &FieldState, grid: &Grid) -> f64 {
    let s = grid.size;
    let inv_dt = 1.0 / grid.dt;
    let inv_h = 1.0 / grid.h;
    let rows = state.active.expanded();
    let top = rows.rows().last().map(|r| r.0);
    let mut total = 0.0;
    for (u, v) in state.u.iter().zip(&state.u_prev) {
        let mut acc = 0.0;
        // every edge touching a nonzero node: horizontal edges from one node
        // left of each span, vertical edges downward from each row and upward
        // from the top row
        for (j, lo, hi) in rows.rows() {
            let row = j * s;
            for k in row + lo - 1..=row + hi {
                let dt = (u[k] - v[k]) * inv_dt;
                let ux = (u[k + 1] - u[k]) * inv_h;
                let vx = (v[k + 1] - v[k]) * inv_h;
                let uy = (u[k] - u[k - s]) * inv_h;
                let vy = (v[k] - v[k - s]) * inv_h;
                acc += dt * dt + ux * vx + uy * vy;
                if Some(j) == top {
                    let uy = (u[k + s] - u[k]) * inv_h;
                    let vy = (v[k + s] - v[k]) * inv_h;
                    acc += uy * vy;
                }
            }
        }
        total += acc;
    }
    0.5 * total * grid.h * grid.h
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupNorms {
    pub max_du: f64,
    pub weighted: f64,
}

/// `max|∂u|` and `max ⟨t+|x|⟩^{1/2}⟨t−|x|⟩^{1−μ}|∂u|` over the nodes, with
/// `|∂u|` the Euclidean norm over all components and derivatives.
pub fn sup_norms(state: &FieldState, grid: &Grid, mu: f64) -> SupNorms {
    let t = state.diagnostic_time(grid);
    let mut out = SupNorms { max_du: 0.0, weighted: 0.0 };
    state.visit_gradients(grid, |_, _, x, y, p, _| {
        let du = p.iter().map(|v| v * v).sum::<f64>().sqrt();
        if du == 0.0 {
            return;
        }
        let r = x.hypot(y);
        let w = bracket(t + r).sqrt() * bracket(t - r).powf(1.0 - mu);
        out.max_du = out.max_du.max(du);
        out.weighted = out.weighted.max(w * du);
    });
    out
}

/// Default threshold for [`support_radius`].
pub const SUPPORT_TOL: f64 = 1e-12;

/// Largest `|x|` of a node where some component of `u` exceeds `tol` in
/// magnitude (0 when there is none).
pub fn support_radius(state: &FieldState, grid: &Grid, tol: f64) -> f64 {
    let s = grid.size;
    let mut r_max = 0.0f64;
    for (j, lo, hi) in state.active.expanded().rows() {
        let y = grid.coord(j);
        for i in lo..=hi {
            let k = j * s + i;
            if state.u.iter().any(|c| c[k].abs() > tol) {
                r_max = r_max.max(grid.coord(i).hypot(y));
            }
        }
    }
    r_max
}

/// Half-level value and gradient of every component at an arbitrary point,
/// by bilinear interpolation of the nodal quantities. `None` if the
/// surrounding cell is too close to the boundary to form centered differences.
pub fn sample_point(state: &FieldState, grid: &Grid, x: f64, y: f64) -> Option<(Vec<f64>, Vec<f64>)> {
    let n = state.n_components();
    let s = grid.size;
    let fx = x / grid.h + grid.n_half as f64;
    let fy = y / grid.h + grid.n_half as f64;
    if !(fx >= 1.0 && fy >= 1.0) {
        return None;
    }
    let (i, j) = (fx.floor() as usize, fy.floor() as usize);
    if i + 2 >= s || j + 2 >= s {
        return None;
    }
    let (ax, ay) = (fx - i as f64, fy - j as f64);
    let inv_dt = 1.0 / grid.dt;
    let inv_2h = 0.5 / grid.h;
    let mut mid = vec![0.0; n];
    let mut p = vec![0.0; 3 * n];
    for (di, dj, w) in [(0, 0, (1.0 - ax) * (1.0 - ay)), (1, 0, ax * (1.0 - ay)), (0, 1, (1.0 - ax) * ay), (1, 1, ax * ay)] {
        if w == 0.0 {
            continue;
        }
        let k = (j + dj) * s + i + di;
        for c in 0..n {
            let (u, v) = (&state.u[c], &state.u_prev[c]);
            mid[c] += w * 0.5 * (u[k] + v[k]);
            p[c] += w * (u[k] - v[k]) * inv_dt;
            p[n + c] += w * 0.5 * ((u[k + 1] + v[k + 1]) - (u[k - 1] + v[k - 1])) * inv_2h;
            p[2 * n + c] += w * 0.5 * ((u[k + s] + v[k + s]) - (u[k - s] + v[k - s])) * inv_2h;
        }
    }
    Some((mid, p))
}

/// `U = D₋(r^{1/2}u) = ½r^{1/2}(∂_r u − ∂_t u) + ¼r^{−1/2}u` from the value,
/// gradient (`p[a·N + c]`) and position.
pub fn profile_from_gradient(x: f64, y: f64, mid: &[f64], p: &[f64]) -> Vec<f64> {
    let n = mid.len();
    let r = x.hypot(y);
    if r == 0.0 {
        return vec![0.0; n];
    }
    let (w1, w2) = (x / r, y / r);
    let sr = r.sqrt();
    (0..n)
        .map(|c| {
            let dr = w1 * p[n + c] + w2 * p[2 * n + c];
            0.5 * sr * (dr - p[c]) + 0.25 * mid[c] / sr
        })
        .collect()
}

/// Sampled `U(t)` along a ray.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ProfileSeries {
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    /// Set when the ray left the grid and later samples were dropped.
    pub truncated: bool,
}

impl ProfileSeries {
    /// Linear interpolation in `t`; `None` outside the sampled range.
    pub fn at(&self, t: f64) -> Option<Vec<f64>> {
        let k = self.times.partition_point(|&s| s < t);
        if k == self.times.len() {
            return None;
        }
        if self.times[k] == t {
            return Some(self.values[k].clone());
        }
        if k == 0 {
            return None;
        }
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let a = (t - t0) / (t1 - t0);
        Some(self.values[k - 1].iter().zip(&self.values[k]).map(|(u, v)| (1.0 - a) * u + a * v).collect())
    }
}

/// Observer recording the profile along a ray from `t_{0,σ}` on.
#[derive(Debug, Clone)]
pub struct ProfileProbe {
    pub ray: RayCoordinate,
    pub series: ProfileSeries,
}

impl ProfileProbe {
    pub fn new(ray: RayCoordinate) -> Self {
        Self { ray, series: ProfileSeries::default() }
    }

    pub fn observe(&mut self, state: &FieldState, grid: &Grid) {
        let t = state.diagnostic_time(grid);
        if t < self.ray.t_start || self.series.truncated {
            return;
        }
        let [x, y] = self.ray.point(t);
        match sample_point(state, grid, x, y) {
            Some((mid, p)) => {
                self.series.times.push(t);
                self.series.values.push(profile_from_gradient(x, y, &mid, &p));
            }
            None => {
                self.series.truncated = true;
                eprintln!("warning: ray sigma={} left the grid at t={t:.4}", self.ray.sigma);
            }
        }
    }
}

/// Profile along `ray` over a sequence of states.
pub fn extract_profile<'a>(
    states: impl IntoIterator<Item = &'a FieldState>,
    grid: &Grid,
    ray: &RayCoordinate,
) -> ProfileSeries {
    let mut probe = ProfileProbe::new(*ray);
    for s in states {
        probe.observe(s, grid);
    }
    probe.series
}

/// One row of the standard observer output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub t: f64,
    pub energy: f64,
    pub max_du: f64,
    pub weighted_norm: f64,
    pub support_radius: f64,
}

/// Standard observables at the state's diagnostic time; the support radius
/// refers to the level `u` at `state.t`.
pub fn observe(state: &FieldState, grid: &Grid, mu: f64) -> Observation {
    let norms = sup_norms(state, grid, mu);
    Observation {
        t: state.diagnostic_time(grid),
        energy: energy(state, grid),
        max_du: norms.max_du,
        weighted_norm: norms.weighted,
        support_radius: support_radius(state, grid, SUPPORT_TOL),
    }
}
