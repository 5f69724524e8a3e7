//! Ghost-weight energy bookkeeping and decay reports over recorded runs.
//!
//! With `η(t,x) = ∫_{−∞}^{|x|−t} ⟨z⟩^{−ρ} dz` every solution of `□u = F`
//! satisfies
//!
//! `d/dt ∫ e^η |∂u|² + ∫ e^η ⟨t−|x|⟩^{−ρ} |Zu|² = 2∫ e^η F·∂_t u`,
//!
//! where `Z_k = ω_k ∂_t + ∂_k`. The three integrals are sampled along a run
//! and the residual of the identity measures discretisation error.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::nonlinearity::SystemSpec;
use crate::quadrature;
use crate::wave_solver::{bracket, FieldState, Grid, Observation, StepOutcome};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiagnosticsError {
    #[error("ghost weight exponent must exceed 1, got {0}")]
    InvalidRho(f64),
    #[error("need at least {needed} aligned samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("series are misaligned: {0}")]
    Misaligned(String),
    #[error("invalid parameter: {0}")]
    Invalid(String),
}

/// Lattice spacing and half-range for tabulated weights.
const TABLE_STEP: f64 = 1.0 / 256.0;
const TABLE_RANGE: f64 = 64.0;

/// `η(z) = ∫_{−∞}^{z} ⟨s⟩^{−ρ} ds` as a function of `z = |x| − t`.
#[derive(Debug, Clone, PartialEq)]
pub struct GhostWeight {
    rho: f64,
    total: f64,
    /// `η` on `z = −TABLE_RANGE + i·TABLE_STEP`; empty for the closed form.
    table: Vec<f64>,
}

impl GhostWeight {
    pub fn new(rho: f64) -> Result<Self, DiagnosticsError> {
        if !(rho > 1.0 && rho.is_finite()) {
            return Err(DiagnosticsError::InvalidRho(rho));
        }
        if rho == 2.0 {
            return Ok(Self { rho, total: std::f64::consts::PI, table: Vec::new() });
        }
        let density = |s: f64| bracket(s).powf(-rho);
        let n = (2.0 * TABLE_RANGE / TABLE_STEP).round() as usize;
        let mut table = Vec::with_capacity(n + 1);
        let mut acc = quadrature::integrate_from_neg_infinity(density, -TABLE_RANGE, 1e-13);
        table.push(acc);
        for i in 0..n {
            let a = -TABLE_RANGE + i as f64 * TABLE_STEP;
            acc += quadrature::integrate(density, a, a + TABLE_STEP, 1e-13);
            table.push(acc);
        }
        let total = acc + quadrature::integrate_to_infinity(density, TABLE_RANGE, 1e-13);
        Ok(Self { rho, total, table })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// `∫_ℝ ⟨z⟩^{−ρ} dz`, the supremum of `η`.
    pub fn total(&self) -> f64 {
        self.total
    }

    /// `η(z)`, clamped to `[0, total]`.
    pub fn eta(&self, z: f64) -> f64 {
        if self.table.is_empty() {
            return std::f64::consts::FRAC_PI_2 + z.atan();
        }
        let f = (z + TABLE_RANGE) / TABLE_STEP;
        let v = if f <= 0.0 {
            // far tail: ∫_{−∞}^{z} |s|^{−ρ} ds to leading order
            (-z).powf(1.0 - self.rho) / (self.rho - 1.0)
        } else if f >= (self.table.len() - 1) as f64 {
            self.total - z.powf(1.0 - self.rho) / (self.rho - 1.0)
        } else {
            let i = f.floor() as usize;
            let a = f - i as f64;
            (1.0 - a) * self.table[i] + a * self.table[i + 1]
        };
        v.clamp(0.0, self.total)
    }

    /// `η'(z) = ⟨z⟩^{−ρ}`.
    pub fn density(&self, z: f64) -> f64 {
        if self.rho == 2.0 {
            1.0 / (1.0 + z * z)
        } else {
            bracket(z).powf(-self.rho)
        }
    }

    /// Whether `1 ≤ e^η ≤ e^{total}` at every node of the grid at time `t`.
    pub fn bounds_hold(&self, grid: &Grid, t: f64) -> bool {
        let upper = self.total.exp();
        (0..grid.size).all(|j| {
            let y = grid.coord(j);
            (0..grid.size).all(|i| {
                let w = self.eta(grid.coord(i).hypot(y) - t).exp();
                (1.0..=upper).contains(&w)
            })
        })
    }
}

/// Integrals of the ghost identity at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GhostSample {
    pub t: f64,
    pub ghost_energy: f64,
    pub z_flux: f64,
    pub source: f64,
}

/// `∫ e^η |∂u|²`, summed over components, at the state's diagnostic time.
pub fn ghost_energy(state: &FieldState, grid: &Grid, weight: &GhostWeight) -> f64 {
    ghost_sample(state, grid, weight, None).ghost_energy
}

/// `∫ e^η ⟨t−|x|⟩^{−ρ} |Zu|²`; the origin node is skipped.
pub fn z_flux(state: &FieldState, grid: &Grid, weight: &GhostWeight) -> f64 {
    ghost_sample(state, grid, weight, None).z_flux
}

/// All three integrals in one pass; the source `2∫e^η F·∂_t u` needs `spec`
/// and is zero without it.
pub fn ghost_sample(state: &FieldState, grid: &Grid, weight: &GhostWeight, spec: Option<&SystemSpec>) -> GhostSample {
    let n = state.n_components();
    let t = state.diagnostic_time(grid);
    let mut force = vec![0.0; n];
    let (mut ge, mut zf, mut src) = (0.0, 0.0, 0.0);
    state.visit_gradients(grid, |_, _, x, y, p, _| {
        let r = x.hypot(y);
        let z = r - t;
        let w = weight.eta(z).exp();
        let grad2: f64 = p.iter().map(|v| v * v).sum();
        ge += w * grad2;
        if r > 0.0 {
            let (o1, o2) = (x / r, y / r);
            let mut zz = 0.0;
            for c in 0..n {
                let z1 = o1 * p[c] + p[n + c];
                let z2 = o2 * p[c] + p[2 * n + c];
                zz += z1 * z1 + z2 * z2;
            }
            zf += w * weight.density(z) * zz;
        }
        if let Some(spec) = spec {
            spec.eval_into(p, &mut force);
            src += 2.0 * w * (0..n).map(|c| force[c] * p[c]).sum::<f64>();
        }
    });
    let area = grid.h * grid.h;
    GhostSample { t, ghost_energy: ge * area, z_flux: zf * area, source: src * area }
}

/// Observer collecting [`GhostSample`]s.
#[derive(Debug, Clone)]
pub struct GhostProbe {
    pub weight: GhostWeight,
    pub spec: SystemSpec,
    pub samples: Vec<GhostSample>,
}

impl GhostProbe {
    pub fn new(weight: GhostWeight, spec: SystemSpec) -> Self {
        Self { weight, spec, samples: Vec::new() }
    }

    pub fn observe(&mut self, state: &FieldState, grid: &Grid) {
        self.samples.push(ghost_sample(state, grid, &self.weight, Some(&self.spec)));
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GhostResidual {
    pub times: Vec<f64>,
    pub residual: Vec<f64>,
    pub max_abs: f64,
}

/// Second-order derivative at the middle of three possibly unevenly spaced
/// samples.
fn three_point_derivative(t: [f64; 3], f: [f64; 3]) -> f64 {
    let (h1, h2) = (t[1] - t[0], t[2] - t[1]);
    -h2 / (h1 * (h1 + h2)) * f[0] + (h2 - h1) / (h1 * h2) * f[1] + h1 / (h2 * (h1 + h2)) * f[2]
}

/// `d/dt ghost_energy + z_flux − source` at every interior sample.
pub fn verify_ghost_identity(samples: &[GhostSample]) -> Result<GhostResidual, DiagnosticsError> {
    if samples.len() < 3 {
        return Err(DiagnosticsError::TooFewSamples { needed: 3, got: samples.len() });
    }
    if samples.windows(2).any(|w| !(w[1].t > w[0].t)) {
        return Err(DiagnosticsError::Misaligned("sample times must increase".into()));
    }
    let mut times = Vec::with_capacity(samples.len() - 2);
    let mut residual = Vec::with_capacity(samples.len() - 2);
    for w in samples.windows(3) {
        let d = three_point_derivative([w[0].t, w[1].t, w[2].t], [w[0].ghost_energy, w[1].ghost_energy, w[2].ghost_energy]);
        times.push(w[1].t);
        residual.push(d + w[1].z_flux - w[1].source);
    }
    let max_abs = residual.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    Ok(GhostResidual { times, residual, max_abs })
}

/// `max|coarse| / max|fine|` and its base-2 logarithm, the observed order of a
/// quantity that vanishes under refinement by 2.
pub fn refinement_order(coarse: &[f64], fine: &[f64]) -> (f64, f64) {
    let m = |v: &[f64]| v.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let factor = m(coarse) / m(fine);
    (factor, factor.log2())
}

/// Recorded output of one simulation.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunRecord {
    pub observations: Vec<Observation>,
    pub ghost: Vec<GhostSample>,
    pub blowup_time: Option<f64>,
}

impl RunRecord {
    pub fn set_outcome(&mut self, outcome: StepOutcome) {
        self.blowup_time = match outcome {
            StepOutcome::BlowUp { t, .. } => Some(t),
            StepOutcome::Continue => None,
        };
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayVerdict {
    /// Energy constant to the tolerance.
    Conservative,
    /// Energy nonincreasing with a net loss.
    Dissipative,
    BlowUp,
    /// Energy increased somewhere beyond the tolerance.
    Growing,
}

/// Thresholds behind the verdict flags.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Headroom {
    /// `r(t) ≤ r_factor · r(2)` counts as bounded.
    pub r_factor: f64,
    /// `q(t) ≤ q_factor · q(2)` counts as bounded.
    pub q_factor: f64,
    /// Allowed relative energy increase per output step.
    pub energy_step: f64,
}

impl Default for Headroom {
    fn default() -> Self {
        Self { r_factor: 1.05, q_factor: 2.0, energy_step: 1e-10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecaySummary {
    pub r_at_2: Option<f64>,
    pub r_sup: Option<f64>,
    pub r_bounded: bool,
    pub q_at_2: Option<f64>,
    pub q_sup: Option<f64>,
    pub q_bounded: bool,
    pub energy_monotone: bool,
    pub energy_ratio: f64,
    pub ghost_residual_max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub eps: f64,
    pub delta: f64,
    pub verdict: DecayVerdict,
    pub blowup_time: Option<f64>,
    pub headroom: Headroom,
    pub times: Vec<f64>,
    pub energy: Vec<f64>,
    pub max_du: Vec<f64>,
    /// `‖u‖_E (1 + ε² log(t+2))^{1/4−δ} / ε`.
    pub r: Vec<f64>,
    /// `max|∂u| · t^{1/2} (log t)^{1/2}`, zero for `t ≤ 1`.
    pub q: Vec<f64>,
    pub ghost_residual: Option<GhostResidual>,
    pub summary: DecaySummary,
}

/// Value at `t = 2` by linear interpolation, and the supremum over `t ≥ 2`.
fn from_two(times: &[f64], v: &[f64]) -> (Option<f64>, Option<f64>) {
    let k = times.partition_point(|&t| t < 2.0);
    if k == times.len() {
        return (None, None);
    }
    let at2 = if k == 0 || times[k] == 2.0 {
        v[k]
    } else {
        let a = (2.0 - times[k - 1]) / (times[k] - times[k - 1]);
        (1.0 - a) * v[k - 1] + a * v[k]
    };
    let sup = v[k..].iter().copied().fold(at2, f64::max);
    (Some(at2), Some(sup))
}

/// Assembles the decay ratios and verdicts for a recorded run.
pub fn decay_report(run: &RunRecord, eps: f64, delta: f64, headroom: Headroom) -> Result<DecayReport, DiagnosticsError> {
    if !(eps > 0.0) || !(delta > 0.0) {
        return Err(DiagnosticsError::Invalid("eps and delta must be positive".into()));
    }
    let obs = &run.observations;
    if obs.is_empty() {
        return Err(DiagnosticsError::TooFewSamples { needed: 1, got: 0 });
    }
    if obs.windows(2).any(|w| !(w[1].t > w[0].t)) {
        return Err(DiagnosticsError::Misaligned("observation times must increase".into()));
    }
    let times: Vec<f64> = obs.iter().map(|o| o.t).collect();
    let energy: Vec<f64> = obs.iter().map(|o| o.energy).collect();
    let max_du: Vec<f64> = obs.iter().map(|o| o.max_du).collect();
    let expo = 0.25 - delta;
    let r: Vec<f64> =
        obs.iter().map(|o| o.energy * (1.0 + eps * eps * (o.t + 2.0).ln()).powf(expo) / eps).collect();
    let q: Vec<f64> =
        obs.iter().map(|o| if o.t > 1.0 { o.max_du * (o.t * o.t.ln()).sqrt() } else { 0.0 }).collect();

    let ghost_residual = if run.ghost.is_empty() { None } else { Some(verify_ghost_identity(&run.ghost)?) };

    let (r_at_2, r_sup) = from_two(&times, &r);
    let (q_at_2, q_sup) = from_two(&times, &q);
    let energy_monotone = energy.windows(2).all(|w| w[1] <= w[0] * (1.0 + headroom.energy_step));
    let e0 = energy[0];
    let energy_ratio = if e0 > 0.0 { energy[energy.len() - 1] / e0 } else { 1.0 };
    let conservative = energy.iter().all(|e| (e - e0).abs() <= headroom.energy_step * e0.max(f64::MIN_POSITIVE) * energy.len() as f64);

    let verdict = if run.blowup_time.is_some() {
        DecayVerdict::BlowUp
    } else if conservative {
        DecayVerdict::Conservative
    } else if energy_monotone {
        DecayVerdict::Dissipative
    } else {
        DecayVerdict::Growing
    };

    let bounded = |at2: Option<f64>, sup: Option<f64>, factor: f64| match (at2, sup) {
        (Some(a), Some(s)) => s <= factor * a,
        _ => false,
    };
    let summary = DecaySummary {
        r_at_2,
        r_sup,
        r_bounded: bounded(r_at_2, r_sup, headroom.r_factor),
        q_at_2,
        q_sup,
        q_bounded: bounded(q_at_2, q_sup, headroom.q_factor),
        energy_monotone,
        energy_ratio,
        ghost_residual_max: ghost_residual.as_ref().map(|g| g.max_abs),
    };
    Ok(DecayReport {
        eps,
        delta,
        verdict,
        blowup_time: run.blowup_time,
        headroom,
        times,
        energy,
        max_du,
        r,
        q,
        ghost_residual,
        summary,
    })
}
