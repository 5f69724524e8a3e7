//! Profile dynamics along outgoing characteristic rays.
//!
//! Along the ray `x = (t + σ)ω` the leading profile obeys
//! `dV/dt = −(1/2t) F^{c,red}(ω, V)`. In the variable `s = log t` this is the
//! autonomous system `dV/ds = −½ F^{c,red}(ω, V)`, which is integrated here by
//! classical fixed-step RK4, uniform in `s`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conditions::{bilinear, WeightMatrix};
use crate::nonlinearity::{CubicTensor, Direction};
use crate::quadrature;

/// States with a component above this magnitude are treated as overflow.
pub const OVERFLOW_GUARD: f64 = 1e12;

/// Default resolution: steps per decade of `t`.
pub const DEFAULT_STEPS_PER_DECADE: usize = 256;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProfileError {
    #[error("invalid time span: need 2 <= t0 < t1, got t0 = {t0}, t1 = {t1}")]
    InvalidSpan { t0: f64, t1: f64 },
    #[error("need at least one step")]
    NoSteps,
    #[error("state overflowed after t = {last_time}")]
    Overflow { last_time: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("trajectory is empty")]
    EmptyTrajectory,
    #[error("invalid bound parameters: {0}")]
    InvalidBound(&'static str),
}

/// `t_{0,σ} = max{2, −2σ}`, the time at which the ray `(t, (t+σ)ω)` enters
/// the region `|x| ≥ t/2 ≥ 1`.
pub fn ray_start_time(sigma: f64) -> f64 {
    (-2.0 * sigma).max(2.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayCoordinate {
    pub sigma: f64,
    pub omega: Direction,
    pub t_start: f64,
}

impl RayCoordinate {
    pub fn new(sigma: f64, theta: f64) -> Self {
        Self { sigma, omega: Direction::new(theta), t_start: ray_start_time(sigma) }
    }

    /// Spatial point of the ray at time `t`.
    pub fn point(&self, t: f64) -> [f64; 2] {
        let [w1, w2] = self.omega.omega();
        [(t + self.sigma) * w1, (t + self.sigma) * w2]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RayTrajectory {
    pub omega: Direction,
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    /// Row-major `N×N` variational matrices, when integrated.
    pub variational: Option<Vec<Vec<f64>>>,
}

impl RayTrajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn n_components(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn last(&self) -> Option<&[f64]> {
        self.values.last().map(Vec::as_slice)
    }
}

/// Number of uniform `s`-steps covering `[t0, t1]` at the given density.
pub fn steps_for_span(t0: f64, t1: f64, per_decade: usize) -> usize {
    ((t1 / t0).log10().abs() * per_decade as f64).ceil().max(1.0) as usize
}

/// Right-hand side of the joint system in `s`: `V' = −½F(V)`, `W' = −½ J(V) W`.
struct LogTimeField<'a> {
    cubic: &'a CubicTensor,
    w: [f64; 3],
    n: usize,
    jac: Vec<f64>,
}

impl<'a> LogTimeField<'a> {
    fn new(cubic: &'a CubicTensor, omega: &Direction) -> Self {
        let n = cubic.n_components();
        Self { cubic, w: omega.extended(), n, jac: vec![0.0; n * n] }
    }

    /// `state` holds `V` followed (optionally) by row-major `W`.
    fn eval(&mut self, state: &[f64], out: &mut [f64]) {
        let n = self.n;
        let (v, w) = state.split_at(n);
        let (dv, dw) = out.split_at_mut(n);
        self.cubic.eval_reduced_into(&self.w, v, dv);
        dv.iter_mut().for_each(|x| *x *= -0.5);
        if !w.is_empty() {
            self.cubic.grad_reduced_into(&self.w, v, &mut self.jac);
            for i in 0..n {
                for k in 0..n {
                    let mut acc = 0.0;
                    for m in 0..n {
                        acc += self.jac[i * n + m] * w[m * n + k];
                    }
                    dw[i * n + k] = -0.5 * acc;
                }
            }
        }
    }
}

/// Classical RK4 over `n_steps` uniform steps of `ds`, calling `record` after
/// each step with the step index (1-based) and the state.
fn rk4<F: FnMut(usize, &[f64]) -> Result<(), ProfileError>>(
    field: &mut LogTimeField<'_>,
    state: &mut [f64],
    ds: f64,
    n_steps: usize,
    mut record: F,
) -> Result<(), ProfileError> {
    let dim = state.len();
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; dim], vec![0.0; dim], vec![0.0; dim], vec![0.0; dim]);
    let mut tmp = vec![0.0; dim];
    for step in 1..=n_steps {
        field.eval(state, &mut k1);
        for i in 0..dim {
            tmp[i] = state[i] + 0.5 * ds * k1[i];
        }
        field.eval(&tmp, &mut k2);
        for i in 0..dim {
            tmp[i] = state[i] + 0.5 * ds * k2[i];
        }
        field.eval(&tmp, &mut k3);
        for i in 0..dim {
            tmp[i] = state[i] + ds * k3[i];
        }
        field.eval(&tmp, &mut k4);
        for i in 0..dim {
            state[i] += ds / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        record(step, state)?;
    }
    Ok(())
}

fn check_overflow(v: &[f64], last_time: f64) -> Result<(), ProfileError> {
    if v.iter().all(|x| x.is_finite() && x.abs() <= OVERFLOW_GUARD) {
        Ok(())
    } else {
        Err(ProfileError::Overflow { last_time })
    }
}

fn integrate_joint(
    cubic: &CubicTensor,
    omega: &Direction,
    v0: &[f64],
    w0: Option<&[f64]>,
    t0: f64,
    t1: f64,
    n_steps: usize,
) -> Result<RayTrajectory, ProfileError> {
    let n = cubic.n_components();
    if v0.len() != n {
        return Err(ProfileError::DimensionMismatch { expected: n, got: v0.len() });
    }
    if let Some(w0) = w0 {
        if w0.len() != n * n {
            return Err(ProfileError::DimensionMismatch { expected: n * n, got: w0.len() });
        }
    }
    if !(t0 >= 2.0 && t1 > t0 && t1.is_finite()) {
        return Err(ProfileError::InvalidSpan { t0, t1 });
    }
    if n_steps == 0 {
        return Err(ProfileError::NoSteps);
    }
    let s0 = t0.ln();
    let ds = (t1.ln() - s0) / n_steps as f64;
    let mut state: Vec<f64> = v0.to_vec();
    if let Some(w0) = w0 {
        state.extend_from_slice(w0);
    }
    let mut times = Vec::with_capacity(n_steps + 1);
    let mut values = Vec::with_capacity(n_steps + 1);
    let mut variational = w0.map(|_| Vec::with_capacity(n_steps + 1));
    times.push(t0);
    values.push(v0.to_vec());
    if let (Some(var), Some(w0)) = (variational.as_mut(), w0) {
        var.push(w0.to_vec());
    }
    let mut field = LogTimeField::new(cubic, omega);
    rk4(&mut field, &mut state, ds, n_steps, |step, st| {
        check_overflow(st, *times.last().expect("seeded"))?;
        let t = if step == n_steps { t1 } else { (s0 + step as f64 * ds).exp() };
        times.push(t);
        values.push(st[..n].to_vec());
        if let Some(var) = variational.as_mut() {
            var.push(st[n..].to_vec());
        }
        Ok(())
    })?;
    Ok(RayTrajectory { omega: *omega, times, values, variational })
}

/// Integrates `dV/dt = −(1/2t) F^{c,red}(ω, V)` from `t0` to `t1`.
pub fn integrate_profile(
    cubic: &CubicTensor,
    omega: &Direction,
    v0: &[f64],
    t0: f64,
    t1: f64,
    n_steps: usize,
) -> Result<RayTrajectory, ProfileError> {
    integrate_joint(cubic, omega, v0, None, t0, t1, n_steps)
}

/// Integrates the profile together with its linearisation
/// `dW/dt = −(1/2t) ∇_Y F^{c,red}(ω, V) W`.
pub fn integrate_variational(
    cubic: &CubicTensor,
    omega: &Direction,
    v0: &[f64],
    w0: &[f64],
    t0: f64,
    t1: f64,
    n_steps: usize,
) -> Result<RayTrajectory, ProfileError> {
    integrate_joint(cubic, omega, v0, Some(w0), t0, t1, n_steps)
}

/// Final state of the flow from `t_from` to `t_to` (either direction, both
/// positive). Returns only the end point.
pub fn flow(
    cubic: &CubicTensor,
    omega: &Direction,
    v0: &[f64],
    t_from: f64,
    t_to: f64,
    n_steps: usize,
) -> Result<Vec<f64>, ProfileError> {
    if !(t_from > 0.0 && t_to > 0.0) {
        return Err(ProfileError::InvalidSpan { t0: t_from, t1: t_to });
    }
    if n_steps == 0 {
        return Err(ProfileError::NoSteps);
    }
    let ds = (t_to.ln() - t_from.ln()) / n_steps as f64;
    let mut state = v0.to_vec();
    let mut field = LogTimeField::new(cubic, omega);
    rk4(&mut field, &mut state, ds, n_steps, |step, st| {
        check_overflow(st, (t_from.ln() + (step - 1) as f64 * ds).exp())
    })?;
    Ok(state)
}

/// `Φ(t) = V(t)·A(ω)V(t)` at every sample.
pub fn lyapunov_track(a: &WeightMatrix, traj: &RayTrajectory) -> Result<Vec<f64>, ProfileError> {
    let n = a.n_components();
    let am = a.eval(traj.omega.theta());
    traj.values
        .iter()
        .map(|v| {
            if v.len() != n {
                Err(ProfileError::DimensionMismatch { expected: n, got: v.len() })
            } else {
                Ok(bilinear(&am, n, v, v))
            }
        })
        .collect()
}

/// Parameters of the logarithmic decay lemma for
/// `Φ' ≤ −(C₀/t)|Φ|^p + C₁/t^q`, `t ≥ t₀`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatsBound {
    pub c0: f64,
    pub c1: f64,
    pub p: f64,
    pub q: f64,
    pub t0: f64,
    pub phi0: f64,
}

/// `Φ(t) ≤ c2 / (log t)^{p_star − 1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayBound {
    pub p_star: f64,
    pub c2: f64,
    /// `∫₂^∞ (log τ)^{p*}/τ^q dτ`.
    pub tail_integral: f64,
}

impl DecayBound {
    pub fn eval(&self, t: f64) -> f64 {
        self.c2 / t.ln().powf(self.p_star - 1.0)
    }
}

impl MatsBound {
    /// Hölder conjugate `p/(p−1)`.
    pub fn p_star(&self) -> f64 {
        self.p / (self.p - 1.0)
    }

    fn validate(&self) -> Result<(), ProfileError> {
        if !(self.c0 > 0.0 && self.c0.is_finite()) {
            return Err(ProfileError::InvalidBound("c0 must be positive"));
        }
        if !(self.c1 >= 0.0 && self.c1.is_finite()) {
            return Err(ProfileError::InvalidBound("c1 must be non-negative"));
        }
        if !(self.p > 1.0 && self.q > 1.0) {
            return Err(ProfileError::InvalidBound("p and q must exceed 1"));
        }
        if !(self.t0 >= 2.0 && self.phi0.is_finite()) {
            return Err(ProfileError::InvalidBound("t0 must be at least 2"));
        }
        Ok(())
    }
}

/// Evaluates the constant
/// `C₂ = [(log t₀)^{p*}Φ₀ + C₁∫₂^∞ (log τ)^{p*}τ^{−q} dτ]/log 2 + (p*/(C₀p))^{p*−1}`.
pub fn mats_bound(b: &MatsBound) -> Result<DecayBound, ProfileError> {
    b.validate()?;
    let p_star = b.p_star();
    // τ = e^s turns the tail into ∫_{log 2}^∞ s^{p*} e^{−(q−1)s} ds.
    let tail_integral = if b.c1 == 0.0 {
        0.0
    } else {
        let decay = b.q - 1.0;
        quadrature::integrate_to_infinity(|s| s.powf(p_star) * (-decay * s).exp(), 2f64.ln(), 1e-12)
    };
    let ln2 = 2f64.ln();
    let c2 = (b.t0.ln().powf(p_star) * b.phi0 + b.c1 * tail_integral) / ln2
        + (p_star / (b.c0 * b.p)).powf(p_star - 1.0);
    Ok(DecayBound { p_star, c2, tail_integral })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatsReport {
    pub bound: MatsBound,
    pub c2: f64,
    /// `max_t Φ(t)(log t)^{p*−1}/C₂`.
    pub max_ratio: f64,
    pub ratios: Vec<f64>,
    pub holds: bool,
}

/// Relative slack allowed when comparing `Φ` with the decay bound.
pub const MATS_TOLERANCE: f64 = 1e-9;

/// Checks `Φ(t) ≤ C₂/log t` along a trajectory, with `C₁ = 0`, `p = 2`.
pub fn verify_mats(traj: &RayTrajectory, a: &WeightMatrix, c0: f64) -> Result<MatsReport, ProfileError> {
    if traj.is_empty() {
        return Err(ProfileError::EmptyTrajectory);
    }
    let phi = lyapunov_track(a, traj)?;
    let bound = MatsBound { c0, c1: 0.0, p: 2.0, q: 2.0, t0: traj.times[0], phi0: phi[0] };
    let decay = mats_bound(&bound)?;
    let ratios: Vec<f64> = traj
        .times
        .iter()
        .zip(&phi)
        .map(|(t, f)| f * t.ln().powf(decay.p_star - 1.0) / decay.c2)
        .collect();
    let max_ratio = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(MatsReport { bound, c2: decay.c2, max_ratio, ratios, holds: max_ratio <= 1.0 + MATS_TOLERANCE })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlinearity::forms;

    fn closed_form(t: f64, t0: f64) -> f64 {
        1.0 / (1.0 + (t / t0).ln()).sqrt()
    }

    #[test]
    fn start_times() {
        assert_eq!(ray_start_time(0.5), 2.0);
        assert_eq!(ray_start_time(-1.0), 2.0);
        assert_eq!(ray_start_time(-3.0), 6.0);
        let r = RayCoordinate::new(-4.0, 0.0);
        assert_eq!(r.t_start, 8.0);
        assert_eq!(r.point(8.0), [4.0, 0.0]);
    }

    #[test]
    fn null_cubic_rays_are_constant() {
        let c = CubicTensor::zero(2);
        let traj = integrate_profile(&c, &Direction::new(0.4), &[0.3, -0.2], 2.0, 1e4, 64).unwrap();
        assert_eq!(traj.last().unwrap(), &[0.3, -0.2]);
    }

    #[test]
    fn scalar_damping_matches_closed_form() {
        let c = forms::time_cube_damping();
        let t1 = 2.0 * 2f64.exp();
        let n = steps_for_span(2.0, t1, DEFAULT_STEPS_PER_DECADE);
        let traj = integrate_profile(&c, &Direction::new(0.0), &[1.0], 2.0, t1, n).unwrap();
        let v = traj.last().unwrap()[0];
        assert!((v - 1.0 / 3f64.sqrt()).abs() < 1e-9, "{v}");
        let neg = integrate_profile(&c, &Direction::new(0.0), &[-1.0], 2.0, t1, n).unwrap();
        assert_eq!(neg.last().unwrap()[0], -v);
        for (t, v) in traj.times.iter().zip(&traj.values) {
            assert!((v[0] - closed_form(*t, 2.0)).abs() < 1e-9);
        }
    }

    #[test]
    fn variational_closed_form() {
        let c = forms::time_cube_damping();
        let traj = integrate_variational(&c, &Direction::new(0.0), &[1.0], &[1.0], 2.0, 1e4, 1000).unwrap();
        for (t, w) in traj.times.iter().zip(traj.variational.as_ref().unwrap()) {
            let exact = (1.0 + (t / 2.0).ln()).powf(-1.5);
            assert!((w[0] - exact).abs() < 1e-8 * exact.max(1e-3));
        }
        let still = integrate_variational(&CubicTensor::zero(2), &Direction::new(1.0), &[1.0, 2.0], &[1.0, 0.0, 0.0, 1.0], 2.0, 50.0, 10)
            .unwrap();
        assert_eq!(still.variational.unwrap().last().unwrap(), &vec![1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn variational_matches_finite_difference_sensitivity() {
        let c = forms::coupled_pair();
        let d = Direction::new(0.8);
        let v0 = [0.6, -0.3];
        let n = 400;
        let traj = integrate_variational(&c, &d, &v0, &[1.0, 0.0, 0.0, 1.0], 2.0, 1e3, n).unwrap();
        let w = traj.variational.unwrap().last().unwrap().clone();
        let h = 1e-6;
        for k in 0..2 {
            let mut vp = v0;
            let mut vm = v0;
            vp[k] += h;
            vm[k] -= h;
            let fp = integrate_profile(&c, &d, &vp, 2.0, 1e3, n).unwrap();
            let fm = integrate_profile(&c, &d, &vm, 2.0, 1e3, n).unwrap();
            for i in 0..2 {
                let fd = (fp.last().unwrap()[i] - fm.last().unwrap()[i]) / (2.0 * h);
                let scale = w.iter().fold(0.0f64, |m, x| m.max(x.abs()));
                assert!((fd - w[i * 2 + k]).abs() <= 1e-5 * scale, "{fd} vs {}", w[i * 2 + k]);
            }
        }
    }

    #[test]
    fn time_reversal() {
        let c = forms::coupled_pair();
        let d = Direction::new(2.1);
        let v0 = [0.7, 0.4];
        let fwd = flow(&c, &d, &v0, 3.0, 3e5, 2000).unwrap();
        let back = flow(&c, &d, &fwd, 3e5, 3.0, 2000).unwrap();
        for i in 0..2 {
            assert!((back[i] - v0[i]).abs() <= 1e-8 * v0[i].abs());
        }
    }

    #[test]
    fn rejects_bad_spans_and_overflow() {
        let c = forms::time_cube_damping();
        let d = Direction::new(0.0);
        assert!(matches!(integrate_profile(&c, &d, &[1.0], 1.0, 10.0, 5), Err(ProfileError::InvalidSpan { .. })));
        assert!(matches!(integrate_profile(&c, &d, &[1.0], 5.0, 4.0, 5), Err(ProfileError::InvalidSpan { .. })));
        assert_eq!(integrate_profile(&c, &d, &[1.0], 2.0, 4.0, 0), Err(ProfileError::NoSteps));
        // sign-flipped cube: dV/ds = +½V³ blows up at finite s
        let flipped = forms::time_cube_damping();
        let grow = CubicTensor::new(1, flipped.entries().iter().map(|e| crate::nonlinearity::CubicEntry { value: 1.0, ..*e }))
            .unwrap();
        match integrate_profile(&grow, &d, &[1.0], 2.0, 1e6, 200) {
            Err(ProfileError::Overflow { last_time }) => assert!(last_time > 2.0),
            other => panic!("expected overflow, got {other:?}"),
        }
    }

    #[test]
    fn lyapunov_values() {
        let c = forms::time_cube_damping();
        let traj = integrate_profile(&c, &Direction::new(0.0), &[1.0], 2.0, 1e3, 512).unwrap();
        let phi = lyapunov_track(&WeightMatrix::identity(1), &traj).unwrap();
        for (t, p) in traj.times.iter().zip(&phi) {
            assert!((p - 1.0 / (1.0 + (t / 2.0).ln())).abs() < 1e-9);
        }
        let zero = integrate_profile(&c, &Direction::new(0.0), &[0.0], 2.0, 1e3, 8).unwrap();
        assert!(lyapunov_track(&WeightMatrix::identity(1), &zero).unwrap().iter().all(|p| *p == 0.0));
        assert!(matches!(
            lyapunov_track(&WeightMatrix::identity(2), &traj),
            Err(ProfileError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn mats_constant_cases() {
        let b = MatsBound { c0: 1.0, c1: 0.0, p: 2.0, q: 2.0, t0: 2.0, phi0: 1.0 };
        let d = mats_bound(&b).unwrap();
        assert_eq!(d.p_star, 2.0);
        assert!((d.c2 - (1.0 + 2f64.ln())).abs() < 1e-12);

        let b = MatsBound { c0: 0.7, c1: 0.0, p: 3.0, q: 2.0, t0: 2.0, phi0: 0.0 };
        let d = mats_bound(&b).unwrap();
        assert_eq!(d.c2, (1.5f64 / (0.7 * 3.0)).powf(0.5));

        // ∫_{log 2}^∞ s² e^{−2s} ds = e^{−2a}(a²/2 + a/2 + 1/4), a = log 2
        let a = 2f64.ln();
        let tail = 0.25 * (a * a / 2.0 + a / 2.0 + 0.25);
        let b = MatsBound { c0: 1.0, c1: 1.0, p: 2.0, q: 3.0, t0: 2.0, phi0: 0.0 };
        let d = mats_bound(&b).unwrap();
        assert!((d.tail_integral - tail).abs() < 1e-12);
        assert!((d.c2 - (tail / a + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn mats_rejects_invalid() {
        let b = MatsBound { c0: 0.0, c1: 0.0, p: 2.0, q: 2.0, t0: 2.0, phi0: 1.0 };
        assert!(mats_bound(&b).is_err());
        let b = MatsBound { c0: 1.0, c1: 0.0, p: 1.0, q: 2.0, t0: 2.0, phi0: 1.0 };
        assert!(mats_bound(&b).is_err());
    }

    #[test]
    fn verify_mats_scalar_case() {
        let c = forms::time_cube_damping();
        let traj = integrate_profile(&c, &Direction::new(0.0), &[1.0], 2.0, 1e6, 1400).unwrap();
        let r = verify_mats(&traj, &WeightMatrix::identity(1), 1.0).unwrap();
        assert!(r.holds);
        assert!((r.c2 - (1.0 + 2f64.ln())).abs() < 1e-12);
        // closed form: ratio = log t / ((log t + 1 − log 2)(1 + log 2)), increasing
        // towards 1/(1 + log 2)
        assert!(r.ratios.windows(2).all(|w| w[1] >= w[0] - 1e-12));
        assert!(r.max_ratio < 1.0 / (1.0 + 2f64.ln()));
        for (t, q) in traj.times.iter().zip(&r.ratios) {
            let exact = t.ln() / ((t.ln() + 1.0 - 2f64.ln()) * (1.0 + 2f64.ln()));
            assert!((q - exact).abs() < 1e-8);
        }
        let zero = integrate_profile(&CubicTensor::zero(1), &Direction::new(0.0), &[1.0], 2.0, 10.0, 4).unwrap();
        assert!(verify_mats(&zero, &WeightMatrix::identity(1), 0.0).is_err());
    }
}
