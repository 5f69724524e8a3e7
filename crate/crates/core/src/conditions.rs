//! Structural conditions on the nonlinearity: the quadratic and cubic null
//! conditions, the weighted dissipation inequality `Y·A(ω)F^{c,red}(ω,Y) ≥ 0`
//! and its strict form, plus the constants derived from them.
//!
//! Identities are decided exactly by trigonometric interpolation in `θ`: each
//! monomial coefficient of the reduced nonlinearity is a trigonometric
//! polynomial of known degree, so it vanishes identically iff it vanishes at
//! `2·degree + 1` equally spaced angles. Inequalities are decided by dense
//! sweeps over `θ` and the unit sphere in `Y`.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::nonlinearity::{CubicTensor, Direction, QuadraticTensor};
use crate::trig::TrigPoly;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConditionError {
    #[error("weight matrix is not symmetric at entry ({j}, {k})")]
    NonSymmetric { j: usize, k: usize },
    #[error("weight matrix needs {expected} rows/columns, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("grid too coarse: {what} = {got}, need at least {min}")]
    GridTooCoarse { what: &'static str, got: usize, min: usize },
    #[error("weight matrix is not positive definite (λ_min = {lambda_min:e} at θ = {theta})")]
    NotPositiveDefinite { lambda_min: f64, theta: f64 },
    #[error("strict dissipation condition does not hold (margin {margin:e})")]
    NotStrict { margin: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Fails,
    HoldsStrictly,
    Inconclusive,
}

impl Verdict {
    /// `true` for both `holds` and `holds_strictly`.
    pub fn holds(self) -> bool {
        matches!(self, Verdict::Holds | Verdict::HoldsStrictly)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ExactIdentity,
    Grid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub theta: f64,
    pub y: Vec<f64>,
    /// The tested quantity at the witness.
    pub value: f64,
    /// Equation index (0-based) for identity checks.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub component: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridInfo {
    pub n_theta: usize,
    pub n_y: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub verdict: Verdict,
    pub witness: Option<Witness>,
    pub margin: f64,
    pub method: Method,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub grid: Option<GridInfo>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Relative tolerance for identity checks, scaled by the tensor magnitude.
    pub identity: f64,
    /// Inequalities hold when the sampled minimum is at least `-inequality`.
    pub inequality: f64,
    pub strict_margin: f64,
    pub positive_definite: f64,
    /// Absolute residual bound for a successful null-form decomposition,
    /// scaled by `max(1, magnitude)`.
    pub decomposition: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { identity: 1e-12, inequality: 1e-9, strict_margin: 1e-6, positive_definite: 1e-10, decomposition: 1e-10 }
    }
}

/// Symmetric `N×N` matrix whose entries are trigonometric polynomials in `θ`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    n: usize,
    entries: Vec<TrigPoly>,
}

impl WeightMatrix {
    /// `entries` is row-major `n×n`.
    pub fn new(n: usize, entries: Vec<TrigPoly>) -> Result<Self, ConditionError> {
        if entries.len() != n * n {
            return Err(ConditionError::DimensionMismatch { expected: n, got: (entries.len() as f64).sqrt() as usize });
        }
        for j in 0..n {
            for k in (j + 1)..n {
                if entries[j * n + k] != entries[k * n + j] {
                    return Err(ConditionError::NonSymmetric { j: j + 1, k: k + 1 });
                }
            }
        }
        Ok(Self { n, entries })
    }

    pub fn identity(n: usize) -> Self {
        Self::constant_diagonal(&vec![1.0; n])
    }

    pub fn constant_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut entries = vec![TrigPoly::zero(); n * n];
        for (i, d) in diag.iter().enumerate() {
            entries[i * n + i] = TrigPoly::constant(*d);
        }
        Self { n, entries }
    }

    pub fn n_components(&self) -> usize {
        self.n
    }

    pub fn entry(&self, j: usize, k: usize) -> &TrigPoly {
        &self.entries[j * self.n + k]
    }

    pub fn max_degree(&self) -> usize {
        self.entries.iter().map(TrigPoly::degree).max().unwrap_or(0)
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self { n: self.n, entries: self.entries.iter().map(|e| e.scale(factor)).collect() }
    }

    /// Row-major values at `θ`.
    pub fn eval(&self, theta: f64) -> Vec<f64> {
        self.entries.iter().map(|e| e.eval(theta)).collect()
    }

    pub fn matrix(&self, theta: f64) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.n, &self.eval(theta))
    }

    /// `Y·A(θ)Y`.
    pub fn quadratic_form(&self, theta: f64, y: &[f64]) -> f64 {
        bilinear(&self.eval(theta), self.n, y, y)
    }
}

/// `x·A y` for a row-major `n×n` matrix.
pub(crate) fn bilinear(a: &[f64], n: usize, x: &[f64], y: &[f64]) -> f64 {
    let mut s = 0.0;
    for j in 0..n {
        let mut row = 0.0;
        for k in 0..n {
            row += a[j * n + k] * y[k];
        }
        s += x[j] * row;
    }
    s
}

/// Deterministic sample of the unit sphere in `ℝ^n`.
///
/// `n = 1` gives `{+1, −1}`; `n = 2` gives `n_y` equally spaced points on the
/// circle starting at `(1, 0)`; for `n ≥ 3` hyperspherical angles are used with
/// `n_y` azimuthal and `n_y/2 + 1` polar samples per angle.
pub fn unit_sphere_grid(n: usize, n_y: usize) -> Vec<Vec<f64>> {
    match n {
        0 => Vec::new(),
        1 => vec![vec![1.0], vec![-1.0]],
        _ => {
            let polar_count = n_y / 2 + 1;
            let polar: Vec<f64> =
                (0..polar_count).map(|i| std::f64::consts::PI * i as f64 / (polar_count - 1) as f64).collect();
            let azimuth: Vec<f64> = (0..n_y).map(|i| TAU * i as f64 / n_y as f64).collect();
            let mut out = Vec::new();
            let mut idx = vec![0usize; n - 2];
            loop {
                for phi in &azimuth {
                    let mut y = vec![0.0; n];
                    let mut s = 1.0;
                    for (d, i) in idx.iter().enumerate() {
                        let a = polar[*i];
                        y[d] = s * a.cos();
                        s *= a.sin();
                    }
                    y[n - 2] = s * phi.cos();
                    y[n - 1] = s * phi.sin();
                    out.push(y);
                }
                // odometer over polar indices
                let mut d = 0;
                while d < idx.len() {
                    idx[d] += 1;
                    if idx[d] < polar_count {
                        break;
                    }
                    idx[d] = 0;
                    d += 1;
                }
                if d == idx.len() {
                    break;
                }
            }
            out
        }
    }
}

fn theta_grid(n_theta: usize) -> Vec<f64> {
    (0..n_theta).map(|i| TAU * i as f64 / n_theta as f64).collect()
}

/// Canonical sign: first component with magnitude above round-off is positive.
fn canonical_sign(mut y: Vec<f64>) -> Vec<f64> {
    if let Some(first) = y.iter().find(|v| v.abs() > 1e-12) {
        if *first < 0.0 {
            y.iter_mut().for_each(|v| *v = -*v);
        }
    }
    y
}

fn identity_report(max_coef: f64, scale: f64, tol: &Tolerances) -> Option<ConditionReport> {
    if max_coef <= tol.identity * scale {
        Some(ConditionReport { verdict: Verdict::Holds, witness: None, margin: 0.0, method: Method::ExactIdentity, grid: None })
    } else {
        None
    }
}

/// Decides `F^{q,red}(ω, Y) ≡ 0`.
pub fn check_null_quadratic(b: &QuadraticTensor, tol: &Tolerances) -> ConditionReport {
    let n = b.n_components();
    let nodes = TrigPoly::nodes(2);
    // samples[(j, k, l)][i]: coefficient of Y_k Y_l (k ≤ l) in equation j at node i
    let mut samples: BTreeMap<(usize, usize, usize), Vec<f64>> = BTreeMap::new();
    for (i, th) in nodes.iter().enumerate() {
        let w = Direction::new(*th).extended();
        for e in b.entries() {
            let key = (e.j, e.k.min(e.l), e.k.max(e.l));
            samples.entry(key).or_insert_with(|| vec![0.0; nodes.len()])[i] += e.value * w[e.a] * w[e.b];
        }
    }
    let max_coef = samples.values().map(|s| TrigPoly::interpolate(2, s).max_abs_coef()).fold(0.0, f64::max);
    if let Some(report) = identity_report(max_coef, b.magnitude(), tol) {
        return report;
    }

    // Witness: top eigenvector of the symmetrised coefficient matrix of some F_j.
    let mut best: Option<Witness> = None;
    for (i, th) in nodes.iter().enumerate() {
        for j in 0..n {
            let mut m = DMatrix::<f64>::zeros(n, n);
            for ((jj, k, l), s) in &samples {
                if *jj != j {
                    continue;
                }
                if k == l {
                    m[(*k, *l)] += s[i];
                } else {
                    m[(*k, *l)] += 0.5 * s[i];
                    m[(*l, *k)] += 0.5 * s[i];
                }
            }
            let eig = SymmetricEigen::new(m);
            let (idx, lambda) = eig
                .eigenvalues
                .iter()
                .enumerate()
                .fold((0, 0.0f64), |acc, (q, v)| if v.abs() > acc.1.abs() { (q, *v) } else { acc });
            if best.as_ref().map_or(true, |w| lambda.abs() > w.value.abs()) {
                let y = canonical_sign(eig.eigenvectors.column(idx).iter().copied().collect());
                let value = b.eval_reduced(&Direction::new(*th), &y)[j];
                best = Some(Witness { theta: *th, y, value, component: Some(j) });
            }
        }
    }
    let witness = best.expect("nonzero tensor has a witness");
    ConditionReport {
        verdict: Verdict::Fails,
        margin: -witness.value.abs(),
        witness: Some(witness),
        method: Method::ExactIdentity,
        grid: None,
    }
}

/// Decides `F^{c,red}(ω, Y) ≡ 0`. `n_y` sets the `Y` grid used to locate a
/// witness when the identity fails.
pub fn check_null_cubic(c: &CubicTensor, n_y: usize, tol: &Tolerances) -> ConditionReport {
    let n = c.n_components();
    let nodes = TrigPoly::nodes(3);
    let mut samples: BTreeMap<(usize, usize, usize, usize), Vec<f64>> = BTreeMap::new();
    for (i, th) in nodes.iter().enumerate() {
        let w = Direction::new(*th).extended();
        for e in c.entries() {
            let mut kk = [e.k, e.l, e.m];
            kk.sort_unstable();
            samples.entry((e.j, kk[0], kk[1], kk[2])).or_insert_with(|| vec![0.0; nodes.len()])[i] +=
                e.value * w[e.a] * w[e.b] * w[e.c];
        }
    }
    let max_coef = samples.values().map(|s| TrigPoly::interpolate(3, s).max_abs_coef()).fold(0.0, f64::max);
    if let Some(report) = identity_report(max_coef, c.magnitude(), tol) {
        return report;
    }

    let ys = unit_sphere_grid(n, n_y.max(8));
    let mut best: Option<Witness> = None;
    for th in &nodes {
        let d = Direction::new(*th);
        for y in &ys {
            let f = c.eval_reduced(&d, y);
            for (j, v) in f.iter().enumerate() {
                if best.as_ref().map_or(true, |w| v.abs() > w.value.abs()) {
                    best = Some(Witness { theta: *th, y: y.clone(), value: *v, component: Some(j) });
                }
            }
        }
    }
    let witness = best.expect("nonzero tensor has a witness");
    ConditionReport {
        verdict: Verdict::Fails,
        margin: -witness.value.abs(),
        witness: Some(witness),
        method: Method::ExactIdentity,
        grid: Some(GridInfo { n_theta: nodes.len(), n_y }),
    }
}

/// Coefficients of a quadratic term written as a combination of null forms:
/// `F^q_j = Σ q0[j][k][l] Q₀(u_k,u_l) + Σ qab[j][(a,b)][k][l] Q_ab(u_k,u_l)`
/// over `a < b`. The minimum-norm solution is returned, so symmetric splits
/// such as `Q₀(u_1,u_2)` and `Q₀(u_2,u_1)` share weight equally.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullFormDecomposition {
    pub n: usize,
    /// `q0[j][k][l]`.
    pub q0: Vec<Vec<Vec<f64>>>,
    /// `qab[j][p][k][l]` with `p` indexing [`NULL_PAIRS`].
    pub qab: Vec<Vec<Vec<Vec<f64>>>>,
    pub residual: f64,
}

/// Derivative pairs `(a, b)`, `a < b`, of the antisymmetric null forms.
pub const NULL_PAIRS: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

#[derive(Debug, Clone, PartialEq, Error)]
#[error("quadratic term is not a combination of null forms (residual {residual:e})")]
pub struct DecompositionFailure {
    pub residual: f64,
}

impl NullFormDecomposition {
    /// Rebuilds the coefficient tensor.
    pub fn to_tensor(&self) -> QuadraticTensor {
        use crate::nonlinearity::forms;
        let n = self.n;
        let mut raw = Vec::new();
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    raw.extend(forms::q0(j, k, l, self.q0[j][k][l]));
                    for (p, (a, b)) in NULL_PAIRS.iter().enumerate() {
                        raw.extend(forms::qab(j, k, l, *a, *b, self.qab[j][p][k][l]));
                    }
                }
            }
        }
        QuadraticTensor::new(n, raw).expect("indices in range")
    }
}

/// Solves for null-form coefficients reproducing `B` as a polynomial in `∂u`.
pub fn decompose_null_forms(
    b: &QuadraticTensor,
    tol: &Tolerances,
) -> Result<NullFormDecomposition, DecompositionFailure> {
    let n = b.n_components();
    let slots = 3 * n;
    // monomial (s, t), s ≤ t, over slots s = a·n + k
    let monomial = |s: usize, t: usize| {
        let (s, t) = (s.min(t), s.max(t));
        s * slots - s * (s + 1) / 2 + t
    };
    let n_monomials = slots * (slots + 1) / 2;
    let n_unknowns = n * n * (1 + NULL_PAIRS.len());

    let mut m = DMatrix::<f64>::zeros(n_monomials, n_unknowns);
    for k in 0..n {
        for l in 0..n {
            let col = k * n + l;
            m[(monomial(k, l), col)] += 1.0;
            m[(monomial(n + k, n + l), col)] -= 1.0;
            m[(monomial(2 * n + k, 2 * n + l), col)] -= 1.0;
            for (p, (a, bb)) in NULL_PAIRS.iter().enumerate() {
                let col = n * n * (1 + p) + k * n + l;
                m[(monomial(a * n + k, bb * n + l), col)] += 1.0;
                m[(monomial(bb * n + k, a * n + l), col)] -= 1.0;
            }
        }
    }
    let svd = m.clone().svd(true, true);

    let mut q0 = vec![vec![vec![0.0; n]; n]; n];
    let mut qab = vec![vec![vec![vec![0.0; n]; n]; NULL_PAIRS.len()]; n];
    let mut residual_sq = 0.0;
    for j in 0..n {
        let mut rhs = DVector::<f64>::zeros(n_monomials);
        for e in b.entries().iter().filter(|e| e.j == j) {
            rhs[monomial(e.a * n + e.k, e.b * n + e.l)] += e.value;
        }
        let x = svd.solve(&rhs, 1e-12).expect("SVD computed with both factors");
        residual_sq += (&m * &x - &rhs).norm_squared();
        for k in 0..n {
            for l in 0..n {
                q0[j][k][l] = x[k * n + l];
                for p in 0..NULL_PAIRS.len() {
                    qab[j][p][k][l] = x[n * n * (1 + p) + k * n + l];
                }
            }
        }
    }
    let residual = residual_sq.sqrt();
    if residual <= tol.decomposition * b.magnitude().max(1.0) {
        Ok(NullFormDecomposition { n, q0, qab, residual })
    } else {
        Err(DecompositionFailure { residual })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositiveDefiniteReport {
    pub verdict: Verdict,
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// Angle of the smallest eigenvalue.
    pub theta_min: f64,
    /// `M₀ = max(λ_max, 1/λ_min)`, so that `M₀⁻¹|Y|² ≤ Y·A Y ≤ M₀|Y|²`.
    pub m0: f64,
    pub n_theta: usize,
}

/// Eigenvalue sweep of `A(θ)` over `n_theta` equally spaced angles.
pub fn check_positive_definite(
    a: &WeightMatrix,
    n_theta: usize,
    tol: &Tolerances,
) -> Result<PositiveDefiniteReport, ConditionError> {
    if n_theta < 8 {
        return Err(ConditionError::GridTooCoarse { what: "n_theta", got: n_theta, min: 8 });
    }
    let mut lambda_min = f64::INFINITY;
    let mut lambda_max = f64::NEG_INFINITY;
    let mut theta_min = 0.0;
    for th in theta_grid(n_theta) {
        let eig = SymmetricEigen::new(a.matrix(th)).eigenvalues;
        let lo = eig.min();
        let hi = eig.max();
        if lo < lambda_min {
            lambda_min = lo;
            theta_min = th;
        }
        lambda_max = lambda_max.max(hi);
    }
    let verdict = if lambda_min >= tol.positive_definite { Verdict::Holds } else { Verdict::Fails };
    let m0 = if lambda_min > 0.0 { lambda_max.max(1.0 / lambda_min) } else { f64::INFINITY };
    Ok(PositiveDefiniteReport { verdict, lambda_min, lambda_max, theta_min, m0, n_theta })
}

struct Sweep {
    min_g: f64,
    argmin: (f64, Vec<f64>),
    min_ratio: f64,
}

/// Minimises `g(θ,Y) = Y·A(θ)F^{c,red}(θ,Y)` and `g/(Y·A Y)²` over the grid.
/// Ties keep the smallest `θ` index, then the smallest `Y` index.
fn sweep(c: &CubicTensor, a: &WeightMatrix, n_theta: usize, n_y: usize) -> Sweep {
    let n = c.n_components();
    let ys = unit_sphere_grid(n, n_y);
    let mut f = vec![0.0; n];
    let mut out = Sweep { min_g: f64::INFINITY, argmin: (0.0, ys[0].clone()), min_ratio: f64::INFINITY };
    for th in theta_grid(n_theta) {
        let am = a.eval(th);
        let w = Direction::new(th).extended();
        for y in &ys {
            c.eval_reduced_into(&w, y, &mut f);
            let g = bilinear(&am, n, y, &f);
            if g < out.min_g {
                out.min_g = g;
                out.argmin = (th, y.clone());
            }
            let q = bilinear(&am, n, y, y);
            out.min_ratio = out.min_ratio.min(g / (q * q));
        }
    }
    out
}

fn sweep_preconditions(
    c: &CubicTensor,
    a: &WeightMatrix,
    n_theta: usize,
    n_y: usize,
    tol: &Tolerances,
) -> Result<(), ConditionError> {
    if a.n_components() != c.n_components() {
        return Err(ConditionError::DimensionMismatch { expected: c.n_components(), got: a.n_components() });
    }
    if n_y < 64 {
        return Err(ConditionError::GridTooCoarse { what: "n_y", got: n_y, min: 64 });
    }
    let pd = check_positive_definite(a, n_theta, tol)?;
    if !pd.verdict.holds() {
        return Err(ConditionError::NotPositiveDefinite { lambda_min: pd.lambda_min, theta: pd.theta_min });
    }
    Ok(())
}

fn grid_report(verdict: Verdict, s: &Sweep, n_theta: usize, n_y: usize) -> ConditionReport {
    let witness = if s.min_g.is_finite() {
        Some(Witness { theta: s.argmin.0, y: s.argmin.1.clone(), value: s.min_g, component: None })
    } else {
        None
    };
    ConditionReport { verdict, witness, margin: s.min_g, method: Method::Grid, grid: Some(GridInfo { n_theta, n_y }) }
}

/// Grid check of `Y·A(ω)F^{c,red}(ω,Y) ≥ 0` on `θ`-grid × unit `Y`-sphere.
pub fn check_agemi(
    c: &CubicTensor,
    a: &WeightMatrix,
    n_theta: usize,
    n_y: usize,
    tol: &Tolerances,
) -> Result<ConditionReport, ConditionError> {
    sweep_preconditions(c, a, n_theta, n_y, tol)?;
    let s = sweep(c, a, n_theta, n_y);
    let verdict = if !s.min_g.is_finite() {
        Verdict::Inconclusive
    } else if s.min_g >= tol.strict_margin {
        Verdict::HoldsStrictly
    } else if s.min_g >= -tol.inequality {
        Verdict::Holds
    } else {
        Verdict::Fails
    };
    Ok(grid_report(verdict, &s, n_theta, n_y))
}

/// Strict positivity of `Y·A(ω)F^{c,red}(ω,Y)` on `|Y| = 1`.
pub fn check_strict(
    c: &CubicTensor,
    a: &WeightMatrix,
    n_theta: usize,
    n_y: usize,
    tol: &Tolerances,
) -> Result<ConditionReport, ConditionError> {
    sweep_preconditions(c, a, n_theta, n_y, tol)?;
    let s = sweep(c, a, n_theta, n_y);
    let verdict = if !s.min_g.is_finite() {
        Verdict::Inconclusive
    } else if s.min_g >= tol.strict_margin {
        Verdict::Holds
    } else {
        Verdict::Fails
    };
    Ok(grid_report(verdict, &s, n_theta, n_y))
}

/// `C₀ = min Y·A F^{c,red} / (Y·A Y)²`, the constant in
/// `Y·A F^{c,red} ≥ C₀ (Y·A Y)²`.
pub fn estimate_c0(
    c: &CubicTensor,
    a: &WeightMatrix,
    n_theta: usize,
    n_y: usize,
    tol: &Tolerances,
) -> Result<f64, ConditionError> {
    sweep_preconditions(c, a, n_theta, n_y, tol)?;
    let s = sweep(c, a, n_theta, n_y);
    if !(s.min_g >= tol.strict_margin) {
        return Err(ConditionError::NotStrict { margin: s.min_g });
    }
    Ok(s.min_ratio)
}

/// Weights for the built-in two-component systems.
pub mod weights {
    use super::*;

    /// `diag(1, 1 + b²/(2a))`, the weight for the two-component diagonal pair with `a > 0`.
    pub fn diagonal_pair(a: f64, b: f64) -> WeightMatrix {
        WeightMatrix::constant_diagonal(&[1.0, 1.0 + b * b / (2.0 * a)])
    }

    /// `4[[2−ω₁²ω₂, 1−ω₁²ω₂], [1−ω₁²ω₂, 2−ω₁²ω₂]]`, using `ω₁²ω₂ = (sin θ + sin 3θ)/4`.
    pub fn coupled_pair() -> WeightMatrix {
        let diag = TrigPoly::from_terms([(0, 8.0, 0.0), (1, 0.0, -1.0), (3, 0.0, -1.0)]);
        let off = TrigPoly::from_terms([(0, 4.0, 0.0), (1, 0.0, -1.0), (3, 0.0, -1.0)]);
        WeightMatrix::new(2, vec![diag.clone(), off.clone(), off, diag]).expect("symmetric")
    }
}
