//! The nonlinearity `F(∂u) = F^q(∂u) + F^c(∂u)` of a semilinear wave system.
//!
//! Component indices are 0-based internally. The `from_one_based` constructors
//! accept the 1-based component numbering used in configuration files; derivative
//! indices are always 0-based (`0` is the time derivative).

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of space-time derivative slots in two space dimensions.
pub const DERIVATIVES: usize = 3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NonlinearityError {
    #[error("system must have at least one component")]
    NoComponents,
    #[error("entry {ordinal}: component index {index} outside 1..={n}")]
    ComponentOutOfRange { ordinal: usize, index: usize, n: usize },
    #[error("entry {ordinal}: derivative index {index} outside 0..=2")]
    DerivativeOutOfRange { ordinal: usize, index: usize },
    #[error("entry {ordinal}: coefficient is not finite")]
    NonFinite { ordinal: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// A direction on the unit circle, stored by its angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction {
    theta: f64,
    omega: [f64; 2],
}

impl Direction {
    pub fn new(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self { theta, omega: [c, s] }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// `ω = (cos θ, sin θ)`.
    pub fn omega(&self) -> [f64; 2] {
        self.omega
    }

    /// `ω̂ = (−1, ω₁, ω₂)`.
    pub fn extended(&self) -> [f64; 3] {
        [-1.0, self.omega[0], self.omega[1]]
    }
}

/// `p[a][j] = ∂_a u_j`, stored row-major by derivative index.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientVector {
    n: usize,
    data: Vec<f64>,
}

impl GradientVector {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; DERIVATIVES * n] }
    }

    pub fn from_vec(n: usize, data: Vec<f64>) -> Result<Self, NonlinearityError> {
        if data.len() != DERIVATIVES * n {
            return Err(NonlinearityError::DimensionMismatch {
                expected: DERIVATIVES * n,
                got: data.len(),
            });
        }
        Ok(Self { n, data })
    }

    /// The rank-one gradient `p[a][j] = ω̂_a Y_j` seen by outgoing waves.
    pub fn outgoing(omega: &Direction, y: &[f64]) -> Self {
        let w = omega.extended();
        let n = y.len();
        let mut data = vec![0.0; DERIVATIVES * n];
        for a in 0..DERIVATIVES {
            for j in 0..n {
                data[a * n + j] = w[a] * y[j];
            }
        }
        Self { n, data }
    }

    pub fn n_components(&self) -> usize {
        self.n
    }

    pub fn get(&self, a: usize, j: usize) -> f64 {
        self.data[a * self.n + j]
    }

    pub fn set(&mut self, a: usize, j: usize, value: f64) {
        self.data[a * self.n + j] = value;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticEntry {
    pub j: usize,
    pub k: usize,
    pub l: usize,
    pub a: usize,
    pub b: usize,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CubicEntry {
    pub j: usize,
    pub k: usize,
    pub l: usize,
    pub m: usize,
    pub a: usize,
    pub b: usize,
    pub c: usize,
    pub value: f64,
}

fn check_component(ordinal: usize, index: usize, n: usize) -> Result<(), NonlinearityError> {
    if index >= n {
        return Err(NonlinearityError::ComponentOutOfRange { ordinal, index: index + 1, n });
    }
    Ok(())
}

fn check_derivative(ordinal: usize, index: usize) -> Result<(), NonlinearityError> {
    if index >= DERIVATIVES {
        return Err(NonlinearityError::DerivativeOutOfRange { ordinal, index });
    }
    Ok(())
}

fn to_zero_based(ordinal: usize, index: usize, n: usize) -> Result<usize, NonlinearityError> {
    if index == 0 || index > n {
        return Err(NonlinearityError::ComponentOutOfRange { ordinal, index, n });
    }
    Ok(index - 1)
}

/// Sparse coefficients `B_{jkl}^{ab}` of the quadratic part, in canonical form:
/// sorted by index tuple, duplicates merged, exact zeros dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticTensor {
    n: usize,
    entries: Vec<QuadraticEntry>,
}

impl QuadraticTensor {
    pub fn zero(n: usize) -> Self {
        Self { n, entries: Vec::new() }
    }

    /// Builds from 0-based component indices.
    pub fn new(n: usize, raw: impl IntoIterator<Item = QuadraticEntry>) -> Result<Self, NonlinearityError> {
        if n == 0 {
            return Err(NonlinearityError::NoComponents);
        }
        let mut entries: Vec<QuadraticEntry> = Vec::new();
        for (ordinal, e) in raw.into_iter().enumerate() {
            let ordinal = ordinal + 1;
            for idx in [e.j, e.k, e.l] {
                check_component(ordinal, idx, n)?;
            }
            check_derivative(ordinal, e.a)?;
            check_derivative(ordinal, e.b)?;
            if !e.value.is_finite() {
                return Err(NonlinearityError::NonFinite { ordinal });
            }
            entries.push(e);
        }
        entries.sort_by_key(|e| (e.j, e.k, e.l, e.a, e.b));
        let mut merged: Vec<QuadraticEntry> = Vec::with_capacity(entries.len());
        for e in entries {
            match merged.last_mut() {
                Some(last) if (last.j, last.k, last.l, last.a, last.b) == (e.j, e.k, e.l, e.a, e.b) => {
                    last.value += e.value
                }
                _ => merged.push(e),
            }
        }
        merged.retain(|e| e.value != 0.0);
        Ok(Self { n, entries: merged })
    }

    /// Builds from 1-based component indices, as written in configuration files.
    pub fn from_one_based(
        n: usize,
        raw: impl IntoIterator<Item = QuadraticEntry>,
    ) -> Result<Self, NonlinearityError> {
        let mut shifted = Vec::new();
        for (ordinal, e) in raw.into_iter().enumerate() {
            let ordinal = ordinal + 1;
            shifted.push(QuadraticEntry {
                j: to_zero_based(ordinal, e.j, n)?,
                k: to_zero_based(ordinal, e.k, n)?,
                l: to_zero_based(ordinal, e.l, n)?,
                ..e
            });
        }
        Self::new(n, shifted)
    }

    pub fn n_components(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[QuadraticEntry] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Sum of absolute coefficient values.
    pub fn magnitude(&self) -> f64 {
        self.entries.iter().map(|e| e.value.abs()).sum()
    }

    /// Evaluates into `out` (length `n`) from a flat gradient `p[a * n + j]`.
    #[inline]
    pub fn eval_into(&self, p: &[f64], out: &mut [f64]) {
        let n = self.n;
        for e in &self.entries {
            out[e.j] += e.value * p[e.a * n + e.k] * p[e.b * n + e.l];
        }
    }

    pub fn eval(&self, p: &GradientVector) -> Vec<f64> {
        assert_eq!(p.n_components(), self.n, "gradient dimension mismatch");
        let mut out = vec![0.0; self.n];
        self.eval_into(p.as_slice(), &mut out);
        out
    }

    /// `F_j^{q,red}(ω, Y) = Σ B_{jkl}^{ab} ω̂_a ω̂_b Y_k Y_l`.
    pub fn eval_reduced(&self, omega: &Direction, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.n, "Y dimension mismatch");
        let w = omega.extended();
        let mut out = vec![0.0; self.n];
        for e in &self.entries {
            out[e.j] += e.value * (w[e.a] * w[e.b]) * (y[e.k] * y[e.l]);
        }
        out
    }
}

/// Sparse coefficients `C_{jklm}^{abc}` of the cubic part, canonical as for
/// [`QuadraticTensor`].
#[derive(Debug, Clone, PartialEq)]
pub struct CubicTensor {
    n: usize,
    entries: Vec<CubicEntry>,
}

impl CubicTensor {
    pub fn zero(n: usize) -> Self {
        Self { n, entries: Vec::new() }
    }

    pub fn new(n: usize, raw: impl IntoIterator<Item = CubicEntry>) -> Result<Self, NonlinearityError> {
        if n == 0 {
            return Err(NonlinearityError::NoComponents);
        }
        let mut entries: Vec<CubicEntry> = Vec::new();
        for (ordinal, e) in raw.into_iter().enumerate() {
            let ordinal = ordinal + 1;
            for idx in [e.j, e.k, e.l, e.m] {
                check_component(ordinal, idx, n)?;
            }
            for d in [e.a, e.b, e.c] {
                check_derivative(ordinal, d)?;
            }
            if !e.value.is_finite() {
                return Err(NonlinearityError::NonFinite { ordinal });
            }
            entries.push(e);
        }
        let key = |e: &CubicEntry| (e.j, e.k, e.l, e.m, e.a, e.b, e.c);
        entries.sort_by_key(key);
        let mut merged: Vec<CubicEntry> = Vec::with_capacity(entries.len());
        for e in entries {
            match merged.last_mut() {
                Some(last) if key(last) == key(&e) => last.value += e.value,
                _ => merged.push(e),
            }
        }
        merged.retain(|e| e.value != 0.0);
        Ok(Self { n, entries: merged })
    }

    pub fn from_one_based(n: usize, raw: impl IntoIterator<Item = CubicEntry>) -> Result<Self, NonlinearityError> {
        let mut shifted = Vec::new();
        for (ordinal, e) in raw.into_iter().enumerate() {
            let ordinal = ordinal + 1;
            shifted.push(CubicEntry {
                j: to_zero_based(ordinal, e.j, n)?,
                k: to_zero_based(ordinal, e.k, n)?,
                l: to_zero_based(ordinal, e.l, n)?,
                m: to_zero_based(ordinal, e.m, n)?,
                ..e
            });
        }
        Self::new(n, shifted)
    }

    pub fn n_components(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[CubicEntry] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn magnitude(&self) -> f64 {
        self.entries.iter().map(|e| e.value.abs()).sum()
    }

    #[inline]
    pub fn eval_into(&self, p: &[f64], out: &mut [f64]) {
        let n = self.n;
        for e in &self.entries {
            out[e.j] += e.value * p[e.a * n + e.k] * p[e.b * n + e.l] * p[e.c * n + e.m];
        }
    }

    pub fn eval(&self, p: &GradientVector) -> Vec<f64> {
        assert_eq!(p.n_components(), self.n, "gradient dimension mismatch");
        let mut out = vec![0.0; self.n];
        self.eval_into(p.as_slice(), &mut out);
        out
    }

    /// `F_j^{c,red}(ω, Y) = Σ C_{jklm}^{abc} ω̂_a ω̂_b ω̂_c Y_k Y_l Y_m`.
    pub fn eval_reduced(&self, omega: &Direction, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.eval_reduced_into(&omega.extended(), y, &mut out);
        out
    }

    /// Allocation-free form of [`Self::eval_reduced`]; `out` is overwritten.
    #[inline]
    pub fn eval_reduced_into(&self, w: &[f64; 3], y: &[f64], out: &mut [f64]) {
        debug_assert_eq!(y.len(), self.n);
        out.iter_mut().for_each(|v| *v = 0.0);
        for e in &self.entries {
            out[e.j] += e.value * (w[e.a] * w[e.b] * w[e.c]) * (y[e.k] * y[e.l] * y[e.m]);
        }
    }

    /// Jacobian `∂F_j^{c,red}/∂Y_k` at `(ω, Y)`, row-major `N×N`.
    pub fn grad_reduced(&self, omega: &Direction, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n * self.n];
        self.grad_reduced_into(&omega.extended(), y, &mut out);
        out
    }

    #[inline]
    pub fn grad_reduced_into(&self, w: &[f64; 3], y: &[f64], out: &mut [f64]) {
        let n = self.n;
        out.iter_mut().for_each(|v| *v = 0.0);
        for e in &self.entries {
            let coef = e.value * w[e.a] * w[e.b] * w[e.c];
            let row = e.j * n;
            out[row + e.k] += coef * y[e.l] * y[e.m];
            out[row + e.l] += coef * y[e.k] * y[e.m];
            out[row + e.m] += coef * y[e.k] * y[e.l];
        }
    }
}

/// The full nonlinearity. Terms of order four and higher are identically zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec {
    n: usize,
    quadratic: QuadraticTensor,
    cubic: CubicTensor,
}

impl SystemSpec {
    pub fn new(quadratic: QuadraticTensor, cubic: CubicTensor) -> Result<Self, NonlinearityError> {
        let n = quadratic.n_components();
        if cubic.n_components() != n {
            return Err(NonlinearityError::DimensionMismatch { expected: n, got: cubic.n_components() });
        }
        Ok(Self { n, quadratic, cubic })
    }

    /// The linear system `□u = 0` with `n` components.
    pub fn free(n: usize) -> Self {
        Self { n, quadratic: QuadraticTensor::zero(n), cubic: CubicTensor::zero(n) }
    }

    pub fn n_components(&self) -> usize {
        self.n
    }

    pub fn quadratic(&self) -> &QuadraticTensor {
        &self.quadratic
    }

    pub fn cubic(&self) -> &CubicTensor {
        &self.cubic
    }

    pub fn is_linear(&self) -> bool {
        self.quadratic.is_empty() && self.cubic.is_empty()
    }

    /// `F(∂u)` written into `out` (overwritten), from a flat gradient.
    #[inline]
    pub fn eval_into(&self, p: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        self.quadratic.eval_into(p, out);
        self.cubic.eval_into(p, out);
    }

    pub fn eval(&self, p: &GradientVector) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.eval_into(p.as_slice(), &mut out);
        out
    }

    /// Batched evaluation over `len` points stored column-wise: `p[a·N + j]`
    /// holds `∂_a u_j` at every point, `out[j]` receives `F_j` (overwritten).
    pub fn eval_batch(&self, p: &[Vec<f64>], out: &mut [Vec<f64>], len: usize) {
        let n = self.n;
        for o in out.iter_mut() {
            o[..len].iter_mut().for_each(|v| *v = 0.0);
        }
        for e in &self.quadratic.entries {
            let (x, y) = (&p[e.a * n + e.k][..len], &p[e.b * n + e.l][..len]);
            let o = &mut out[e.j][..len];
            for m in 0..len {
                o[m] += e.value * x[m] * y[m];
            }
        }
        for e in &self.cubic.entries {
            let (x, y, z) = (&p[e.a * n + e.k][..len], &p[e.b * n + e.l][..len], &p[e.c * n + e.m][..len]);
            let o = &mut out[e.j][..len];
            for m in 0..len {
                o[m] += e.value * x[m] * y[m] * z[m];
            }
        }
    }
}

/// Coefficient tensors for commonly used model terms (0-based components).
pub mod forms {
    use super::*;

    /// Entries of `coef · Q₀(u_k, u_l)` in equation `j`.
    pub fn q0(j: usize, k: usize, l: usize, coef: f64) -> Vec<QuadraticEntry> {
        vec![
            QuadraticEntry { j, k, l, a: 0, b: 0, value: coef },
            QuadraticEntry { j, k, l, a: 1, b: 1, value: -coef },
            QuadraticEntry { j, k, l, a: 2, b: 2, value: -coef },
        ]
    }

    /// Entries of `coef · Q_{ab}(u_k, u_l)` in equation `j`.
    pub fn qab(j: usize, k: usize, l: usize, a: usize, b: usize, coef: f64) -> Vec<QuadraticEntry> {
        vec![
            QuadraticEntry { j, k, l, a, b, value: coef },
            QuadraticEntry { j, k, l, a: b, b: a, value: -coef },
        ]
    }

    /// Entries of `coef · (∂_c u_m) Q₀(u_k, u_l)` in equation `j`.
    pub fn cubic_q0(j: usize, k: usize, l: usize, m: usize, c: usize, coef: f64) -> Vec<CubicEntry> {
        q0(j, k, l, coef)
            .into_iter()
            .map(|e| CubicEntry { j, k, l, m, a: e.a, b: e.b, c, value: e.value })
            .collect()
    }

    /// `−(∂_t u)³` for a scalar equation.
    pub fn time_cube_damping() -> CubicTensor {
        CubicTensor::new(1, [CubicEntry { j: 0, k: 0, l: 0, m: 0, a: 0, b: 0, c: 0, value: -1.0 }])
            .expect("valid tensor")
    }

    /// The two-component cubic term `(−a(∂_t u₁)³ + b ∂_t u₁ (∂_t u₂)², −(∂_t u₂)³)`.
    pub fn diagonal_pair(a: f64, b: f64) -> CubicTensor {
        let t = |j, k, l, m, value| CubicEntry { j, k, l, m, a: 0, b: 0, c: 0, value };
        CubicTensor::new(2, [t(0, 0, 0, 0, -a), t(0, 0, 1, 1, b), t(1, 1, 1, 1, -1.0)]).expect("valid tensor")
    }

    /// Two-component cubic term whose dissipative structure needs an
    /// angle-dependent non-diagonal weight.
    pub fn coupled_pair() -> CubicTensor {
        let e = |j, k, l, m, a, b, c, value| CubicEntry { j, k, l, m, a, b, c, value };
        CubicTensor::new(
            2,
            [
                // −(∂_t u₁)³ − (∂_t u₂)³ − ½((∂₁u₁)² − (∂₁u₂)²)(∂₂u₁ − ∂₂u₂)
                e(0, 0, 0, 0, 0, 0, 0, -1.0),
                e(0, 1, 1, 1, 0, 0, 0, -1.0),
                e(0, 0, 0, 0, 1, 1, 2, -0.5),
                e(0, 0, 0, 1, 1, 1, 2, 0.5),
                e(0, 1, 1, 0, 1, 1, 2, 0.5),
                e(0, 1, 1, 1, 1, 1, 2, -0.5),
                // (∂_t u₁)³ − 3(∂_t u₁)²∂_t u₂ + ½(∂₁u₁∂₂u₁ − ∂₁u₂∂₂u₂)(∂₁u₁ − ∂₁u₂)
                e(1, 0, 0, 0, 0, 0, 0, 1.0),
                e(1, 0, 0, 1, 0, 0, 0, -3.0),
                e(1, 0, 0, 0, 1, 2, 1, 0.5),
                e(1, 0, 0, 1, 1, 2, 1, -0.5),
                e(1, 1, 1, 0, 1, 2, 1, -0.5),
                e(1, 1, 1, 1, 1, 2, 1, 0.5),
            ],
        )
        .expect("valid tensor")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q0_pair() -> QuadraticTensor {
        QuadraticTensor::new(2, forms::q0(0, 0, 1, 1.0)).unwrap()
    }

    #[test]
    fn direction_is_unit() {
        for i in 0..100 {
            let d = Direction::new(0.37 * i as f64 - 11.0);
            let [c, s] = d.omega();
            assert!(((c * c + s * s) - 1.0).abs() <= 4.0 * f64::EPSILON);
            assert_eq!(d.extended()[0], -1.0);
        }
    }

    #[test]
    fn empty_tensors_evaluate_to_zero() {
        let p = GradientVector::from_vec(2, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!(QuadraticTensor::zero(2).eval(&p), vec![0.0, 0.0]);
        assert_eq!(CubicTensor::zero(2).eval(&p), vec![0.0, 0.0]);
    }

    #[test]
    fn single_terms() {
        let b = QuadraticTensor::new(1, [QuadraticEntry { j: 0, k: 0, l: 0, a: 0, b: 0, value: 1.0 }]).unwrap();
        let mut p = GradientVector::zeros(1);
        p.set(0, 0, 2.0);
        assert_eq!(b.eval(&p), vec![4.0]);
        assert_eq!(forms::time_cube_damping().eval(&p), vec![-8.0]);
    }

    #[test]
    fn q0_of_two_components() {
        // Q₀(u₁,u₂) = ∂_t u₁ ∂_t u₂ − ∇u₁·∇u₂ = 1 at this gradient.
        let mut p = GradientVector::zeros(2);
        p.set(0, 0, 1.0);
        p.set(0, 1, 1.0);
        assert_eq!(q0_pair().eval(&p), vec![1.0, 0.0]);
    }

    #[test]
    fn reduced_quadratic_values() {
        let b = QuadraticTensor::new(1, [QuadraticEntry { j: 0, k: 0, l: 0, a: 0, b: 0, value: 1.0 }]).unwrap();
        for theta in [0.0, 1.0, 2.5] {
            assert_eq!(b.eval_reduced(&Direction::new(theta), &[3.0]), vec![9.0]);
            assert_eq!(b.eval_reduced(&Direction::new(theta), &[0.0]), vec![0.0]);
        }
        let q0 = QuadraticTensor::new(1, forms::q0(0, 0, 0, 1.0)).unwrap();
        for theta in [0.0, 0.3, 1.7, 4.0] {
            assert!(q0.eval_reduced(&Direction::new(theta), &[2.3])[0].abs() < 1e-14);
        }
    }

    #[test]
    fn reduced_cubic_of_diagonal_pair() {
        let (a, b) = (1.5, -0.7);
        let c = forms::diagonal_pair(a, b);
        for theta in [0.0, 0.9, 3.3] {
            let y = [0.4, -1.2];
            let r = c.eval_reduced(&Direction::new(theta), &y);
            let expected = [a * y[0].powi(3) - b * y[0] * y[1] * y[1], y[1].powi(3)];
            assert!((r[0] - expected[0]).abs() < 1e-14);
            assert!((r[1] - expected[1]).abs() < 1e-14);
        }
        assert_eq!(forms::time_cube_damping().eval_reduced(&Direction::new(0.2), &[1.7]), vec![1.7f64.powi(3)]);
    }

    #[test]
    fn reduced_cubic_of_coupled_pair() {
        let c = forms::coupled_pair();
        for theta in [0.0, 0.4, 1.1, 2.9, 5.0] {
            let d = Direction::new(theta);
            let [w1, w2] = d.omega();
            let k = w1 * w1 * w2;
            for y in [[1.0, 0.0], [0.3, -0.8], [-1.1, 0.6]] {
                let (y1, y2) = (y[0], y[1]);
                let cross = k * (y1 * y1 - y2 * y2) * (y1 - y2) / 2.0;
                let expected = [y1.powi(3) + y2.powi(3) - cross, -y1.powi(3) + 3.0 * y1 * y1 * y2 + cross];
                let r = c.eval_reduced(&d, &y);
                assert!((r[0] - expected[0]).abs() < 1e-13, "{r:?} vs {expected:?}");
                assert!((r[1] - expected[1]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn gradient_of_scalar_cube() {
        let c = forms::time_cube_damping();
        assert_eq!(c.grad_reduced(&Direction::new(0.0), &[2.0]), vec![12.0]);
        assert_eq!(c.grad_reduced(&Direction::new(0.0), &[0.0]), vec![0.0]);
    }

    #[test]
    fn construction_rejects_bad_indices() {
        let bad = QuadraticEntry { j: 1, k: 3, l: 1, a: 0, b: 0, value: 1.0 };
        assert_eq!(
            QuadraticTensor::from_one_based(2, [bad]),
            Err(NonlinearityError::ComponentOutOfRange { ordinal: 1, index: 3, n: 2 })
        );
        let bad = CubicEntry { j: 0, k: 0, l: 0, m: 0, a: 0, b: 3, c: 0, value: 1.0 };
        assert!(matches!(CubicTensor::new(1, [bad]), Err(NonlinearityError::DerivativeOutOfRange { .. })));
        let bad = CubicEntry { j: 0, k: 0, l: 0, m: 0, a: 0, b: 0, c: 0, value: f64::NAN };
        assert!(matches!(CubicTensor::new(1, [bad]), Err(NonlinearityError::NonFinite { ordinal: 1 })));
    }

    #[test]
    fn duplicates_merge() {
        let e = QuadraticEntry { j: 0, k: 0, l: 0, a: 1, b: 2, value: 0.25 };
        let t = QuadraticTensor::new(1, [e, e, QuadraticEntry { value: 0.5, ..e }]).unwrap();
        assert_eq!(t.entries().len(), 1);
        assert_eq!(t.entries()[0].value, 1.0);
        let cancelled = QuadraticTensor::new(1, [e, QuadraticEntry { value: -0.25, ..e }]).unwrap();
        assert!(cancelled.is_empty());
    }

    fn random_cubic(n: usize) -> impl Strategy<Value = CubicTensor> {
        prop::collection::vec(
            (0..n, 0..n, 0..n, 0..n, 0..3usize, 0..3usize, 0..3usize, -2.0..2.0f64),
            0..12,
        )
        .prop_map(move |raw| {
            CubicTensor::new(
                n,
                raw.into_iter().map(|(j, k, l, m, a, b, c, value)| CubicEntry { j, k, l, m, a, b, c, value }),
            )
            .unwrap()
        })
    }

    fn random_quadratic(n: usize) -> impl Strategy<Value = QuadraticTensor> {
        prop::collection::vec((0..n, 0..n, 0..n, 0..3usize, 0..3usize, -2.0..2.0f64), 0..12).prop_map(
            move |raw| {
                QuadraticTensor::new(n, raw.into_iter().map(|(j, k, l, a, b, value)| QuadraticEntry { j, k, l, a, b, value }))
                    .unwrap()
            },
        )
    }

    proptest! {
        #[test]
        fn cubic_substitution_identity(c in random_cubic(3), theta in -7.0..7.0f64,
                                       y in prop::collection::vec(-3.0..3.0f64, 3)) {
            let d = Direction::new(theta);
            let full = c.eval(&GradientVector::outgoing(&d, &y));
            let red = c.eval_reduced(&d, &y);
            for (f, r) in full.iter().zip(&red) {
                prop_assert!((f - r).abs() <= 1e-12 * (1.0 + r.abs()));
            }
        }

        #[test]
        fn quadratic_substitution_identity(b in random_quadratic(3), theta in -7.0..7.0f64,
                                           y in prop::collection::vec(-3.0..3.0f64, 3)) {
            let d = Direction::new(theta);
            let full = b.eval(&GradientVector::outgoing(&d, &y));
            let red = b.eval_reduced(&d, &y);
            for (f, r) in full.iter().zip(&red) {
                prop_assert!((f - r).abs() <= 1e-12 * (1.0 + r.abs()));
            }
        }

        #[test]
        fn homogeneity(c in random_cubic(2), b in random_quadratic(2), theta in -4.0..4.0f64,
                       y in prop::collection::vec(-2.0..2.0f64, 2), s in -3.0..3.0f64) {
            let d = Direction::new(theta);
            let ys: Vec<f64> = y.iter().map(|v| s * v).collect();
            for (lhs, rhs) in c.eval_reduced(&d, &ys).iter().zip(c.eval_reduced(&d, &y)) {
                prop_assert!((lhs - s.powi(3) * rhs).abs() <= 1e-11 * (1.0 + lhs.abs()));
            }
            for (lhs, rhs) in b.eval_reduced(&d, &ys).iter().zip(b.eval_reduced(&d, &y)) {
                prop_assert!((lhs - s * s * rhs).abs() <= 1e-11 * (1.0 + lhs.abs()));
            }
        }

        #[test]
        fn gradient_matches_central_differences(c in random_cubic(3), theta in -4.0..4.0f64,
                                                y in prop::collection::vec(-10.0..10.0f64, 3)) {
            let d = Direction::new(theta);
            let jac = c.grad_reduced(&d, &y);
            let step = 1e-5;
            let scale = 1.0 + c.magnitude() * 3.0 * y.iter().map(|v| v * v).sum::<f64>();
            for k in 0..3 {
                let mut yp = y.clone();
                let mut ym = y.clone();
                yp[k] += step;
                ym[k] -= step;
                let fp = c.eval_reduced(&d, &yp);
                let fm = c.eval_reduced(&d, &ym);
                for j in 0..3 {
                    let fd = (fp[j] - fm[j]) / (2.0 * step);
                    prop_assert!((fd - jac[j * 3 + k]).abs() <= 1e-6 * scale,
                                 "j={} k={} fd={} exact={}", j, k, fd, jac[j * 3 + k]);
                }
            }
        }

        #[test]
        fn euler_identity(c in random_cubic(3), theta in -4.0..4.0f64,
                          y in prop::collection::vec(-3.0..3.0f64, 3)) {
            let d = Direction::new(theta);
            let jac = c.grad_reduced(&d, &y);
            let f = c.eval_reduced(&d, &y);
            for j in 0..3 {
                let lhs: f64 = (0..3).map(|k| y[k] * jac[j * 3 + k]).sum();
                prop_assert!((lhs - 3.0 * f[j]).abs() <= 1e-10 * (1.0 + f[j].abs()));
            }
        }
    }
}
