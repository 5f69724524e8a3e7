//! Finite trigonometric polynomials `Σ_n (c_n cos nθ + s_n sin nθ)`.

use std::f64::consts::TAU;

/// Harmonics are stored densely by index `n = 0..=degree`; `sin_coefs[0]` is
/// always zero.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigPoly {
    cos_coefs: Vec<f64>,
    sin_coefs: Vec<f64>,
}

impl TrigPoly {
    pub fn zero() -> Self {
        Self { cos_coefs: vec![0.0], sin_coefs: vec![0.0] }
    }

    pub fn constant(c: f64) -> Self {
        Self { cos_coefs: vec![c], sin_coefs: vec![0.0] }
    }

    /// Builds from `(n, cos, sin)` triples. Negative harmonics fold onto
    /// positive ones (`cos(−nθ) = cos nθ`, `sin(−nθ) = −sin nθ`); repeated
    /// harmonics add.
    pub fn from_terms(terms: impl IntoIterator<Item = (i64, f64, f64)>) -> Self {
        let mut p = Self::zero();
        for (n, c, s) in terms {
            let (idx, s) = if n < 0 { ((-n) as usize, -s) } else { (n as usize, s) };
            if idx >= p.cos_coefs.len() {
                p.cos_coefs.resize(idx + 1, 0.0);
                p.sin_coefs.resize(idx + 1, 0.0);
            }
            p.cos_coefs[idx] += c;
            if idx > 0 {
                p.sin_coefs[idx] += s;
            }
        }
        p.trim();
        p
    }

    fn trim(&mut self) {
        while self.cos_coefs.len() > 1
            && *self.cos_coefs.last().unwrap() == 0.0
            && *self.sin_coefs.last().unwrap() == 0.0
        {
            self.cos_coefs.pop();
            self.sin_coefs.pop();
        }
    }

    /// Highest harmonic with a nonzero coefficient (0 for constants).
    pub fn degree(&self) -> usize {
        self.cos_coefs.len() - 1
    }

    /// `(n, cos, sin)` for every stored harmonic.
    pub fn terms(&self) -> Vec<(i64, f64, f64)> {
        (0..self.cos_coefs.len()).map(|n| (n as i64, self.cos_coefs[n], self.sin_coefs[n])).collect()
    }

    pub fn cos_coef(&self, n: usize) -> f64 {
        self.cos_coefs.get(n).copied().unwrap_or(0.0)
    }

    pub fn sin_coef(&self, n: usize) -> f64 {
        self.sin_coefs.get(n).copied().unwrap_or(0.0)
    }

    pub fn eval(&self, theta: f64) -> f64 {
        self.cos_coefs
            .iter()
            .zip(&self.sin_coefs)
            .enumerate()
            .map(|(n, (c, s))| {
                if n == 0 {
                    *c
                } else {
                    let (sn, cn) = (n as f64 * theta).sin_cos();
                    c * cn + s * sn
                }
            })
            .sum()
    }

    /// Largest absolute coefficient.
    pub fn max_abs_coef(&self) -> f64 {
        self.cos_coefs.iter().chain(&self.sin_coefs).fold(0.0, |m, v| m.max(v.abs()))
    }

    /// The `2·degree + 1` equally spaced angles `2πi/(2d+1)` that determine a
    /// polynomial of the given degree.
    pub fn nodes(degree: usize) -> Vec<f64> {
        let m = 2 * degree + 1;
        (0..m).map(|i| TAU * i as f64 / m as f64).collect()
    }

    /// Recovers the unique polynomial of degree `≤ degree` taking the given
    /// values at [`Self::nodes`]`(degree)`, by discrete Fourier transform.
    pub fn interpolate(degree: usize, samples: &[f64]) -> Self {
        let m = 2 * degree + 1;
        assert_eq!(samples.len(), m, "need 2·degree+1 samples");
        let nodes = Self::nodes(degree);
        let mut cos_coefs = vec![0.0; degree + 1];
        let mut sin_coefs = vec![0.0; degree + 1];
        for n in 0..=degree {
            let (mut c, mut s) = (0.0, 0.0);
            for (v, th) in samples.iter().zip(&nodes) {
                let (sn, cn) = (n as f64 * th).sin_cos();
                c += v * cn;
                s += v * sn;
            }
            if n == 0 {
                cos_coefs[0] = c / m as f64;
            } else {
                cos_coefs[n] = 2.0 * c / m as f64;
                sin_coefs[n] = 2.0 * s / m as f64;
            }
        }
        Self { cos_coefs, sin_coefs }
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            cos_coefs: self.cos_coefs.iter().map(|c| c * factor).collect(),
            sin_coefs: self.sin_coefs.iter().map(|c| c * factor).collect(),
        }
    }
}
