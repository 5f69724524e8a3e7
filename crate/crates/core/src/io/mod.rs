//! Experiment configuration and the on-disk formats.
//!
//! Configurations are JSON. Systems and weights may be given inline or as a
//! path to a separate JSON file, resolved relative to the configuration file.
//! Output and report-input directories are run artifacts and are taken
//! relative to the working directory.
//! Series are CSV with a header row, LF line endings and 17 significant
//! digits; field snapshots use a small binary container (see [`snapshot`]).

pub mod series;
pub mod snapshot;

use std::f64::consts::TAU;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::{DeserializeOwned, Error as _};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::conditions::{Tolerances, WeightMatrix};
use crate::diagnostics::Headroom;
use crate::nonlinearity::{CubicEntry, CubicTensor, QuadraticEntry, QuadraticTensor, SystemSpec};
use crate::profile_ode::DEFAULT_STEPS_PER_DECADE;
use crate::trig::TrigPoly;
use crate::wave_solver::{GridConfig, InitialData};

#[derive(Debug, Error)]
pub enum IoError {
    /// Malformed or inconsistent configuration; `path` locates the offending
    /// value (`file: json.path`).
    #[error("{path}: {message}")]
    Config { path: String, message: String },
    #[error("missing input: {0}")]
    MissingInput(String),
    #[error("misaligned input: {0}")]
    Misaligned(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl IoError {
    pub fn config(path: impl Into<String>, message: impl ToString) -> Self {
        Self::Config { path: path.into(), message: message.to_string() }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io { path: path.to_path_buf(), source }
    }
}

fn describe<E: std::fmt::Display>(e: &serde_path_to_error::Error<E>) -> (String, String) {
    let path = e.path().to_string();
    (if path == "." { String::new() } else { path }, e.inner().to_string())
}

/// Parses a JSON document, reporting errors as `label: json.path: message`.
pub fn parse_json<T: DeserializeOwned>(text: &str, label: &str) -> Result<T, IoError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let (path, msg) = describe(&e);
        IoError::config(if path.is_empty() { label.to_string() } else { format!("{label}: {path}") }, msg)
    })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, IoError> {
    let text = fs::read_to_string(path).map_err(|e| IoError::config(path.display().to_string(), e))?;
    parse_json(&text, &path.display().to_string())
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    let mut text = serde_json::to_string_pretty(value).expect("serialisable");
    text.push('\n');
    fs::write(path, text).map_err(|e| IoError::io(path, e))
}

/// `base/p` unless `p` is absolute.
pub fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// A value given inline or as a path (a JSON string) to a file holding it.
#[derive(Debug, Clone, PartialEq)]
pub enum Source<T> {
    File(PathBuf),
    Inline(T),
}

impl<T: Serialize> Serialize for Source<T> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Source::File(p) => p.serialize(s),
            Source::Inline(v) => v.serialize(s),
        }
    }
}

impl<'de, T: DeserializeOwned> Deserialize<'de> for Source<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match serde_json::Value::deserialize(d)? {
            serde_json::Value::String(p) => Ok(Source::File(p.into())),
            v => serde_path_to_error::deserialize(v).map(Source::Inline).map_err(|e| {
                let (path, msg) = describe(&e);
                D::Error::custom(if path.is_empty() { msg } else { format!("{path}: {msg}") })
            }),
        }
    }
}

impl<T: DeserializeOwned + Clone> Source<T> {
    pub fn load(&self, base: &Path) -> Result<T, IoError> {
        match self {
            Source::Inline(v) => Ok(v.clone()),
            Source::File(p) => read_json(&resolve(base, p)),
        }
    }
}

/// System file: 1-based component indices, 0-based derivative indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemFile {
    pub n_components: usize,
    #[serde(default)]
    pub quadratic: Vec<QuadraticEntry>,
    #[serde(default)]
    pub cubic: Vec<CubicEntry>,
    /// Terms of order four and higher are not representable; `true` is rejected.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub higher_order: bool,
}

impl SystemFile {
    pub fn to_spec(&self) -> Result<SystemSpec, String> {
        if self.higher_order {
            return Err("higher_order: quartic and higher terms are not supported".into());
        }
        let n = self.n_components;
        let q = QuadraticTensor::from_one_based(n, self.quadratic.iter().copied()).map_err(|e| format!("quadratic: {e}"))?;
        let c = CubicTensor::from_one_based(n, self.cubic.iter().copied()).map_err(|e| format!("cubic: {e}"))?;
        SystemSpec::new(q, c).map_err(|e| e.to_string())
    }

    pub fn from_spec(spec: &SystemSpec) -> Self {
        Self {
            n_components: spec.n_components(),
            quadratic: spec
                .quadratic()
                .entries()
                .iter()
                .map(|e| QuadraticEntry { j: e.j + 1, k: e.k + 1, l: e.l + 1, ..*e })
                .collect(),
            cubic: spec
                .cubic()
                .entries()
                .iter()
                .map(|e| CubicEntry { j: e.j + 1, k: e.k + 1, l: e.l + 1, m: e.m + 1, ..*e })
                .collect(),
            higher_order: false,
        }
    }
}

/// `cos`·cos(nθ) + `sin`·sin(nθ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Harmonic {
    pub n: i64,
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

/// Weight file: either a constant `diagonal` or full `entries`, a row-major
/// `N×N` array of harmonic lists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightFile {
    pub n_components: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagonal: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entries: Option<Vec<Vec<Vec<Harmonic>>>>,
}

impl WeightFile {
    pub fn to_matrix(&self) -> Result<WeightMatrix, String> {
        let n = self.n_components;
        match (&self.diagonal, &self.entries) {
            (Some(d), None) => {
                if d.len() != n {
                    return Err(format!("diagonal: expected {n} values, got {}", d.len()));
                }
                Ok(WeightMatrix::constant_diagonal(d))
            }
            (None, Some(rows)) => {
                if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                    return Err(format!("entries: expected a {n}x{n} array"));
                }
                let polys = rows
                    .iter()
                    .flatten()
                    .map(|hs| TrigPoly::from_terms(hs.iter().map(|h| (h.n, h.cos, h.sin))))
                    .collect();
                WeightMatrix::new(n, polys).map_err(|e| e.to_string())
            }
            _ => Err("exactly one of diagonal and entries is required".into()),
        }
    }

    pub fn from_matrix(a: &WeightMatrix) -> Self {
        let n = a.n_components();
        let rows = (0..n)
            .map(|j| {
                (0..n)
                    .map(|k| {
                        a.entry(j, k)
                            .terms()
                            .into_iter()
                            .filter(|(_, c, s)| *c != 0.0 || *s != 0.0)
                            .map(|(n, cos, sin)| Harmonic { n, cos, sin })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        Self { n_components: n, diagonal: None, entries: Some(rows) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Check,
    Profile,
    Simulate,
    Report,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Check => "check",
            Task::Profile => "profile",
            Task::Simulate => "simulate",
            Task::Report => "report",
        }
    }
}

fn default_sweep() -> usize {
    512
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckParams {
    #[serde(default = "default_sweep")]
    pub n_theta: usize,
    #[serde(default = "default_sweep")]
    pub n_y: usize,
    #[serde(default)]
    pub tolerances: Tolerances,
}

impl Default for CheckParams {
    fn default() -> Self {
        Self { n_theta: default_sweep(), n_y: default_sweep(), tolerances: Tolerances::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RaySpec {
    pub sigma: f64,
    pub theta: f64,
    pub v0: Vec<f64>,
}

/// Rays drawn with the configured seed: `σ` uniform on `sigma`, `θ` uniform,
/// `V0` uniform in the ball of radius `v0_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomRays {
    pub count: usize,
    pub sigma: [f64; 2],
    pub v0_max: f64,
}

impl RandomRays {
    pub fn sample(&self, n: usize, seed: u64) -> Vec<RaySpec> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..self.count)
            .map(|_| {
                let sigma = rng.gen_range(self.sigma[0]..=self.sigma[1]);
                let theta = rng.gen_range(0.0..TAU);
                let v0 = loop {
                    let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
                    if v.iter().map(|x| x * x).sum::<f64>() <= 1.0 {
                        break v.into_iter().map(|x| x * self.v0_max).collect();
                    }
                };
                RaySpec { sigma, theta, v0 }
            })
            .collect()
    }
}

fn default_t1() -> f64 {
    1e6
}
fn default_spd() -> usize {
    DEFAULT_STEPS_PER_DECADE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileParams {
    #[serde(default)]
    pub rays: Vec<RaySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random_rays: Option<RandomRays>,
    #[serde(default = "default_t1")]
    pub t1: f64,
    #[serde(default = "default_spd")]
    pub steps_per_decade: usize,
    /// Sweep used to certify the strict condition and estimate `C₀`.
    #[serde(default)]
    pub sweep: CheckParams,
}

/// A ray along which the simulated profile is sampled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeRay {
    pub sigma: f64,
    pub theta: f64,
}

fn default_every() -> usize {
    16
}
fn default_mu() -> f64 {
    0.05
}
fn default_rho() -> Option<f64> {
    Some(2.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateParams {
    pub grid: GridConfig,
    pub data: InitialData,
    /// Steps between observer rows.
    #[serde(default = "default_every")]
    pub every: usize,
    #[serde(default = "default_mu")]
    pub mu: f64,
    /// Ghost-weight exponent; `null` disables the ghost observer.
    #[serde(default = "default_rho")]
    pub ghost_rho: Option<f64>,
    #[serde(default)]
    pub probes: Vec<ProbeRay>,
    /// Steps between field snapshots; absent for none.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_every: Option<usize>,
}

fn default_delta() -> f64 {
    0.01
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportParams {
    /// Output directory of a previous `simulate`.
    pub input: PathBuf,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default)]
    pub headroom: Headroom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: Task,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<Source<SystemFile>>,
    /// Defaults to the identity.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<Source<WeightFile>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub check: Option<CheckParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<ProfileParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<ReportParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn from_json(text: &str, label: &str) -> Result<Self, IoError> {
        parse_json(text, label)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serialisable")
    }
}

/// A configuration together with the directory its relative paths refer to.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub base: PathBuf,
    pub label: String,
}

impl LoadedConfig {
    pub fn load(path: &Path) -> Result<Self, IoError> {
        let config: ExperimentConfig = read_json(path)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(Self { config, base, label: path.display().to_string() })
    }

    pub fn inline(config: ExperimentConfig, base: PathBuf) -> Self {
        Self { config, base, label: "<config>".into() }
    }

    fn err(&self, field: &str, message: impl ToString) -> IoError {
        IoError::config(format!("{}: {field}", self.label), message)
    }

    pub fn system(&self) -> Result<SystemSpec, IoError> {
        let src = self.config.system.as_ref().ok_or_else(|| self.err("system", "missing field"))?;
        let file = src.load(&self.base)?;
        file.to_spec().map_err(|m| self.err("system", m))
    }

    /// The weight for an `n`-component system, the identity when absent.
    pub fn weight(&self, n: usize) -> Result<WeightMatrix, IoError> {
        let Some(src) = &self.config.weight else {
            return Ok(WeightMatrix::identity(n));
        };
        let file = src.load(&self.base)?;
        let a = file.to_matrix().map_err(|m| self.err("weight", m))?;
        if a.n_components() != n {
            return Err(self.err("weight", format!("has {} components, system has {n}", a.n_components())));
        }
        Ok(a)
    }

    pub fn block<'a, T>(&self, name: &str, value: &'a Option<T>) -> Result<&'a T, IoError> {
        value.as_ref().ok_or_else(|| self.err(name, "missing parameter block"))
    }

    pub fn invalid(&self, field: &str, message: impl ToString) -> IoError {
        self.err(field, message)
    }

}
