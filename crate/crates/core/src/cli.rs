//! The `check`, `profile`, `simulate` and `report` commands.
//!
//! Exit codes: 0 when a command completes (whatever the verdicts, including
//! blow-up), 1 on an output failure, 2 on a configuration error and 3 when
//! the inputs of `report` are missing or inconsistent.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::conditions::{
    check_agemi, check_null_cubic, check_null_quadratic, check_positive_definite, check_strict,
    decompose_null_forms, estimate_c0, ConditionReport, NullFormDecomposition, PositiveDefiniteReport, Tolerances,
    Verdict,
};
use crate::diagnostics::{decay_report, DecayReport, DiagnosticsError, GhostProbe, GhostSample, GhostWeight, RunRecord};
use crate::io::series::{header, read_series, write_series, write_two_column, SeriesWriter};
use crate::io::snapshot::Snapshot;
use crate::io::{read_json, write_json, CheckParams, IoError, LoadedConfig, RaySpec, Task};
use crate::nonlinearity::Direction;
use crate::profile_ode::{
    integrate_profile, lyapunov_track, ray_start_time, steps_for_span, verify_mats, ProfileError, RayCoordinate,
};
use crate::wave_solver::{observe, Observation, ProfileProbe, Simulation, SolverError, StepOutcome};

pub const EXIT_OK: i32 = 0;
pub const EXIT_OUTPUT: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_MISSING: i32 = 3;

/// Column names of `observers.csv`.
pub const OBSERVER_COLUMNS: [&str; 5] = ["t", "energy", "max_du", "weighted_norm", "support_radius"];
/// Column names of `ghost.csv`.
pub const GHOST_COLUMNS: [&str; 4] = ["t", "ghost_energy", "z_flux", "source"];
/// Allowed per-step increase of `Φ` (relative to `max(1, Φ)`) in the profile summary.
pub const PHI_STEP_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Parser)]
#[command(name = "nullwave", version, about = "Structural checks, profile ODEs and wave simulations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decide the null, positivity and dissipation conditions.
    Check(Args),
    /// Integrate the profile equation along rays.
    Profile(Args),
    /// Run the wave solver with observers.
    Simulate(Args),
    /// Build decay reports from a simulate output directory.
    Report(Args),
}

#[derive(Debug, clap::Args)]
pub struct Args {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides `out` in the configuration.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides `seed` in the configuration.
    #[arg(long)]
    pub seed: Option<u64>,
}

impl Command {
    pub fn task(&self) -> Task {
        match self {
            Command::Check(_) => Task::Check,
            Command::Profile(_) => Task::Profile,
            Command::Simulate(_) => Task::Simulate,
            Command::Report(_) => Task::Report,
        }
    }

    pub fn args(&self) -> &Args {
        match self {
            Command::Check(a) | Command::Profile(a) | Command::Simulate(a) | Command::Report(a) => a,
        }
    }
}

pub fn exit_code(e: &IoError) -> i32 {
    match e {
        IoError::Config { .. } => EXIT_CONFIG,
        IoError::MissingInput(_) | IoError::Misaligned(_) => EXIT_MISSING,
        IoError::Io { .. } => EXIT_OUTPUT,
    }
}

/// Parses `args` (program name first) and runs the command; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(&cli.command),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            code
        }
    }
}

pub fn execute(command: &Command) -> i32 {
    let a = command.args();
    match run(command.task(), &a.config, a.out.as_deref(), a.seed) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Loads the configuration and runs `task` into `out` (or the configured directory).
pub fn run(task: Task, config: &Path, out: Option<&Path>, seed: Option<u64>) -> Result<(), IoError> {
    let mut cfg = LoadedConfig::load(config)?;
    if cfg.config.task != task {
        return Err(cfg.invalid("task", format!("configuration is for {}, not {}", cfg.config.task.name(), task.name())));
    }
    if let Some(s) = seed {
        cfg.config.seed = s;
    }
    let out = match (out, &cfg.config.out) {
        (Some(o), _) => o.to_path_buf(),
        (None, Some(o)) => o.clone(),
        (None, None) => return Err(cfg.invalid("out", "no output directory given")),
    };
    match task {
        Task::Check => cmd_check(&cfg, &out).map(|_| ()),
        Task::Profile => cmd_profile(&cfg, &out).map(|_| ()),
        Task::Simulate => cmd_simulate(&cfg, &out).map(|_| ()),
        Task::Report => cmd_report(&cfg, &out).map(|_| ()),
    }
}

fn create_dir(out: &Path) -> Result<(), IoError> {
    fs::create_dir_all(out).map_err(|e| IoError::io(out, e))
}

/// Either a result or the reason it could not be computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Outcome<T> {
    Ok(T),
    Err { error: String },
}

impl<T> Outcome<T> {
    fn from<E: ToString>(r: Result<T, E>) -> Self {
        match r {
            Ok(v) => Outcome::Ok(v),
            Err(e) => Outcome::Err { error: e.to_string() },
        }
    }

    pub fn ok(&self) -> Option<&T> {
        match self {
            Outcome::Ok(v) => Some(v),
            Outcome::Err { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckVerdicts {
    pub null_quadratic: Verdict,
    pub null_cubic: Verdict,
    pub positive_definite: Verdict,
    pub agemi: Option<Verdict>,
    pub strict: Option<Verdict>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub n_components: usize,
    pub n_theta: usize,
    pub n_y: usize,
    pub tolerances: Tolerances,
    pub verdicts: CheckVerdicts,
    pub null_quadratic: ConditionReport,
    pub null_form_decomposition: Outcome<NullFormDecomposition>,
    pub null_cubic: ConditionReport,
    pub positive_definite: PositiveDefiniteReport,
    pub agemi: Outcome<ConditionReport>,
    pub strict: Outcome<ConditionReport>,
    pub c0: Outcome<f64>,
}

fn check_sweep(cfg: &LoadedConfig, field: &str, p: &CheckParams) -> Result<(), IoError> {
    if p.n_theta < 8 {
        return Err(cfg.invalid(&format!("{field}.n_theta"), "must be at least 8"));
    }
    if p.n_y < 64 {
        return Err(cfg.invalid(&format!("{field}.n_y"), "must be at least 64"));
    }
    Ok(())
}

/// Runs every condition check and writes `check.json`.
pub fn cmd_check(cfg: &LoadedConfig, out: &Path) -> Result<CheckReport, IoError> {
    let spec = cfg.system()?;
    let n = spec.n_components();
    let a = cfg.weight(n)?;
    let p = cfg.config.check.unwrap_or_default();
    check_sweep(cfg, "check", &p)?;
    let tol = &p.tolerances;

    let null_quadratic = check_null_quadratic(spec.quadratic(), tol);
    let null_cubic = check_null_cubic(spec.cubic(), p.n_y, tol);
    let null_form_decomposition = Outcome::from(decompose_null_forms(spec.quadratic(), tol));
    let positive_definite = check_positive_definite(&a, p.n_theta, tol).map_err(|e| cfg.invalid("check", e))?;
    let agemi = Outcome::from(check_agemi(spec.cubic(), &a, p.n_theta, p.n_y, tol));
    let strict = Outcome::from(check_strict(spec.cubic(), &a, p.n_theta, p.n_y, tol));
    let c0 = Outcome::from(estimate_c0(spec.cubic(), &a, p.n_theta, p.n_y, tol));
    let report = CheckReport {
        n_components: n,
        n_theta: p.n_theta,
        n_y: p.n_y,
        tolerances: *tol,
        verdicts: CheckVerdicts {
            null_quadratic: null_quadratic.verdict,
            null_cubic: null_cubic.verdict,
            positive_definite: positive_definite.verdict,
            agemi: agemi.ok().map(|r| r.verdict),
            strict: strict.ok().map(|r| r.verdict),
        },
        null_quadratic,
        null_form_decomposition,
        null_cubic,
        positive_definite,
        agemi,
        strict,
        c0,
    };
    create_dir(out)?;
    write_json(&out.join("check.json"), &report)?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RayStatus {
    Ok,
    Overflow,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatsSummary {
    pub c2: f64,
    pub max_ratio: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RaySummary {
    pub file: String,
    pub sigma: f64,
    pub theta: f64,
    pub v0: Vec<f64>,
    pub t_start: f64,
    pub status: RayStatus,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub message: Option<String>,
    pub steps: usize,
    pub v_final: Option<Vec<f64>>,
    pub phi_nonincreasing: Option<bool>,
    pub mats: Option<MatsSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSummary {
    pub n_components: usize,
    pub t1: f64,
    pub steps_per_decade: usize,
    pub seed: u64,
    pub agemi: Option<Verdict>,
    pub strict: Option<Verdict>,
    /// Present when the strict condition holds; used for the decay bound.
    pub c0: Option<f64>,
    pub rays: Vec<RaySummary>,
}

/// `Φ` never increases by more than the tolerance between samples.
pub fn phi_nonincreasing(phi: &[f64]) -> bool {
    phi.windows(2).all(|w| w[1] <= w[0] + PHI_STEP_TOLERANCE * w[0].abs().max(1.0))
}

/// Integrates every configured ray; writes `ray_NNN.csv` per ray and `summary.json`.
pub fn cmd_profile(cfg: &LoadedConfig, out: &Path) -> Result<ProfileSummary, IoError> {
    let spec = cfg.system()?;
    let n = spec.n_components();
    let a = cfg.weight(n)?;
    let p = cfg.block("profile", &cfg.config.profile)?;
    check_sweep(cfg, "profile.sweep", &p.sweep)?;
    if !(p.t1 > 2.0 && p.t1.is_finite()) {
        return Err(cfg.invalid("profile.t1", "must be finite and above 2"));
    }
    if p.steps_per_decade == 0 {
        return Err(cfg.invalid("profile.steps_per_decade", "must be positive"));
    }
    let mut rays: Vec<RaySpec> = p.rays.clone();
    if let Some(r) = &p.random_rays {
        if !(r.sigma[0] <= r.sigma[1] && r.v0_max >= 0.0) {
            return Err(cfg.invalid("profile.random_rays", "need sigma[0] <= sigma[1] and v0_max >= 0"));
        }
        rays.extend(r.sample(n, cfg.config.seed));
    }
    for (k, r) in rays.iter().enumerate() {
        if r.v0.len() != n {
            return Err(cfg.invalid(&format!("profile.rays[{k}].v0"), format!("expected {n} components")));
        }
    }

    let tol = &p.sweep.tolerances;
    let agemi = check_agemi(spec.cubic(), &a, p.sweep.n_theta, p.sweep.n_y, tol).ok().map(|r| r.verdict);
    let strict = check_strict(spec.cubic(), &a, p.sweep.n_theta, p.sweep.n_y, tol).ok().map(|r| r.verdict);
    let c0 = if strict == Some(Verdict::Holds) {
        estimate_c0(spec.cubic(), &a, p.sweep.n_theta, p.sweep.n_y, tol).ok()
    } else {
        None
    };

    create_dir(out)?;
    let mut columns = header(&["t", "s"]);
    columns.extend((1..=n).map(|j| format!("V_{j}")));
    columns.extend(header(&["Phi", "bound"]));

    let mut summaries = Vec::with_capacity(rays.len());
    for (k, r) in rays.iter().enumerate() {
        let file = format!("ray_{k:03}.csv");
        let t_start = ray_start_time(r.sigma);
        let mut summary = RaySummary {
            file: file.clone(),
            sigma: r.sigma,
            theta: r.theta,
            v0: r.v0.clone(),
            t_start,
            status: RayStatus::Ok,
            message: None,
            steps: 0,
            v_final: None,
            phi_nonincreasing: None,
            mats: None,
        };
        let mut rows = Vec::new();
        if p.t1 <= t_start {
            summary.status = RayStatus::Skipped;
            summary.message = Some(format!("t1 = {} does not exceed the ray start {t_start}", p.t1));
        } else {
            let steps = steps_for_span(t_start, p.t1, p.steps_per_decade);
            summary.steps = steps;
            match integrate_profile(spec.cubic(), &Direction::new(r.theta), &r.v0, t_start, p.t1, steps) {
                Ok(traj) => {
                    let phi = lyapunov_track(&a, &traj).expect("dimensions checked");
                    let mats = c0.map(|c| verify_mats(&traj, &a, c).expect("non-empty trajectory"));
                    for (i, t) in traj.times.iter().enumerate() {
                        let mut row = vec![*t, t.ln()];
                        row.extend(&traj.values[i]);
                        row.push(phi[i]);
                        row.push(mats.as_ref().map_or(f64::NAN, |m| m.c2 / t.ln()));
                        rows.push(row);
                    }
                    summary.v_final = traj.last().map(<[f64]>::to_vec);
                    summary.phi_nonincreasing = Some(phi_nonincreasing(&phi));
                    summary.mats = mats.map(|m| MatsSummary { c2: m.c2, max_ratio: m.max_ratio, holds: m.holds });
                }
                Err(e @ ProfileError::Overflow { .. }) => {
                    summary.status = RayStatus::Overflow;
                    summary.message = Some(e.to_string());
                }
                Err(e) => {
                    summary.status = RayStatus::Skipped;
                    summary.message = Some(e.to_string());
                }
            }
        }
        write_series(&out.join(&file), &columns, rows)?;
        summaries.push(summary);
    }
    let summary = ProfileSummary {
        n_components: n,
        t1: p.t1,
        steps_per_decade: p.steps_per_decade,
        seed: cfg.config.seed,
        agemi,
        strict,
        c0,
        rays: summaries,
    };
    write_json(&out.join("summary.json"), &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunVerdict {
    Completed,
    BlowUp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeSummary {
    pub file: String,
    pub sigma: f64,
    pub theta: f64,
    pub samples: usize,
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateSummary {
    pub verdict: RunVerdict,
    pub blowup_time: Option<f64>,
    pub blowup_max_abs: Option<f64>,
    pub t_final: f64,
    pub steps: usize,
    pub n_observations: usize,
    pub eps: f64,
    pub radius: f64,
    pub h: f64,
    pub dt: f64,
    pub half_width: f64,
    pub cfl: f64,
    pub mu: f64,
    pub ghost_rho: Option<f64>,
    pub probes: Vec<ProbeSummary>,
    pub snapshots: Vec<String>,
}

/// Runs the solver, streaming `observers.csv` (and `ghost.csv`, probe and
/// snapshot files), then writes `summary.json`.
pub fn cmd_simulate(cfg: &LoadedConfig, out: &Path) -> Result<SimulateSummary, IoError> {
    let spec = cfg.system()?;
    let p = cfg.block("simulate", &cfg.config.simulate)?;
    if p.every == 0 {
        return Err(cfg.invalid("simulate.every", "must be positive"));
    }
    if !(0.0..1.0).contains(&p.mu) {
        return Err(cfg.invalid("simulate.mu", "must lie in [0, 1)"));
    }
    if let Some(s) = p.snapshot_every {
        if s == 0 || s % p.every != 0 {
            return Err(cfg.invalid("simulate.snapshot_every", "must be a positive multiple of every"));
        }
    }
    let weight = match p.ghost_rho {
        Some(rho) => Some(GhostWeight::new(rho).map_err(|e| cfg.invalid("simulate.ghost_rho", e))?),
        None => None,
    };
    let mut sim = Simulation::new(p.grid, &p.data, spec.clone()).map_err(|e| match e {
        SolverError::Invalid(m) => cfg.invalid("simulate.data", m),
        e => cfg.invalid("simulate.grid", e),
    })?;

    create_dir(out)?;
    let n = spec.n_components();
    let mut observers = SeriesWriter::create(&out.join("observers.csv"), &header(&OBSERVER_COLUMNS))?;
    let mut ghost = weight.map(|w| GhostProbe::new(w, spec.clone()));
    let mut probes: Vec<ProfileProbe> = p.probes.iter().map(|r| ProfileProbe::new(RayCoordinate::new(r.sigma, r.theta))).collect();
    if p.snapshot_every.is_some() {
        create_dir(&out.join("snapshots"))?;
    }
    let mut snapshots = Vec::new();
    let mut n_obs = 0;
    let mut failure = None;
    let outcome = sim.run(p.every, |st, g| {
        if failure.is_some() {
            return;
        }
        let o = observe(st, g, p.mu);
        n_obs += 1;
        if let Err(e) = observers.row(&[o.t, o.energy, o.max_du, o.weighted_norm, o.support_radius]) {
            failure = Some(e);
        }
        if let Some(gp) = ghost.as_mut() {
            gp.observe(st, g);
        }
        for pr in probes.iter_mut() {
            pr.observe(st, g);
        }
        if let Some(every) = p.snapshot_every {
            if st.step % every == 0 {
                let name = format!("snapshots/u_{:08}.bin", st.step);
                match Snapshot::of_state(st, g).save(&out.join(&name)) {
                    Ok(()) => snapshots.push(name),
                    Err(e) => failure = Some(e),
                }
            }
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    observers.finish()?;
    if let Some(gp) = &ghost {
        let rows = gp.samples.iter().map(|s| vec![s.t, s.ghost_energy, s.z_flux, s.source]);
        write_series(&out.join("ghost.csv"), &header(&GHOST_COLUMNS), rows)?;
    }
    let mut probe_summaries = Vec::new();
    let mut columns = header(&["t"]);
    columns.extend((1..=n).map(|j| format!("U_{j}")));
    for (k, pr) in probes.iter().enumerate() {
        let file = format!("probe_{k:03}.csv");
        let s = &pr.series;
        let rows = s.times.iter().zip(&s.values).map(|(t, v)| std::iter::once(*t).chain(v.iter().copied()).collect());
        write_series(&out.join(&file), &columns, rows)?;
        probe_summaries.push(ProbeSummary {
            file,
            sigma: pr.ray.sigma,
            theta: pr.ray.omega.theta(),
            samples: s.times.len(),
            truncated: s.truncated,
        });
    }
    let (verdict, blowup_time, blowup_max_abs) = match outcome {
        StepOutcome::Continue => (RunVerdict::Completed, None, None),
        StepOutcome::BlowUp { t, max_abs } => (RunVerdict::BlowUp, Some(t), Some(max_abs)),
    };
    let summary = SimulateSummary {
        verdict,
        blowup_time,
        blowup_max_abs,
        t_final: sim.state.t,
        steps: sim.state.step,
        n_observations: n_obs,
        eps: p.data.eps,
        radius: p.data.radius,
        h: p.grid.h,
        dt: p.grid.dt,
        half_width: p.grid.half_width,
        cfl: p.grid.cfl(),
        mu: p.mu,
        ghost_rho: p.ghost_rho,
        probes: probe_summaries,
        snapshots,
    };
    write_json(&out.join("summary.json"), &summary)?;
    Ok(summary)
}

/// Reads the observer and ghost series of a simulate output directory.
pub fn load_run(dir: &Path) -> Result<(SimulateSummary, RunRecord), IoError> {
    if !dir.is_dir() {
        return Err(IoError::MissingInput(dir.display().to_string()));
    }
    let summary_path = dir.join("summary.json");
    if !summary_path.is_file() {
        return Err(IoError::MissingInput(summary_path.display().to_string()));
    }
    let summary: SimulateSummary = read_json(&summary_path).map_err(|e| IoError::Misaligned(e.to_string()))?;
    let observations: Vec<Observation> = read_series(&dir.join("observers.csv"), &header(&OBSERVER_COLUMNS))?
        .into_iter()
        .map(|r| Observation { t: r[0], energy: r[1], max_du: r[2], weighted_norm: r[3], support_radius: r[4] })
        .collect();
    if observations.len() != summary.n_observations {
        return Err(IoError::Misaligned(format!(
            "observers.csv has {} rows, summary records {}",
            observations.len(),
            summary.n_observations
        )));
    }
    let ghost: Vec<GhostSample> = if summary.ghost_rho.is_some() {
        read_series(&dir.join("ghost.csv"), &header(&GHOST_COLUMNS))?
            .into_iter()
            .map(|r| GhostSample { t: r[0], ghost_energy: r[1], z_flux: r[2], source: r[3] })
            .collect()
    } else {
        Vec::new()
    };
    if !ghost.is_empty() && (ghost.len() != observations.len() || ghost.iter().zip(&observations).any(|(g, o)| g.t != o.t)) {
        return Err(IoError::Misaligned("ghost.csv times differ from observers.csv".into()));
    }
    Ok((summary, RunRecord { observations, ghost, blowup_time: None }))
}

/// Builds the decay report of a simulate output directory; writes
/// `report.json`, `report.csv`, `ghost_residual.csv` and one `.dat` file per series.
pub fn cmd_report(cfg: &LoadedConfig, out: &Path) -> Result<DecayReport, IoError> {
    let p = cfg.block("report", &cfg.config.report)?;
    if !(p.delta > 0.0 && p.delta < 0.25) {
        return Err(cfg.invalid("report.delta", "must lie in (0, 1/4)"));
    }
    let (summary, mut run) = load_run(&p.input)?;
    run.blowup_time = summary.blowup_time;
    if run.ghost.len() < 3 {
        run.ghost.clear();
    }
    let report = decay_report(&run, summary.eps, p.delta, p.headroom).map_err(|e| match e {
        DiagnosticsError::Invalid(m) => cfg.invalid("report", format!("{m} (recorded eps = {})", summary.eps)),
        e => IoError::Misaligned(e.to_string()),
    })?;

    create_dir(out)?;
    write_json(&out.join("report.json"), &report)?;
    let rows = (0..report.times.len()).map(|i| vec![report.times[i], report.energy[i], report.max_du[i], report.r[i], report.q[i]]);
    write_series(&out.join("report.csv"), &header(&["t", "energy", "max_du", "r", "q"]), rows)?;
    for (name, ys) in [("energy", &report.energy), ("max_du", &report.max_du), ("r", &report.r), ("q", &report.q)] {
        write_two_column(&out.join(format!("{name}.dat")), ["t", name], &report.times, ys)?;
    }
    if let Some(g) = &report.ghost_residual {
        let rows = g.times.iter().zip(&g.residual).map(|(t, r)| vec![*t, *r]);
        write_series(&out.join("ghost_residual.csv"), &header(&["t", "residual"]), rows)?;
        write_two_column(&out.join("ghost_residual.dat"), ["t", "residual"], &g.times, &g.residual)?;
    }
    Ok(report)
}
