//! Decay report for a damped run: energy ratio, the boundedness ratio
//! `r(t)` and the verdict.

use nullwave::diagnostics::{decay_report, GhostProbe, GhostWeight, Headroom, RunRecord};
use nullwave::nonlinearity::{forms, QuadraticTensor, SystemSpec};
use nullwave::wave_solver::{observe, GridConfig, InitialData, Simulation};

fn main() {
    let eps = 0.3;
    let spec = SystemSpec::new(QuadraticTensor::zero(1), forms::time_cube_damping()).unwrap();
    let data = InitialData::radial_bump(1.0, eps, vec![0.0], vec![6.0]);
    let mut sim = Simulation::new(GridConfig::desk(1.0 / 16.0, 20.0, 1.0), &data, spec.clone()).unwrap();
    let mut run = RunRecord::default();
    let mut ghost = GhostProbe::new(GhostWeight::new(2.0).unwrap(), spec);
    let outcome = sim.run(8, |s, g| {
        run.observations.push(observe(s, g, 0.05));
        ghost.observe(s, g);
    });
    run.set_outcome(outcome);
    run.ghost = ghost.samples;
    let report = decay_report(&run, eps, 0.01, Headroom::default()).unwrap();
    let s = &report.summary;
    println!("verdict {:?}", report.verdict);
    println!("energy ratio {:.4}, monotone {}", s.energy_ratio, s.energy_monotone);
    println!("r(2) = {:.5}, sup r = {:.5}, bounded {}", s.r_at_2.unwrap(), s.r_sup.unwrap(), s.r_bounded);
    println!("q(2) = {:.5}, sup q = {:.5}, bounded {}", s.q_at_2.unwrap(), s.q_sup.unwrap(), s.q_bounded);
    println!("ghost residual {:.3e}", s.ghost_residual_max.unwrap());
}
