//! Residual of the ghost-weight energy identity on a damped run at two
//! resolutions; halving `h` should divide it by about four.

use nullwave::diagnostics::{refinement_order, verify_ghost_identity, GhostProbe, GhostWeight};
use nullwave::nonlinearity::{forms, QuadraticTensor, SystemSpec};
use nullwave::wave_solver::{GridConfig, InitialData, Simulation};

fn residual(h: f64) -> Vec<f64> {
    let spec = SystemSpec::new(QuadraticTensor::zero(1), forms::time_cube_damping()).unwrap();
    let data = InitialData::radial_bump(1.0, 0.3, vec![0.0], vec![6.0]);
    let mut sim = Simulation::new(GridConfig::desk(h, 5.0, 1.0), &data, spec.clone()).unwrap();
    let weight = GhostWeight::new(2.0).unwrap();
    println!("h = {h}: 1 <= e^eta <= e^pi at t = 0: {}", weight.bounds_hold(&sim.grid, 0.0));
    let mut probe = GhostProbe::new(weight, spec);
    sim.run(4, |s, g| probe.observe(s, g));
    let r = verify_ghost_identity(&probe.samples).unwrap();
    println!("  {} samples, max |residual| = {:.3e}", probe.samples.len(), r.max_abs);
    r.residual
}

fn main() {
    let coarse = residual(1.0 / 16.0);
    let fine = residual(1.0 / 32.0);
    let (factor, order) = refinement_order(&coarse, &fine);
    println!("reduction factor {factor:.2}, observed order {order:.2}");
}
