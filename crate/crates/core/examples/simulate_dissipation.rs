//! Run the solver for `□u = −(∂_t u)³` and for the free equation from the
//! same data, and print the energy histories side by side.

use nullwave::nonlinearity::{forms, QuadraticTensor, SystemSpec};
use nullwave::wave_solver::{observe, GridConfig, InitialData, Simulation};

fn energies(spec: SystemSpec, cfg: GridConfig, data: &InitialData) -> Vec<(f64, f64, f64)> {
    let mut sim = Simulation::new(cfg, data, spec).unwrap();
    let mut rows = Vec::new();
    sim.run(64, |s, g| {
        let o = observe(s, g, 0.05);
        rows.push((o.t, o.energy, o.max_du));
    });
    rows
}

fn main() {
    let cfg = GridConfig::desk(1.0 / 16.0, 20.0, 1.0);
    let data = InitialData::radial_bump(1.0, 0.3, vec![0.0], vec![6.0]);
    println!("grid {}x{}, dt = {}, cfl = {:.3}", 2.0 * cfg.half_width / cfg.h + 1.0, 2.0 * cfg.half_width / cfg.h + 1.0, cfg.dt, cfg.cfl());
    let damped = SystemSpec::new(QuadraticTensor::zero(1), forms::time_cube_damping()).unwrap();
    let a = energies(damped, cfg, &data);
    let b = energies(SystemSpec::free(1), cfg, &data);
    println!("{:>8} {:>14} {:>14} {:>12}", "t", "E damped", "E free", "max|du|");
    for ((t, e, du), (_, f, _)) in a.iter().zip(&b) {
        println!("{t:8.3} {e:14.10} {f:14.10} {du:12.6}");
    }
}
