//! Integrate the profile equation for scalar cubic damping, compare with the
//! closed form `V(t) = V₀/√(1 + V₀² log(t/t₀))`, and check the logarithmic
//! decay bound along a ray of the coupled system.

use nullwave::conditions::{estimate_c0, weights, Tolerances, WeightMatrix};
use nullwave::nonlinearity::{forms, Direction};
use nullwave::profile_ode::{integrate_profile, lyapunov_track, steps_for_span, verify_mats, RayCoordinate};

fn main() {
    let c = forms::time_cube_damping();
    let ray = RayCoordinate::new(-0.5, 0.0);
    let (t0, t1) = (ray.t_start, 1e6);
    for per_decade in [16, 64, 256] {
        let n = steps_for_span(t0, t1, per_decade);
        let traj = integrate_profile(&c, &ray.omega, &[1.0], t0, t1, n).unwrap();
        let exact = 1.0 / (1.0 + (t1 / t0).ln()).sqrt();
        let got = traj.last().unwrap()[0];
        println!("{per_decade:>4} steps/decade: V(1e6) = {got:.15}, rel err {:.2e}", (got - exact).abs() / exact);
    }
    let n = steps_for_span(t0, t1, 256);
    let traj = integrate_profile(&c, &ray.omega, &[1.0], t0, t1, n).unwrap();
    let phi = lyapunov_track(&WeightMatrix::identity(1), &traj).unwrap();
    println!("Phi: {:.4} -> {:.4}", phi[0], phi.last().unwrap());

    let (cc, a) = (forms::coupled_pair(), weights::coupled_pair());
    let c0 = estimate_c0(&cc, &a, 512, 512, &Tolerances::default()).unwrap();
    let dir = Direction::new(0.7);
    let traj = integrate_profile(&cc, &dir, &[0.6, -0.8], 2.0, t1, steps_for_span(2.0, t1, 256)).unwrap();
    let m = verify_mats(&traj, &a, c0).unwrap();
    println!("coupled pair: C0 = {c0:.5}, C2 = {:.4}, max Phi·log t / C2 = {:.4}, holds: {}", m.c2, m.max_ratio, m.holds);
}
