//! Decide the structural conditions for the two-component system with an
//! angle-dependent weight, and for a sign-flipped scalar damping term.

use nullwave::conditions::{
    check_agemi, check_null_cubic, check_null_quadratic, check_positive_definite, check_strict, estimate_c0, weights,
    Tolerances, WeightMatrix,
};
use nullwave::nonlinearity::{forms, CubicEntry, CubicTensor, QuadraticTensor};

fn main() {
    let tol = Tolerances::default();
    let (n_theta, n_y) = (512, 512);

    let c = forms::coupled_pair();
    let a = weights::coupled_pair();
    let pd = check_positive_definite(&a, n_theta, &tol).unwrap();
    println!("coupled pair");
    println!("  weight eigenvalues in [{:.4}, {:.4}], M0 = {:.4}", pd.lambda_min, pd.lambda_max, pd.m0);
    println!("  quadratic null: {:?}", check_null_quadratic(&QuadraticTensor::zero(2), &tol).verdict);
    println!("  cubic null:     {:?}", check_null_cubic(&c, n_y, &tol).verdict);
    let ag = check_agemi(&c, &a, n_theta, n_y, &tol).unwrap();
    println!("  dissipation:    {:?} (min {:.4e})", ag.verdict, ag.margin);
    println!("  strict:         {:?}", check_strict(&c, &a, n_theta, n_y, &tol).unwrap().verdict);
    println!("  C0 = {:.6}", estimate_c0(&c, &a, n_theta, n_y, &tol).unwrap());

    let flipped = CubicTensor::new(1, [CubicEntry { j: 0, k: 0, l: 0, m: 0, a: 0, b: 0, c: 0, value: 1.0 }]).unwrap();
    let ag = check_agemi(&flipped, &WeightMatrix::identity(1), n_theta, n_y, &tol).unwrap();
    let w = ag.witness.unwrap();
    println!("+(∂_t u)^3: {:?}, witness θ = {:.3}, Y = {:?}, value {:.3}", ag.verdict, w.theta, w.y, w.value);
}
