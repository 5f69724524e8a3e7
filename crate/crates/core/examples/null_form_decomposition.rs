//! Write a quadratic term as a combination of null forms, and show the
//! residual that certifies `(∂_t u)²` is not one.

use nullwave::conditions::{check_null_quadratic, decompose_null_forms, Tolerances, NULL_PAIRS};
use nullwave::nonlinearity::{forms, GradientVector, QuadraticEntry, QuadraticTensor};

fn main() {
    let tol = Tolerances::default();
    let mut raw = forms::q0(0, 0, 1, 1.0);
    raw.extend(forms::qab(1, 0, 1, 1, 2, -2.0));
    let b = QuadraticTensor::new(2, raw).unwrap();
    println!("null condition: {:?}", check_null_quadratic(&b, &tol).verdict);
    let d = decompose_null_forms(&b, &tol).unwrap();
    for j in 0..2 {
        for k in 0..2 {
            for l in 0..2 {
                if d.q0[j][k][l].abs() > 1e-12 {
                    println!("  F_{} += {:+.3} Q0(u_{}, u_{})", j + 1, d.q0[j][k][l], k + 1, l + 1);
                }
                for (p, (a, bb)) in NULL_PAIRS.iter().enumerate() {
                    if d.qab[j][p][k][l].abs() > 1e-12 {
                        println!("  F_{} += {:+.3} Q{a}{bb}(u_{}, u_{})", j + 1, d.qab[j][p][k][l], k + 1, l + 1);
                    }
                }
            }
        }
    }
    let p = GradientVector::from_vec(2, vec![0.3, -1.1, 0.7, 2.0, -0.4, 0.9]).unwrap();
    println!("  residual {:.2e}; F(p) = {:?}, rebuilt {:?}", d.residual, b.eval(&p), d.to_tensor().eval(&p));

    let square = QuadraticTensor::new(1, [QuadraticEntry { j: 0, k: 0, l: 0, a: 0, b: 0, value: 1.0 }]).unwrap();
    let report = check_null_quadratic(&square, &tol);
    println!("(∂_t u)^2: {:?}, witness {:?}", report.verdict, report.witness);
    println!("  decomposition: {}", decompose_null_forms(&square, &tol).unwrap_err());
}
