#![allow(dead_code)]

use oscnh::operators::Coefficients;
use oscnh::{Expr, OperatorSpec};

/// `2 + ½ sin 2πy₀` on the diagonal; bounds 1.5 and 2.5.
pub fn oscillating_isotropic() -> OperatorSpec {
    let a = Expr::add(vec![Expr::c(2.0), Expr::sin_mode(0.5, [1, 0])]);
    OperatorSpec::linear(Coefficients::from_exprs(a.clone(), Expr::c(0.0), a).unwrap(), 1.5, 2.5).unwrap()
}

/// Anisotropic oscillating coefficients with a small cross term.
pub fn oscillating_anisotropic() -> OperatorSpec {
    let a11 = Expr::add(vec![Expr::c(1.5), Expr::sin_mode(0.3, [1, 0])]);
    let a12 = Expr::sin_mode(0.2, [0, 1]);
    let a22 = Expr::add(vec![Expr::c(1.2), Expr::cos_mode(0.2, [1, 1])]);
    OperatorSpec::linear(Coefficients::from_exprs(a11, a12, a22).unwrap(), 0.5, 2.0).unwrap()
}

/// Bellman–Isaacs operator `min_α max_β` over constant linear members.
pub fn min_max() -> OperatorSpec {
    OperatorSpec::min_max(
        vec![
            vec![Coefficients::constant(1.0, 0.0, 1.0), Coefficients::constant(2.0, 0.0, 1.0)],
            vec![Coefficients::constant(1.0, 0.0, 2.0), Coefficients::constant(1.5, 0.0, 1.5)],
        ],
        1.0,
        2.0,
    )
    .unwrap()
}

/// Every operator variant.
pub fn battery() -> Vec<(&'static str, OperatorSpec)> {
    vec![
        ("laplacian", OperatorSpec::laplacian()),
        ("pucci_plus", OperatorSpec::pucci_plus(1.0, 2.0).unwrap()),
        ("pucci_minus", OperatorSpec::pucci_minus(1.0, 2.0).unwrap()),
        ("linear_oscillating", oscillating_isotropic()),
        ("linear_anisotropic", oscillating_anisotropic()),
        ("min_max", min_max()),
    ]
}
