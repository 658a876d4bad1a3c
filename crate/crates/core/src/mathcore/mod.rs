//! Dense linear algebra, finite differences, combinatorics and seeded
//! randomness shared by the model modules.

mod eigen;
mod mat;
mod rng;
pub mod tolerances;

pub use eigen::{lambda_max_sym, sym_eig, SymEigen};
pub use mat::{all_finite, dot, norm2, norm_inf, sign, Mat};
pub use rng::{SeededRng, RNG_ALGORITHM};

use thiserror::Error;

pub(crate) use tolerances::SYMMETRY_TOL;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MathError {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("singular matrix")]
    Singular,
    #[error("overflow computing {0}")]
    Overflow(String),
}

/// Central-difference gradient `(f(x+h·e_i) − f(x−h·e_i)) / 2h`.
pub fn fd_gradient<F>(f: F, x: &[f64], h: f64) -> Result<Vec<f64>, MathError>
where
    F: Fn(&[f64]) -> f64,
{
    if !(h > 0.0) {
        return Err(MathError::Domain(format!("step must be positive, got {h}")));
    }
    let mut probe = x.to_vec();
    let mut grad = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let fp = f(&probe);
        probe[i] = x[i] - h;
        let fm = f(&probe);
        probe[i] = x[i];
        if !fp.is_finite() || !fm.is_finite() {
            return Err(MathError::NonFinite(format!("function value near coordinate {i}")));
        }
        grad.push((fp - fm) / (2.0 * h));
    }
    Ok(grad)
}

/// Central-difference Jacobian of a vector map; row `i` holds `∂F_i/∂x`.
pub fn fd_jacobian<F>(f: F, x: &[f64], h: f64) -> Result<Mat, MathError>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    if !(h > 0.0) {
        return Err(MathError::Domain(format!("step must be positive, got {h}")));
    }
    let n = x.len();
    let m = f(x).len();
    let mut jac = Mat::zeros(m, n);
    let mut probe = x.to_vec();
    for j in 0..n {
        probe[j] = x[j] + h;
        let fp = f(&probe);
        probe[j] = x[j] - h;
        let fm = f(&probe);
        probe[j] = x[j];
        if !all_finite(&fp) || !all_finite(&fm) {
            return Err(MathError::NonFinite(format!("map value near coordinate {j}")));
        }
        for i in 0..m {
            jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    Ok(jac)
}

/// Second-difference Hessian of a scalar function.
pub fn fd_hessian<F>(f: F, x: &[f64], h: f64) -> Result<Mat, MathError>
where
    F: Fn(&[f64]) -> f64,
{
    if !(h > 0.0) {
        return Err(MathError::Domain(format!("step must be positive, got {h}")));
    }
    let n = x.len();
    let mut hess = Mat::zeros(n, n);
    let mut p = x.to_vec();
    let f0 = f(x);
    let eval = |p: &[f64]| -> Result<f64, MathError> {
        let v = f(p);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(MathError::NonFinite("function value in Hessian stencil".into()))
        }
    };
    for i in 0..n {
        p[i] = x[i] + h;
        let fp = eval(&p)?;
        p[i] = x[i] - h;
        let fm = eval(&p)?;
        p[i] = x[i];
        hess[(i, i)] = (fp - 2.0 * f0 + fm) / (h * h);
        for j in (i + 1)..n {
            let mut corner = |si: f64, sj: f64| -> Result<f64, MathError> {
                p[i] = x[i] + si * h;
                p[j] = x[j] + sj * h;
                let v = eval(&p);
                p[i] = x[i];
                p[j] = x[j];
                v
            };
            let v = (corner(1.0, 1.0)? - corner(1.0, -1.0)? - corner(-1.0, 1.0)? + corner(-1.0, -1.0)?) / (4.0 * h * h);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    Ok(hess)
}

/// `m!! = m·(m−2)·…·1` for odd `m ≥ −1`, with `(−1)!! = 1`.
pub fn double_factorial(m: i64) -> Result<u128, MathError> {
    if m < -1 || m % 2 == 0 {
        return Err(MathError::Domain(format!("double factorial defined here for odd m >= -1, got {m}")));
    }
    let mut acc: u128 = 1;
    let mut k = m;
    while k > 1 {
        acc = acc.checked_mul(k as u128).ok_or_else(|| MathError::Overflow(format!("{m}!!")))?;
        k -= 2;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn fd_gradient_examples() {
        let g = fd_gradient(|x| x[0] * x[0], &[3.0], 1e-5).unwrap();
        assert!((g[0] - 6.0).abs() < 1e-6);

        let g = fd_gradient(|_| 4.2, &[1.0, -2.0, 3.0], 1e-5).unwrap();
        assert!(g.iter().all(|v| *v == 0.0));

        let g = fd_gradient(|x| x[0] * x[1], &[2.0, 5.0], 1e-5).unwrap();
        assert!((g[0] - 5.0).abs() < 1e-6 && (g[1] - 2.0).abs() < 1e-6);
    }

    #[test]
    fn fd_gradient_errors() {
        assert!(matches!(fd_gradient(|x| x[0].ln(), &[0.0], 1e-3), Err(MathError::NonFinite(_))));
        assert!(matches!(fd_gradient(|x| x[0], &[0.0], 0.0), Err(MathError::Domain(_))));
    }

    #[test]
    fn double_factorial_values() {
        assert_eq!(double_factorial(-1).unwrap(), 1);
        assert_eq!(double_factorial(1).unwrap(), 1);
        assert_eq!(double_factorial(3).unwrap(), 3);
        assert_eq!(double_factorial(5).unwrap(), 15);
        assert_eq!(double_factorial(7).unwrap(), 105);
        assert!(matches!(double_factorial(4), Err(MathError::Domain(_))));
        assert!(matches!(double_factorial(201), Err(MathError::Overflow(_))));
    }

    #[test]
    fn hessian_of_quadratic_form() {
        let a = Mat::from_rows(&[vec![2.0, -1.0], vec![-1.0, 3.0]]).unwrap();
        let f = |x: &[f64]| 0.5 * dot(x, &a.matvec(x));
        let h = fd_hessian(f, &[0.3, -0.7], 1e-4).unwrap();
        assert!(h.max_abs_diff(&a) < 1e-6);
    }

    proptest! {
        // Cubic polynomials: f = Σ a_i x_i³ + b_i x_i² + c·x_0·x_1.
        #[test]
        fn fd_gradient_matches_cubic(
            coef in proptest::collection::vec(-3.0f64..3.0, 5),
            x in proptest::collection::vec(-2.0f64..2.0, 2),
        ) {
            let f = |x: &[f64]| coef[0] * x[0].powi(3) + coef[1] * x[1].powi(3)
                + coef[2] * x[0] * x[0] + coef[3] * x[1] * x[1] + coef[4] * x[0] * x[1];
            let exact = [
                3.0 * coef[0] * x[0] * x[0] + 2.0 * coef[2] * x[0] + coef[4] * x[1],
                3.0 * coef[1] * x[1] * x[1] + 2.0 * coef[3] * x[1] + coef[4] * x[0],
            ];
            let g = fd_gradient(f, &x, 1e-5).unwrap();
            for (a, b) in g.iter().zip(&exact) {
                prop_assert!((a - b).abs() <= 1e-5 * b.abs().max(1.0));
            }
        }
    }
}
