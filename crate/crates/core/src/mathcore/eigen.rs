//! Cyclic Jacobi eigensolver for symmetric matrices.

use super::{Mat, MathError, SYMMETRY_TOL};

/// Eigen-decomposition of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymEigen {
    /// Eigenvalues sorted in descending order.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns, in the order of `values`.
    pub vectors: Mat,
}

impl SymEigen {
    pub fn max(&self) -> f64 {
        self.values[0]
    }

    pub fn min(&self) -> f64 {
        *self.values.last().expect("non-empty spectrum")
    }

    pub fn vector(&self, k: usize) -> Vec<f64> {
        self.vectors.column(k)
    }
}

const MAX_SWEEPS: usize = 100;

/// Diagonalizes a symmetric matrix with cyclic Jacobi rotations.
pub fn sym_eig(m: &Mat) -> Result<SymEigen, MathError> {
    if !m.is_square() {
        return Err(MathError::Shape(format!("sym_eig needs a square matrix, got {}x{}", m.rows(), m.cols())));
    }
    let asym = m.asymmetry();
    if asym > SYMMETRY_TOL {
        return Err(MathError::Shape(format!("sym_eig needs a symmetric matrix (asymmetry {asym:.3e})")));
    }
    let n = m.rows();
    let mut a = m.symmetric_part();
    let mut v = Mat::identity(n);

    let scale = a.frobenius_norm().max(f64::MIN_POSITIVE);
    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[(p, q)] * a[(p, q)];
            }
        }
        if off.sqrt() <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                rotate(&mut a, &mut v, p, q, c, s);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = Mat::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(SymEigen { values, vectors })
}

fn rotate(a: &mut Mat, v: &mut Mat, p: usize, q: usize, c: f64, s: f64) {
    let n = a.rows();
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = c * akp - s * akq;
        a[(k, q)] = s * akp + c * akq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = c * apk - s * aqk;
        a[(q, k)] = s * apk + c * aqk;
    }
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}

/// Largest eigenvalue of the symmetric part of a square matrix.
pub fn lambda_max_sym(m: &Mat) -> Result<f64, MathError> {
    if !m.is_square() {
        return Err(MathError::Shape("lambda_max_sym needs a square matrix".into()));
    }
    Ok(sym_eig(&m.symmetric_part())?.max())
}
