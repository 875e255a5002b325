//! Small dense helpers shared by the filter and the simulator.

use nalgebra::{Cholesky, DMatrix, Dyn, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative eigenvalue cutoff used by [`pinv_symmetric`].
pub const PINV_RELATIVE_TOLERANCE: f64 = 1e-12;

/// Covariance health: maximum tolerated `|P - P^T|` entry.
pub const SYMMETRY_TOLERANCE: f64 = 1e-10;

/// Covariance health: minimum tolerated eigenvalue.
pub const PSD_TOLERANCE: f64 = -1e-10;

/// `(P + P^T) / 2`, in place.
pub fn symmetrize(p: &mut DMatrix<f64>) {
    let n = p.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (p[(i, j)] + p[(j, i)]);
            p[(i, j)] = v;
            p[(j, i)] = v;
        }
    }
}

pub fn max_asymmetry(p: &DMatrix<f64>) -> f64 {
    let n = p.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((p[(i, j)] - p[(j, i)]).abs());
        }
    }
    worst
}

pub fn min_eigenvalue(p: &DMatrix<f64>) -> f64 {
    if p.is_empty() {
        return 0.0;
    }
    SymmetricEigen::new(p.clone())
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// True when `p` is symmetric and positive semidefinite within the module
/// tolerances.
pub fn is_healthy_covariance(p: &DMatrix<f64>) -> bool {
    max_asymmetry(p) <= SYMMETRY_TOLERANCE && min_eigenvalue(p) >= PSD_TOLERANCE
}

/// Moore-Penrose inverse of a symmetric matrix via its eigendecomposition.
/// Eigenvalues at or below `tol * max|lambda|` are treated as zero.
pub fn pinv_symmetric(p: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let n = p.nrows();
    let eig = SymmetricEigen::new(p.clone());
    let scale = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let cutoff = tol * scale;
    let mut inv = DMatrix::zeros(n, n);
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda.abs() <= cutoff || lambda == 0.0 {
            continue;
        }
        let v = eig.eigenvectors.column(k);
        inv += (v * v.transpose()) / lambda;
    }
    symmetrize(&mut inv);
    inv
}

/// Cholesky factor of a symmetric positive-definite matrix whose reciprocal
/// condition number (eigenvalue ratio) is at least `min_rcond`.
pub fn spd_cholesky(
    s: &DMatrix<f64>,
    min_rcond: f64,
    what: &str,
) -> Result<Cholesky<f64, Dyn>> {
    let eig = SymmetricEigen::new(s.clone());
    let (lo, hi) = eig
        .eigenvalues
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if !(lo > 0.0) || !(lo / hi >= min_rcond) {
        return Err(Error::Singular(format!(
            "{what} is not safely invertible (eigenvalues in [{lo:e}, {hi:e}])"
        )));
    }
    Cholesky::new(s.clone())
        .ok_or_else(|| Error::Singular(format!("{what} Cholesky factorization failed")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pinv_of_invertible_is_inverse() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]);
        let prod = &a * pinv_symmetric(&a, PINV_RELATIVE_TOLERANCE);
        assert!((prod - DMatrix::identity(2, 2)).amax() < 1e-14);
    }

    #[test]
    fn pinv_of_rank_deficient() {
        // diag(4, 0) -> diag(0.25, 0)
        let a = DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 0.0]);
        let p = pinv_symmetric(&a, PINV_RELATIVE_TOLERANCE);
        assert!((p[(0, 0)] - 0.25).abs() < 1e-15);
        assert_eq!(p[(1, 1)], 0.0);
    }

    #[test]
    fn singular_innovation_covariance_rejected() {
        let s = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(spd_cholesky(&s, 1e-14, "S").is_err());
        assert!(spd_cholesky(&DMatrix::identity(2, 2), 1e-14, "S").is_ok());
    }
}
