//! Small dense solves for the d×d normal equations.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Condition estimates above this are treated as singular.
pub const MAX_CONDITION: f64 = 1e12;

/// Solves `a x = b` for symmetric positive semidefinite `a` through an SVD.
/// Returns the solution and the 2-norm condition estimate.
pub fn solve_normal(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<(DVector<f64>, f64)> {
    if a.nrows() == 1 {
        let a00 = a[(0, 0)];
        if !(a00 > 0.0 && a00.is_finite()) {
            return Err(Error::Singular {
                condition: f64::INFINITY,
            });
        }
        return Ok((DVector::from_element(1, b[0] / a00), 1.0));
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition = if smin > 0.0 {
        smax / smin
    } else {
        f64::INFINITY
    };
    if !(condition <= MAX_CONDITION) || !smax.is_finite() || smax == 0.0 {
        return Err(Error::Singular { condition });
    }
    let x = svd
        .solve(b, 0.0)
        .map_err(|_| Error::Singular { condition })?;
    Ok((x, condition))
}

/// Inverse of a symmetric positive definite matrix, with the same singularity
/// rule as [`solve_normal`].
pub fn inverse_spd(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        let mut e = DVector::zeros(n);
        e[j] = 1.0;
        cols.push(solve_normal(a, &e)?.0);
    }
    let inv = DMatrix::from_columns(&cols);
    Ok(symmetrize(&inv))
}

pub fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// Nearest positive semidefinite matrix in Frobenius norm: negative
/// eigenvalues clipped to zero. The flag reports whether clipping happened.
pub fn nearest_psd(a: &DMatrix<f64>) -> (DMatrix<f64>, bool) {
    let sym = symmetrize(a);
    let eig = SymmetricEigen::new(sym.clone());
    if eig.eigenvalues.iter().all(|&l| l >= 0.0) {
        return (sym, false);
    }
    let clipped = eig.eigenvalues.map(|l| l.max(0.0));
    let q = &eig.eigenvectors;
    let out = q * DMatrix::from_diagonal(&clipped) * q.transpose();
    (symmetrize(&out), true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_well_conditioned() {
        let a = DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 3.0]);
        let b = DVector::from_vec(vec![1.0, 2.0]);
        let (x, cond) = solve_normal(&a, &b).unwrap();
        assert!((&a * &x - &b).norm() < 1e-14);
        assert!(cond > 1.0 && cond < 3.0);
    }

    #[test]
    fn rejects_singular() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        let b = DVector::from_vec(vec![1.0, 2.0]);
        assert!(matches!(solve_normal(&a, &b), Err(Error::Singular { .. })));
        let z = DMatrix::zeros(1, 1);
        assert!(solve_normal(&z, &DVector::from_vec(vec![1.0])).is_err());
    }

    #[test]
    fn psd_projection() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let (p, flagged) = nearest_psd(&a);
        assert!(flagged);
        let eig = SymmetricEigen::new(p.clone());
        assert!(eig.eigenvalues.iter().all(|&l| l > -1e-12));
        assert!((p[(0, 0)] - 1.5).abs() < 1e-12 && (p[(0, 1)] - 1.5).abs() < 1e-12);
        let (q, flagged) = nearest_psd(&DMatrix::identity(2, 2));
        assert!(!flagged);
        assert_eq!(q, DMatrix::identity(2, 2));
    }
}
