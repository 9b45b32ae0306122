//! Dense linear algebra and convex-programming kernels.
//!
//! Everything here is a pure function over its inputs. Matrices are
//! `nalgebra::DMatrix<f64>`, which is column-major, so a `D × N` data matrix
//! holds one point per column.

mod lp;
mod qp;

pub use lp::{solve_lp, LpProblem, LpSolution, LpStatus, LpTolerances};
pub use qp::{least_norm_point, min_norm_on_optimal_face};

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{invalid, Result};

/// Default relative singular-value threshold used for rank decisions.
pub const DEFAULT_RANK_TOL: f64 = 1e-9;

pub(crate) fn ensure_finite(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(invalid(format!("{what} contains non-finite entries")))
    }
}

/// Number of singular values larger than `tol` times the largest one.
pub fn rank_with_tol(m: &DMatrix<f64>, tol: f64) -> Result<usize> {
    if !(tol > 0.0) {
        return Err(invalid("rank tolerance must be positive"));
    }
    ensure_finite(m, "matrix")?;
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok(0);
    }
    let sv = m.clone().singular_values();
    let largest = sv.iter().cloned().fold(0.0_f64, f64::max);
    if largest == 0.0 {
        return Ok(0);
    }
    Ok(sv.iter().filter(|&&s| s > tol * largest).count())
}

/// Elementwise `sign(v) * max(|v| - tau, 0)`.
pub fn soft_threshold(v: &DVector<f64>, tau: f64) -> Result<DVector<f64>> {
    if !(tau >= 0.0) {
        return Err(invalid(format!("threshold must be nonnegative, got {tau}")));
    }
    Ok(v.map(|x| shrink(x, tau)))
}

#[inline]
pub(crate) fn shrink(x: f64, tau: f64) -> f64 {
    if x > tau {
        x - tau
    } else if x < -tau {
        x + tau
    } else {
        0.0
    }
}

/// Eigendecomposition of a symmetric matrix with eigenvalues sorted
/// ascending. Column `i` of the returned matrix pairs with eigenvalue `i`.
pub fn symmetric_eig(m: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    if m.nrows() != m.ncols() {
        return Err(invalid("symmetric_eig needs a square matrix"));
    }
    ensure_finite(m, "matrix")?;
    let n = m.nrows();
    if n == 0 {
        return Ok((DVector::zeros(0), DMatrix::zeros(0, 0)));
    }
    let scale = m.amax().max(f64::MIN_POSITIVE);
    let asym = (m - m.transpose()).amax();
    if asym > 1e-9 * scale {
        return Err(invalid(format!("matrix is not symmetric (max |m - mᵀ| = {asym:e})")));
    }
    // Feed the exactly symmetrised matrix to the solver.
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok((values, vectors))
}

/// Orthonormal basis (as columns) of the column span of `m`, keeping singular
/// directions above `tol` relative to the largest singular value.
pub fn orthonormal_basis(m: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let rows = m.nrows();
    if m.ncols() == 0 || rows == 0 {
        return DMatrix::zeros(rows, 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("svd computed with u");
    let largest = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    if largest == 0.0 {
        return DMatrix::zeros(rows, 0);
    }
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > tol * largest)
        .collect();
    let mut basis = DMatrix::zeros(rows, keep.len());
    for (k, &i) in keep.iter().enumerate() {
        basis.set_column(k, &u.column(i));
    }
    basis
}

/// Columns of `m` at `idx`, in order.
pub fn select_columns(m: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(m.nrows(), idx.len());
    for (k, &i) in idx.iter().enumerate() {
        out.set_column(k, &m.column(i));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;
    use proptest::prelude::*;

    #[test]
    fn rank_of_identity_and_zero() {
        assert_eq!(rank_with_tol(&DMatrix::identity(3, 3), 1e-9).unwrap(), 3);
        assert_eq!(rank_with_tol(&DMatrix::zeros(3, 4), 1e-9).unwrap(), 0);
    }

    #[test]
    fn rank_of_collinear_differences() {
        // First line of the two-lines-in-R³ toy, minus its first column.
        let pts = dmatrix![-2.0, -1.0, 0.0, 1.0, 2.0;
                           1.0, 1.0, 1.0, 1.0, 1.0;
                           1.0, 1.0, 1.0, 1.0, 1.0];
        let mut diff = DMatrix::zeros(3, 4);
        for k in 0..4 {
            diff.set_column(k, &(pts.column(k + 1) - pts.column(0)));
        }
        assert_eq!(rank_with_tol(&diff, 1e-9).unwrap(), 1);
    }

    #[test]
    fn rank_rejects_nan() {
        let m = dmatrix![1.0, f64::NAN];
        assert!(rank_with_tol(&m, 1e-9).is_err());
    }

    #[test]
    fn soft_threshold_examples() {
        let v = DVector::from_vec(vec![2.0, -0.5, 0.1]);
        assert_eq!(soft_threshold(&v, 0.5).unwrap().as_slice(), &[1.5, 0.0, 0.0]);
        assert_eq!(soft_threshold(&v, 0.0).unwrap(), v);
        let w = DVector::from_vec(vec![1.0, -1.0]);
        assert_eq!(soft_threshold(&w, 2.0).unwrap().as_slice(), &[0.0, 0.0]);
        assert!(soft_threshold(&w, -1.0).is_err());
    }

    #[test]
    fn eig_examples() {
        let (vals, _) = symmetric_eig(&DMatrix::identity(2, 2)).unwrap();
        assert_eq!(vals.as_slice(), &[1.0, 1.0]);

        let (vals, vecs) = symmetric_eig(&dmatrix![3.0, 0.0; 0.0, 1.0]).unwrap();
        assert_eq!(vals.as_slice(), &[1.0, 3.0]);
        assert!((vecs[(1, 0)].abs() - 1.0).abs() < 1e-12);
        assert!((vecs[(0, 1)].abs() - 1.0).abs() < 1e-12);

        // Laplacian of two disjoint edges: eigenvalue 0 twice.
        let lap = dmatrix![1.0, -1.0, 0.0, 0.0;
                           -1.0, 1.0, 0.0, 0.0;
                           0.0, 0.0, 1.0, -1.0;
                           0.0, 0.0, -1.0, 1.0];
        let (vals, _) = symmetric_eig(&lap).unwrap();
        assert!(vals[0].abs() < 1e-12 && vals[1].abs() < 1e-12 && vals[2] > 0.5);

        assert!(symmetric_eig(&dmatrix![1.0, 2.0; 0.0, 1.0]).is_err());
    }

    proptest! {
        #[test]
        fn soft_threshold_is_odd_and_lipschitz(
            a in proptest::collection::vec(-10.0..10.0f64, 1..20),
            shift in proptest::collection::vec(-3.0..3.0f64, 20),
            tau in 0.0..5.0f64,
        ) {
            let va = DVector::from_vec(a.clone());
            let vb = DVector::from_iterator(a.len(), a.iter().zip(&shift).map(|(x, s)| x + s));
            let sa = soft_threshold(&va, tau).unwrap();
            let sb = soft_threshold(&vb, tau).unwrap();
            prop_assert!((&sa - &sb).norm() <= (&va - &vb).norm() + 1e-12);
            let neg = soft_threshold(&(-&va), tau).unwrap();
            prop_assert!((neg + sa).amax() == 0.0);
        }
    }
}
