//! Exact solves by linear programming.

use nalgebra::{DMatrix, DVector};

use super::{check_column, others, scatter, ColumnSolution, Mode};
use crate::error::{invalid, Error, Result};
use crate::model::DataMatrix;
use crate::numerics::{
    min_norm_on_optimal_face, orthonormal_basis, solve_lp, LpProblem, LpStatus, LpTolerances, DEFAULT_RANK_TOL,
};

/// Globally optimal `min ‖c‖₁` for column `j` via the split `c = c⁺ - c⁻`.
pub fn solve_column_oracle(x: &DataMatrix, j: usize, mode: Mode) -> Result<ColumnSolution> {
    solve_split(x, j, mode, false)
}

/// Same problem restricted to `c >= 0`.
pub fn solve_column_oracle_nonnegative(x: &DataMatrix, j: usize, mode: Mode) -> Result<ColumnSolution> {
    solve_split(x, j, mode, true)
}

fn solve_split(x: &DataMatrix, j: usize, mode: Mode, nonneg: bool) -> Result<ColumnSolution> {
    check_column(x, j)?;
    let n = x.len();
    let d = x.ambient_dim();
    let (idx, y) = others(x, j, mode);
    let m = idx.len();
    if m == 0 {
        return Err(Error::NoRepresentation("no other points".into()));
    }
    let affine = mode == Mode::Assc;
    let rows = d + usize::from(affine);
    let nv = if nonneg { m } else { 2 * m };
    let mut a = DMatrix::zeros(rows, nv);
    a.view_mut((0, 0), (d, m)).copy_from(&y);
    if !nonneg {
        a.view_mut((0, m), (d, m)).copy_from(&(-&y));
    }
    let mut rhs = DVector::zeros(rows);
    match mode {
        Mode::Ssc => rhs.copy_from(&x.point(j)),
        Mode::Assc => {
            for k in 0..m {
                a[(d, k)] = 1.0;
                if !nonneg {
                    a[(d, m + k)] = -1.0;
                }
            }
            rhs[d] = 1.0;
        }
    }
    let p = LpProblem::new(DVector::from_element(nv, 1.0)).with_equalities(a.clone(), rhs.clone());
    let s = solve_lp(&p, &LpTolerances::default())?;
    match s.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => {
            return Err(Error::NoRepresentation(format!(
                "point {j} is not in the {} of the others",
                if affine { "affine hull" } else { "span" }
            )))
        }
        LpStatus::Unbounded => return Err(Error::Internal("ℓ1 program reported unbounded".into())),
    }
    let c = if nonneg {
        s.x.clone()
    } else {
        s.x.rows(0, m) - s.x.rows(m, m)
    };
    let primal = (a * &s.x - rhs).amax();
    // Lagrangian multipliers are the negated LP equality duals.
    let w = -s.eq_duals.rows(0, d);
    let nu = if affine { -s.eq_duals[d] } else { 0.0 };
    Ok(ColumnSolution {
        j,
        c: scatter(n, &idx, &c),
        objective: c.iter().map(|v| v.abs()).sum(),
        dual_w: w.as_slice().to_vec(),
        dual_nu: nu,
        iterations: s.iterations,
        converged: true,
        primal_residual: primal,
        dual_residual: 0.0,
    })
}

/// Minimal-norm optimizer `v = U w` of `max wᵀa  s.t. ‖Aᵀw‖∞ <= 1`, where
/// `U` is an orthonormal basis of the span of `subspace_points`,
/// `a = Uᵀx` and `A = Uᵀ subspace_points`.
pub fn compute_dual_point(subspace_points: &DMatrix<f64>, x: &DVector<f64>) -> Result<DVector<f64>> {
    if subspace_points.nrows() != x.len() {
        return Err(invalid("dimension mismatch between points and x"));
    }
    let u = orthonormal_basis(subspace_points, DEFAULT_RANK_TOL);
    let r = u.ncols();
    if r == 0 {
        return Err(invalid("subspace points span only the origin"));
    }
    let a = u.transpose() * x;
    let outside = (x - &u * &a).norm();
    if outside > 1e-8 * (1.0 + x.norm()) {
        return Err(invalid(format!("x is not in the span of the points (distance {outside:e})")));
    }
    let pts = u.transpose() * subspace_points;
    let k = pts.ncols();
    let mut ub = DMatrix::zeros(2 * k, r);
    ub.rows_mut(0, k).copy_from(&pts.transpose());
    ub.rows_mut(k, k).copy_from(&(-pts.transpose()));
    let p = LpProblem::new(-&a)
        .with_inequalities(ub, DVector::from_element(2 * k, 1.0))
        .with_lower_bounds(DVector::from_element(r, f64::NEG_INFINITY));
    let tol = LpTolerances::default();
    let s = solve_lp(&p, &tol)?;
    if s.status != LpStatus::Optimal {
        return Err(Error::SolverFailure(format!("dual program returned {:?}", s.status)));
    }
    let w = min_norm_on_optimal_face(&p, &s, &tol)?;
    Ok(u * w)
}
