//! Least-norm points of polyhedra by a primal active-set method.
//!
//! With the Hessian equal to the identity every subproblem reduces to a
//! least-norm solve on the current working set, so the iteration is short and
//! needs nothing beyond small dense factorizations.

use nalgebra::{DMatrix, DVector};

use super::lp::{LpProblem, LpSolution, LpStatus, LpTolerances};
use crate::error::{invalid, Error, Result};

/// Least-Euclidean-norm point of the optimal face of `p`, starting from the
/// optimal vertex `sol`. The optimal value is pinned as an extra equality.
pub fn min_norm_on_optimal_face(p: &LpProblem, sol: &LpSolution, tol: &LpTolerances) -> Result<DVector<f64>> {
    if sol.status != LpStatus::Optimal {
        return Err(invalid("min-norm refinement needs an optimal LP solution"));
    }
    let n = p.num_vars();
    if sol.x.len() != n {
        return Err(invalid("solution length does not match the problem"));
    }
    let m_eq = p.eq_matrix.nrows();
    let mut eq = DMatrix::zeros(m_eq + 1, n);
    let mut eq_rhs = DVector::zeros(m_eq + 1);
    eq.rows_mut(0, m_eq).copy_from(&p.eq_matrix);
    eq_rhs.rows_mut(0, m_eq).copy_from(&p.eq_rhs);
    eq.row_mut(m_eq).copy_from(&p.objective.transpose());
    eq_rhs[m_eq] = sol.objective;

    let finite_lb: Vec<usize> = (0..n).filter(|&i| p.lower_bounds[i].is_finite()).collect();
    let m_ub = p.ub_matrix.nrows();
    let mut ub = DMatrix::zeros(m_ub + finite_lb.len(), n);
    let mut ub_rhs = DVector::zeros(m_ub + finite_lb.len());
    ub.rows_mut(0, m_ub).copy_from(&p.ub_matrix);
    ub_rhs.rows_mut(0, m_ub).copy_from(&p.ub_rhs);
    for (k, &i) in finite_lb.iter().enumerate() {
        ub[(m_ub + k, i)] = -1.0;
        ub_rhs[m_ub + k] = -p.lower_bounds[i];
    }

    let x = least_norm_point(&eq, &eq_rhs, &ub, &ub_rhs, &sol.x)?;
    let attained = p.objective.dot(&x);
    if (attained - sol.objective).abs() > tol.opt.max(1e-9) * (1.0 + sol.objective.abs()) * 10.0 {
        return Err(Error::Internal(format!(
            "least-norm point left the optimal face: {attained} vs {}",
            sol.objective
        )));
    }
    Ok(x)
}

/// `argmin ‖x‖` subject to `eq x = eq_rhs` and `ub x <= ub_rhs`, starting from
/// a feasible `x0`.
pub fn least_norm_point(
    eq: &DMatrix<f64>,
    eq_rhs: &DVector<f64>,
    ub: &DMatrix<f64>,
    ub_rhs: &DVector<f64>,
    x0: &DVector<f64>,
) -> Result<DVector<f64>> {
    let n = x0.len();
    let scale = 1.0 + x0.amax();
    let feas_tol = 1e-7 * scale;
    let eq_res = (eq * x0 - eq_rhs).amax();
    let ub_res = (ub * x0 - ub_rhs).iter().cloned().fold(0.0, f64::max);
    if eq_res > feas_tol || ub_res > feas_tol {
        return Err(Error::Internal(format!(
            "starting point infeasible (eq {eq_res:e}, ub {ub_res:e})"
        )));
    }

    // Working set: equality rows first, then active inequalities, keeping
    // only linearly independent rows.
    let mut ws = WorkingSet::new(n);
    for r in 0..eq.nrows() {
        ws.try_add(Row::Eq(r), eq.row(r).transpose());
    }
    for r in 0..ub.nrows() {
        let slack = ub_rhs[r] - ub.row(r).dot(&x0.transpose());
        if slack.abs() <= 1e-9 * (1.0 + ub_rhs[r].abs()) {
            ws.try_add(Row::Ub(r), ub.row(r).transpose());
        }
    }

    let mut x = x0.clone();
    let max_iter = 10 * (n + eq.nrows() + ub.nrows()) + 100;
    for _ in 0..max_iter {
        let rhs = DVector::from_iterator(
            ws.rows.len(),
            ws.rows.iter().map(|r| match *r {
                Row::Eq(i) => eq_rhs[i],
                Row::Ub(i) => ub_rhs[i],
            }),
        );
        let target = ws.least_norm(&rhs);
        let step = &target - &x;
        if step.amax() <= 1e-12 * (1.0 + x.amax()) {
            // Stationary on the working set: check inequality multipliers.
            let mult = ws.multipliers(&x);
            let mut worst: Option<(usize, f64)> = None;
            for (k, row) in ws.rows.iter().enumerate() {
                if let Row::Ub(_) = row {
                    if mult[k] < -1e-10 * (1.0 + x.norm()) && worst.is_none_or(|(_, v)| mult[k] < v) {
                        worst = Some((k, mult[k]));
                    }
                }
            }
            match worst {
                None => return Ok(x),
                Some((k, _)) => ws.remove(k),
            }
            continue;
        }
        let step_norm = step.norm();
        let mut skipped: Vec<usize> = Vec::new();
        loop {
            let mut alpha = 1.0;
            let mut blocking = None;
            for r in 0..ub.nrows() {
                if ws.rows.contains(&Row::Ub(r)) || skipped.contains(&r) {
                    continue;
                }
                let g = ub.row(r);
                let gp = g.dot(&step.transpose());
                if gp > 1e-12 * g.norm() * step_norm {
                    let slack = (ub_rhs[r] - g.dot(&x.transpose())).max(0.0);
                    let a = slack / gp;
                    if a < alpha {
                        alpha = a;
                        blocking = Some(r);
                    }
                }
            }
            match blocking {
                // A blocking row dependent on the working set cannot be
                // added; it is redundant for this step.
                Some(r) if !ws.try_add(Row::Ub(r), ub.row(r).transpose()) => skipped.push(r),
                _ => {
                    x += &step * alpha;
                    break;
                }
            }
        }
    }
    Err(Error::Internal("active-set iteration limit reached".into()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Row {
    Eq(usize),
    Ub(usize),
}

struct WorkingSet {
    n: usize,
    rows: Vec<Row>,
    normals: Vec<DVector<f64>>,
}

impl WorkingSet {
    fn new(n: usize) -> Self {
        Self { n, rows: Vec::new(), normals: Vec::new() }
    }

    fn matrix(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.normals.len(), self.n);
        for (k, g) in self.normals.iter().enumerate() {
            a.row_mut(k).copy_from(&g.transpose());
        }
        a
    }

    fn try_add(&mut self, row: Row, normal: DVector<f64>) -> bool {
        let norm = normal.norm();
        if norm == 0.0 {
            return false;
        }
        if !self.normals.is_empty() {
            // Residual of projecting the new normal onto the current rows.
            let (q, _) = self.factor();
            let resid = &normal - &q * (q.transpose() * &normal);
            if resid.norm() <= 1e-9 * norm {
                return false;
            }
        }
        self.rows.push(row);
        self.normals.push(normal);
        true
    }

    fn remove(&mut self, k: usize) {
        self.rows.remove(k);
        self.normals.remove(k);
    }

    /// Thin QR of `Aᵀ`. Orthogonal factors stay accurate when rows are
    /// nearly parallel, where normal equations do not.
    fn factor(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        let qr = self.matrix().transpose().qr();
        (qr.q(), qr.r())
    }

    fn least_norm(&self, rhs: &DVector<f64>) -> DVector<f64> {
        if self.normals.is_empty() {
            return DVector::zeros(self.n);
        }
        let (q, r) = self.factor();
        let y = r.transpose().solve_lower_triangular(rhs).unwrap_or_else(|| DVector::zeros(rhs.len()));
        q * y
    }

    /// Multipliers `μ` with `x + Aᵀμ = 0` (least squares).
    fn multipliers(&self, x: &DVector<f64>) -> DVector<f64> {
        let (q, r) = self.factor();
        let k = self.normals.len();
        -r.solve_upper_triangular(&(q.transpose() * x)).unwrap_or_else(|| DVector::zeros(k))
    }
}
