//! Dense two-phase simplex.
//!
//! Problems are stated in a general form
//!
//! ```text
//! min  cᵀx
//! s.t. A_eq x  = b_eq
//!      A_ub x <= b_ub
//!      x >= lb          (lb may be -inf)
//! ```
//!
//! and converted internally to standard form (shifted or split variables plus
//! slacks). The pivoting rule is Dantzig's largest reduced cost, switching
//! permanently to Bland's rule once a run of degenerate pivots is detected.
//! After the final basis is found the basic solution and the duals are
//! recomputed from the original data with an LU solve, which removes most of
//! the round-off accumulated in the tableau.

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};

const PIVOT_TOL: f64 = 1e-9;
const DEGENERATE_RUN: usize = 50;

/// Linear program in general form. Build with [`LpProblem::new`] and the
/// `with_*` methods.
#[derive(Debug, Clone)]
pub struct LpProblem {
    pub objective: DVector<f64>,
    pub eq_matrix: DMatrix<f64>,
    pub eq_rhs: DVector<f64>,
    pub ub_matrix: DMatrix<f64>,
    pub ub_rhs: DVector<f64>,
    /// Per-variable lower bound; `f64::NEG_INFINITY` marks a free variable.
    pub lower_bounds: DVector<f64>,
}

impl LpProblem {
    /// `min cᵀx` over `x >= 0` with no constraints yet.
    pub fn new(objective: DVector<f64>) -> Self {
        let n = objective.len();
        Self {
            objective,
            eq_matrix: DMatrix::zeros(0, n),
            eq_rhs: DVector::zeros(0),
            ub_matrix: DMatrix::zeros(0, n),
            ub_rhs: DVector::zeros(0),
            lower_bounds: DVector::zeros(n),
        }
    }

    pub fn with_equalities(mut self, a: DMatrix<f64>, b: DVector<f64>) -> Self {
        self.eq_matrix = a;
        self.eq_rhs = b;
        self
    }

    pub fn with_inequalities(mut self, a: DMatrix<f64>, b: DVector<f64>) -> Self {
        self.ub_matrix = a;
        self.ub_rhs = b;
        self
    }

    pub fn with_lower_bounds(mut self, lb: DVector<f64>) -> Self {
        self.lower_bounds = lb;
        self
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if self.eq_matrix.ncols() != n || self.ub_matrix.ncols() != n || self.lower_bounds.len() != n {
            return Err(invalid("LP column counts disagree with the objective length"));
        }
        if self.eq_matrix.nrows() != self.eq_rhs.len() || self.ub_matrix.nrows() != self.ub_rhs.len() {
            return Err(invalid("LP row counts disagree with right-hand sides"));
        }
        let finite = |v: &f64| v.is_finite();
        if !self.objective.iter().all(finite)
            || !self.eq_matrix.iter().all(finite)
            || !self.ub_matrix.iter().all(finite)
            || !self.eq_rhs.iter().all(finite)
            || !self.ub_rhs.iter().all(finite)
        {
            return Err(invalid("LP data must be finite"));
        }
        if self.lower_bounds.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
            return Err(invalid("lower bounds must be finite or -inf"));
        }
        Ok(())
    }

    /// Whether `x` satisfies every constraint to within `tol` (scaled by the
    /// magnitude of the right-hand side).
    pub fn is_feasible(&self, x: &DVector<f64>, tol: f64) -> bool {
        let eq_ok = (&self.eq_matrix * x - &self.eq_rhs)
            .iter()
            .zip(self.eq_rhs.iter())
            .all(|(r, b)| r.abs() <= tol * (1.0 + b.abs()));
        let ub_ok = (&self.ub_matrix * x - &self.ub_rhs)
            .iter()
            .zip(self.ub_rhs.iter())
            .all(|(r, b)| *r <= tol * (1.0 + b.abs()));
        let lb_ok = x.iter().zip(self.lower_bounds.iter()).all(|(v, lb)| *v >= lb - tol * (1.0 + lb.abs().min(1e300)));
        eq_ok && ub_ok && lb_ok
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: DVector<f64>,
    pub objective: f64,
    /// Multipliers `π` of the equality rows, with `Aᵀπ <= c` on the
    /// reduced-cost side (standard LP duality sign).
    pub eq_duals: DVector<f64>,
    /// Multipliers of the inequality rows (nonpositive at optimality).
    pub ub_duals: DVector<f64>,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct LpTolerances {
    pub feas: f64,
    pub opt: f64,
}

impl Default for LpTolerances {
    fn default() -> Self {
        Self { feas: 1e-8, opt: 1e-8 }
    }
}

#[derive(Debug, Clone, Copy)]
enum VarMap {
    Shifted { col: usize, lb: f64 },
    Split { pos: usize, neg: usize },
}

struct StandardForm {
    a: DMatrix<f64>,
    b: DVector<f64>,
    c: DVector<f64>,
    map: Vec<VarMap>,
    m_eq: usize,
}

impl StandardForm {
    fn build(p: &LpProblem) -> Self {
        let n = p.num_vars();
        let m_eq = p.eq_matrix.nrows();
        let m_ub = p.ub_matrix.nrows();
        let mut map = Vec::with_capacity(n);
        let mut ncols = 0;
        for i in 0..n {
            let lb = p.lower_bounds[i];
            if lb == f64::NEG_INFINITY {
                map.push(VarMap::Split { pos: ncols, neg: ncols + 1 });
                ncols += 2;
            } else {
                map.push(VarMap::Shifted { col: ncols, lb });
                ncols += 1;
            }
        }
        let n_std = ncols + m_ub;
        let m = m_eq + m_ub;
        let mut a = DMatrix::zeros(m, n_std);
        let mut b = DVector::zeros(m);
        let mut c = DVector::zeros(n_std);
        for r in 0..m_eq {
            b[r] = p.eq_rhs[r];
        }
        for r in 0..m_ub {
            b[m_eq + r] = p.ub_rhs[r];
            a[(m_eq + r, ncols + r)] = 1.0;
        }
        for (i, vm) in map.iter().enumerate() {
            match *vm {
                VarMap::Shifted { col, lb } => {
                    c[col] = p.objective[i];
                    for r in 0..m_eq {
                        a[(r, col)] = p.eq_matrix[(r, i)];
                        b[r] -= p.eq_matrix[(r, i)] * lb;
                    }
                    for r in 0..m_ub {
                        a[(m_eq + r, col)] = p.ub_matrix[(r, i)];
                        b[m_eq + r] -= p.ub_matrix[(r, i)] * lb;
                    }
                }
                VarMap::Split { pos, neg } => {
                    c[pos] = p.objective[i];
                    c[neg] = -p.objective[i];
                    for r in 0..m_eq {
                        a[(r, pos)] = p.eq_matrix[(r, i)];
                        a[(r, neg)] = -p.eq_matrix[(r, i)];
                    }
                    for r in 0..m_ub {
                        a[(m_eq + r, pos)] = p.ub_matrix[(r, i)];
                        a[(m_eq + r, neg)] = -p.ub_matrix[(r, i)];
                    }
                }
            }
        }
        Self { a, b, c, map, m_eq }
    }

    fn recover(&self, xs: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.map.len(),
            self.map.iter().map(|vm| match *vm {
                VarMap::Shifted { col, lb } => lb + xs[col],
                VarMap::Split { pos, neg } => xs[pos] - xs[neg],
            }),
        )
    }
}

/// Row-major dense tableau. The last column is the right-hand side; the
/// objective row holds reduced costs with `-z` in its last slot.
struct Tableau {
    rows: Vec<Vec<f64>>,
    obj: Vec<f64>,
    basis: Vec<usize>,
    /// Original constraint row index for each tableau row.
    origin: Vec<usize>,
    width: usize,
}

enum PhaseOutcome {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        self.rows[i][self.width - 1]
    }

    fn pivot(&mut self, r: usize, e: usize) {
        let piv = self.rows[r][e];
        for v in self.rows[r].iter_mut() {
            *v /= piv;
        }
        let prow = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[e];
            if f != 0.0 {
                for (v, p) in row.iter_mut().zip(&prow) {
                    *v -= f * p;
                }
                row[e] = 0.0;
            }
        }
        let f = self.obj[e];
        if f != 0.0 {
            for (v, p) in self.obj.iter_mut().zip(&prow) {
                *v -= f * p;
            }
            self.obj[e] = 0.0;
        }
        self.basis[r] = e;
    }

    fn run(&mut self, allowed: usize, opt_tol: f64, iters: &mut usize, max_iters: usize) -> Result<PhaseOutcome> {
        let mut bland = false;
        let mut degenerate = 0usize;
        loop {
            if *iters >= max_iters {
                return Err(Error::SolverFailure(format!("simplex iteration limit {max_iters} reached")));
            }
            let entering = if bland {
                (0..allowed).find(|&j| self.obj[j] < -opt_tol)
            } else {
                let mut best = None;
                let mut best_val = -opt_tol;
                for j in 0..allowed {
                    if self.obj[j] < best_val {
                        best_val = self.obj[j];
                        best = Some(j);
                    }
                }
                best
            };
            let Some(e) = entering else {
                return Ok(PhaseOutcome::Optimal);
            };

            let mut theta = f64::INFINITY;
            for i in 0..self.rows.len() {
                let a = self.rows[i][e];
                if a > PIVOT_TOL {
                    theta = theta.min(self.rhs(i).max(0.0) / a);
                }
            }
            if !theta.is_finite() {
                return Ok(PhaseOutcome::Unbounded);
            }
            let slack = 1e-12 * (1.0 + theta);
            let mut leave: Option<usize> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][e];
                if a <= PIVOT_TOL || self.rhs(i).max(0.0) / a > theta + slack {
                    continue;
                }
                leave = match leave {
                    None => Some(i),
                    Some(k) if bland && self.basis[i] < self.basis[k] => Some(i),
                    Some(k) if !bland && a > self.rows[k][e] => Some(i),
                    keep => keep,
                };
            }
            let r = leave.expect("ratio test found a finite minimum");
            if theta <= 1e-12 {
                degenerate += 1;
                if degenerate > DEGENERATE_RUN {
                    bland = true;
                }
            } else {
                degenerate = 0;
            }
            self.pivot(r, e);
            *iters += 1;
        }
    }
}

/// Solve `p`. Infeasibility and unboundedness are reported through
/// [`LpStatus`]; `Err` is reserved for malformed input and numerical failure.
pub fn solve_lp(p: &LpProblem, tol: &LpTolerances) -> Result<LpSolution> {
    p.validate()?;
    let sf = StandardForm::build(p);
    let m = sf.a.nrows();
    let n_std = sf.a.ncols();
    let width = n_std + m + 1;
    let max_iters = 20_000 + 50 * (m + n_std);

    // Phase 1 with one artificial per row.
    let mut rows = Vec::with_capacity(m);
    for i in 0..m {
        let sign = if sf.b[i] < 0.0 { -1.0 } else { 1.0 };
        let mut row = vec![0.0; width];
        for j in 0..n_std {
            row[j] = sign * sf.a[(i, j)];
        }
        row[n_std + i] = 1.0;
        row[width - 1] = sign * sf.b[i];
        rows.push(row);
    }
    let mut obj = vec![0.0; width];
    for row in &rows {
        for j in 0..n_std {
            obj[j] -= row[j];
        }
        obj[width - 1] -= row[width - 1];
    }
    let mut tab = Tableau {
        rows,
        obj,
        basis: (n_std..n_std + m).collect(),
        origin: (0..m).collect(),
        width,
    };
    let mut iters = 0usize;
    tab.run(n_std, tol.opt, &mut iters, max_iters)?;

    let b_scale = 1.0 + sf.b.amax();
    let infeasibility = -tab.obj[width - 1];
    if infeasibility > tol.feas * b_scale {
        return Ok(LpSolution {
            status: LpStatus::Infeasible,
            x: DVector::from_element(p.num_vars(), f64::NAN),
            objective: f64::NAN,
            eq_duals: DVector::zeros(p.eq_matrix.nrows()),
            ub_duals: DVector::zeros(p.ub_matrix.nrows()),
            iterations: iters,
        });
    }

    // Drive artificials out of the basis, dropping redundant rows.
    let mut i = 0;
    while i < tab.rows.len() {
        if tab.basis[i] >= n_std {
            let mut best: Option<usize> = None;
            let mut best_abs = PIVOT_TOL;
            for j in 0..n_std {
                let a = tab.rows[i][j].abs();
                if a > best_abs {
                    best_abs = a;
                    best = Some(j);
                }
            }
            match best {
                Some(j) => tab.pivot(i, j),
                None => {
                    tab.rows.remove(i);
                    tab.basis.remove(i);
                    tab.origin.remove(i);
                    continue;
                }
            }
        }
        i += 1;
    }

    // Phase 2.
    let mut obj = vec![0.0; width];
    obj[..n_std].copy_from_slice(sf.c.as_slice());
    for (r, row) in tab.rows.iter().enumerate() {
        let cb = sf.c[tab.basis[r]];
        if cb != 0.0 {
            for (v, a) in obj.iter_mut().zip(row) {
                *v -= cb * a;
            }
        }
    }
    tab.obj = obj;
    let outcome = tab.run(n_std, tol.opt, &mut iters, max_iters)?;

    let mut xs = DVector::zeros(n_std);
    for (r, &bcol) in tab.basis.iter().enumerate() {
        xs[bcol] = tab.rhs(r).max(0.0);
    }

    if let PhaseOutcome::Unbounded = outcome {
        let x = sf.recover(&xs);
        return Ok(LpSolution {
            status: LpStatus::Unbounded,
            objective: f64::NEG_INFINITY,
            x,
            eq_duals: DVector::zeros(p.eq_matrix.nrows()),
            ub_duals: DVector::zeros(p.ub_matrix.nrows()),
            iterations: iters,
        });
    }

    // Refine basic values and duals against the untouched standard form.
    let k = tab.rows.len();
    let mut bmat = DMatrix::zeros(k, k);
    let mut brhs = DVector::zeros(k);
    let mut cb = DVector::zeros(k);
    for r in 0..k {
        brhs[r] = sf.b[tab.origin[r]];
        cb[r] = sf.c[tab.basis[r]];
        for (col, &bcol) in tab.basis.iter().enumerate() {
            bmat[(r, col)] = sf.a[(tab.origin[r], bcol)];
        }
    }
    let mut duals_std = DVector::zeros(m);
    if k > 0 {
        let lu = bmat.clone().lu();
        if let Some(xb) = lu.solve(&brhs) {
            if xb.iter().all(|v| *v >= -tol.feas * b_scale) {
                for (r, &bcol) in tab.basis.iter().enumerate() {
                    xs[bcol] = xb[r].max(0.0);
                }
            }
        }
        if let Some(y) = bmat.transpose().lu().solve(&cb) {
            for r in 0..k {
                duals_std[tab.origin[r]] = y[r];
            }
        }
    }

    let residual = (&sf.a * &xs - &sf.b).amax();
    if residual > tol.feas.sqrt() * b_scale {
        return Err(Error::SolverFailure(format!(
            "basis is numerically singular: equality residual {residual:e}"
        )));
    }

    let x = sf.recover(&xs);
    let objective = p.objective.dot(&x);
    let eq_duals = DVector::from_iterator(sf.m_eq, (0..sf.m_eq).map(|r| duals_std[r]));
    let ub_duals = DVector::from_iterator(m - sf.m_eq, (sf.m_eq..m).map(|r| duals_std[r]));
    Ok(LpSolution {
        status: LpStatus::Optimal,
        x,
        objective,
        eq_duals,
        ub_duals,
        iterations: iters,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector};
    use proptest::prelude::*;

    #[test]
    fn single_variable_equality() {
        let p = LpProblem::new(dvector![1.0]).with_equalities(dmatrix![1.0], dvector![1.0]);
        let s = solve_lp(&p, &LpTolerances::default()).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.x[0] - 1.0).abs() < 1e-12);
        assert!((s.objective - 1.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_through_upper_bound() {
        // x = 1 and x <= 0 with x free.
        let p = LpProblem::new(dvector![0.0])
            .with_equalities(dmatrix![1.0], dvector![1.0])
            .with_inequalities(dmatrix![1.0], dvector![0.0])
            .with_lower_bounds(dvector![f64::NEG_INFINITY]);
        let s = solve_lp(&p, &LpTolerances::default()).unwrap();
        assert_eq!(s.status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_is_reported() {
        let p = LpProblem::new(dvector![-1.0, 0.0]).with_equalities(dmatrix![1.0, -1.0], dvector![0.0]);
        let s = solve_lp(&p, &LpTolerances::default()).unwrap();
        assert_eq!(s.status, LpStatus::Unbounded);
    }

    #[test]
    fn duals_satisfy_strong_duality() {
        // min x1 + 2 x2 + 3 x3, x1 + x2 + x3 = 1, x1 - x3 = 0.
        let p = LpProblem::new(dvector![1.0, 2.0, 3.0])
            .with_equalities(dmatrix![1.0, 1.0, 1.0; 1.0, 0.0, -1.0], dvector![1.0, 0.0]);
        let s = solve_lp(&p, &LpTolerances::default()).unwrap();
        assert!((s.objective - 2.0).abs() < 1e-10);
        assert!((s.eq_duals.dot(&p.eq_rhs) - s.objective).abs() < 1e-10);
        let reduced = &p.objective - p.eq_matrix.transpose() * &s.eq_duals;
        assert!(reduced.iter().all(|r| *r >= -1e-10));
    }

    #[test]
    fn redundant_rows_are_tolerated() {
        let p = LpProblem::new(dvector![1.0, 1.0])
            .with_equalities(dmatrix![1.0, 1.0; 2.0, 2.0], dvector![1.0, 2.0]);
        let s = solve_lp(&p, &LpTolerances::default()).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_cycling_example() {
        // Beale's classic cycling instance; Bland fallback must terminate.
        let p = LpProblem::new(dvector![-0.75, 150.0, -0.02, 6.0]).with_inequalities(
            dmatrix![0.25, -60.0, -0.04, 9.0;
                     0.5, -90.0, -0.02, 3.0;
                     0.0, 0.0, 1.0, 0.0],
            dvector![0.0, 0.0, 1.0],
        );
        let s = solve_lp(&p, &LpTolerances::default()).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective + 0.05).abs() < 1e-9);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        /// Random feasible problems: the LP optimum is no worse than any
        /// sampled feasible point.
        #[test]
        fn optimum_beats_feasible_samples(
            seed_a in proptest::collection::vec(-1.0..1.0f64, 3 * 6),
            x0 in proptest::collection::vec(0.0..2.0f64, 6),
            cost in proptest::collection::vec(0.1..2.0f64, 6),
            samples in proptest::collection::vec(proptest::collection::vec(0.0..1.0f64, 6), 8),
        ) {
            let a = DMatrix::from_row_slice(3, 6, &seed_a);
            let x0 = DVector::from_vec(x0);
            let b = &a * &x0;
            let p = LpProblem::new(DVector::from_vec(cost)).with_equalities(a.clone(), b.clone());
            let tol = LpTolerances::default();
            let s = solve_lp(&p, &tol).unwrap();
            prop_assert_eq!(s.status, LpStatus::Optimal);
            prop_assert!(p.is_feasible(&s.x, 1e-7));
            prop_assert!(s.objective <= p.objective.dot(&x0) + 1e-8);
            // Random points of the feasible set: move from x0 along null-space
            // directions while staying nonnegative.
            let null = a.clone().svd(false, true).v_t.unwrap();
            for w in samples {
                let mut dir = DVector::from_vec(w).add_scalar(-0.5);
                for r in 0..null.nrows().min(3) {
                    let row = null.row(r).transpose();
                    dir -= &row * row.dot(&dir);
                }
                let mut t = 1.0;
                while (&x0 + &dir * t).iter().any(|v| *v < 0.0) && t > 1e-6 {
                    t *= 0.5;
                }
                let y = &x0 + &dir * t;
                if p.is_feasible(&y, 1e-9) {
                    prop_assert!(s.objective <= p.objective.dot(&y) + 1e-8);
                }
            }
        }
    }
}
