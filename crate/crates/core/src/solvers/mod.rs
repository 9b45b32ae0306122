//! Sparse self-representation of each point by the others.
//!
//! Two formulations are supported. `Ssc` represents `x_j` as a linear
//! combination `X c` with `c_j = 0`; `Assc` adds the affine constraint
//! `1ᵀc = 1`. The affine problem is translation invariant, so it is
//! solved in translated coordinates `Y = X_{-j} - x_j 1ᵀ` where the data
//! constraint becomes `Y c = 0`.
//!
//! Dual variables follow the Lagrangian
//! `‖c‖₁ + wᵀ(Y c - b) + ν (1ᵀc - 1)`, so at an optimum `ν = -‖c‖₁`.

mod admm;
mod oracle;

pub use admm::solve_column_admm;
pub use oracle::{compute_dual_point, solve_column_oracle, solve_column_oracle_nonnegative};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::DataMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    Ssc,
    Assc,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Variant {
    Exact,
    /// Data term relaxed to `λ/2 ‖x_j - X c‖²`.
    Noisy { lambda: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub mode: Mode,
    pub variant: Variant,
    pub mu0: f64,
    /// Floor for the penalty when the dual residual dominates.
    pub mu_min: f64,
    pub rho: f64,
    pub mu_max: f64,
    pub max_iters: usize,
    pub primal_tol: f64,
    pub dual_tol: f64,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Assc,
            variant: Variant::Exact,
            mu0: 10.0,
            mu_min: 0.1,
            rho: 1.05,
            mu_max: 1e8,
            max_iters: 10_000,
            primal_tol: 1e-7,
            dual_tol: 1e-7,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn new(mode: Mode, variant: Variant) -> Self {
        Self { mode, variant, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu0 > 0.0 && self.mu0.is_finite()) {
            return Err(invalid("mu0 must be positive"));
        }
        if !(self.mu_min > 0.0 && self.mu_min <= self.mu0) {
            return Err(invalid("mu_min must be positive and at most mu0"));
        }
        if !(self.rho > 1.0 && self.rho.is_finite()) {
            return Err(invalid("rho must exceed 1"));
        }
        if !(self.mu_max >= self.mu0) {
            return Err(invalid("mu_max must be at least mu0"));
        }
        if !(self.primal_tol > 0.0 && self.dual_tol > 0.0) {
            return Err(invalid("tolerances must be positive"));
        }
        if self.max_iters == 0 {
            return Err(invalid("max_iters must be positive"));
        }
        if let Variant::Noisy { lambda } = self.variant {
            if !(lambda > 0.0 && lambda.is_finite()) {
                return Err(invalid(format!("lambda must be positive, got {lambda}")));
            }
        }
        Ok(())
    }
}

/// Representation of one column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSolution {
    pub j: usize,
    /// Length `N`, with `c[j] == 0`.
    pub c: Vec<f64>,
    pub objective: f64,
    pub dual_w: Vec<f64>,
    pub dual_nu: f64,
    pub iterations: usize,
    pub converged: bool,
    pub primal_residual: f64,
    pub dual_residual: f64,
}

impl ColumnSolution {
    pub fn coefficients(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.c)
    }

    pub fn l1_norm(&self) -> f64 {
        self.c.iter().map(|v| v.abs()).sum()
    }

    pub fn stats(&self) -> ColumnStats {
        ColumnStats {
            j: self.j,
            objective: self.objective,
            dual_nu: self.dual_nu,
            iterations: self.iterations,
            converged: self.converged,
            primal_residual: self.primal_residual,
            dual_residual: self.dual_residual,
        }
    }
}

/// Per-column solver diagnostics without the coefficient vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub j: usize,
    pub objective: f64,
    pub dual_nu: f64,
    pub iterations: usize,
    pub converged: bool,
    pub primal_residual: f64,
    pub dual_residual: f64,
}

/// `C = [c_1, …, c_N]` with one representation per column.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientMatrix {
    pub c: DMatrix<f64>,
    pub stats: Vec<ColumnStats>,
}

impl CoefficientMatrix {
    pub fn from_solutions(solutions: &[ColumnSolution]) -> Result<Self> {
        let n = solutions.len();
        let mut c = DMatrix::zeros(n, n);
        for (k, s) in solutions.iter().enumerate() {
            if s.j != k || s.c.len() != n {
                return Err(invalid("column solutions must be ordered and of length N"));
            }
            c.set_column(k, &DVector::from_column_slice(&s.c));
        }
        Ok(Self { c, stats: solutions.iter().map(|s| s.stats()).collect() })
    }

    pub fn len(&self) -> usize {
        self.c.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.c.ncols() == 0
    }

    pub fn column(&self, j: usize) -> DVector<f64> {
        self.c.column(j).into_owned()
    }

    /// Indices of columns whose solve did not converge.
    pub fn nonconverged(&self) -> Vec<usize> {
        self.stats.iter().filter(|s| !s.converged).map(|s| s.j).collect()
    }
}

/// Solve every column with ADMM, in parallel.
pub fn build_coefficient_matrix(x: &DataMatrix, cfg: &SolverConfig) -> Result<CoefficientMatrix> {
    cfg.validate()?;
    if x.len() < 2 {
        return Err(invalid("need at least two points"));
    }
    let solutions: Vec<ColumnSolution> = (0..x.len())
        .into_par_iter()
        .map(|j| solve_column_admm(x, j, cfg))
        .collect::<Result<_>>()?;
    CoefficientMatrix::from_solutions(&solutions)
}

/// `α / min_j max_{i≠j} x_iᵀx_j`.
pub fn compute_lambda(x: &DataMatrix, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(invalid(format!("alpha must be positive, got {alpha}")));
    }
    let n = x.len();
    if n < 2 {
        return Err(invalid("need at least two points"));
    }
    let g = x.points().transpose() * x.points();
    let denom = (0..n)
        .map(|j| {
            (0..n)
                .filter(|&i| i != j)
                .map(|i| g[(i, j)])
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .fold(f64::INFINITY, f64::min);
    if !(denom > 0.0) {
        return Err(invalid(format!(
            "largest inner product with another point is nonpositive for some point ({denom})"
        )));
    }
    Ok(alpha / denom)
}

pub(crate) fn check_column(x: &DataMatrix, j: usize) -> Result<()> {
    if j >= x.len() {
        return Err(invalid(format!("column {j} out of range for {} points", x.len())));
    }
    Ok(())
}

/// `X_{-j}` and, for the affine mode, its translate by `x_j`.
pub(crate) fn others(x: &DataMatrix, j: usize, mode: Mode) -> (Vec<usize>, DMatrix<f64>) {
    let idx: Vec<usize> = (0..x.len()).filter(|&i| i != j).collect();
    let mut y = x.select(&idx);
    if mode == Mode::Assc {
        let xj = x.point(j);
        for mut col in y.column_iter_mut() {
            col -= &xj;
        }
    }
    (idx, y)
}

/// Scatter a representation over `idx` into a length-`n` vector.
pub(crate) fn scatter(n: usize, idx: &[usize], v: &DVector<f64>) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for (k, &i) in idx.iter().enumerate() {
        out[i] = v[k];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn lambda_examples() {
        // Columns e1, e1, e2: per-point maxima 1, 1, 0.
        let x = DataMatrix::unlabeled(dmatrix![1.0, 1.0, 0.0; 0.0, 0.0, 1.0]).unwrap();
        assert!(compute_lambda(&x, 1.0).is_err());

        let x = DataMatrix::unlabeled(dmatrix![1.0, 1.0, 1.0; 1.0, 1.0, 0.0]).unwrap();
        // Gram off-diagonal maxima: 2, 2, 1.
        assert!((compute_lambda(&x, 3.0).unwrap() - 3.0).abs() < 1e-15);

        let s2 = std::f64::consts::SQRT_2;
        let x = DataMatrix::unlabeled(dmatrix![s2, s2, s2; 0.0, 0.0, 0.0]).unwrap();
        assert!((compute_lambda(&x, 10.0).unwrap() - 5.0).abs() < 1e-12);
        assert!(compute_lambda(&x, 0.0).is_err());
        assert!(compute_lambda(&x, -1.0).is_err());
    }

    #[test]
    fn lambda_matches_brute_force() {
        let x = DataMatrix::unlabeled(dmatrix![1.0, 0.5, 2.0, 0.1; 0.3, 1.0, 0.2, 1.5]).unwrap();
        let p = x.points();
        let mut best = f64::INFINITY;
        for j in 0..4 {
            let mut m = f64::NEG_INFINITY;
            for i in 0..4 {
                if i != j {
                    m = m.max(p.column(i).dot(&p.column(j)));
                }
            }
            best = best.min(m);
        }
        assert!((compute_lambda(&x, 2.0).unwrap() - 2.0 / best).abs() < 1e-14);
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        let bad = SolverConfig { rho: 1.0, ..SolverConfig::default() };
        assert!(bad.validate().is_err());
        let bad = SolverConfig { primal_tol: 0.0, ..SolverConfig::default() };
        assert!(bad.validate().is_err());
        let bad = SolverConfig::new(Mode::Ssc, Variant::Noisy { lambda: 0.0 });
        assert!(bad.validate().is_err());
    }

    #[test]
    fn two_identical_points() {
        let x = DataMatrix::unlabeled(dmatrix![1.0, 1.0; 2.0, 2.0]).unwrap();
        let cm = build_coefficient_matrix(&x, &SolverConfig::new(Mode::Ssc, Variant::Exact)).unwrap();
        assert!((&cm.c - dmatrix![0.0, 1.0; 1.0, 0.0]).amax() < 1e-6, "{}", cm.c);
        assert!(cm.nonconverged().is_empty());
    }
}
