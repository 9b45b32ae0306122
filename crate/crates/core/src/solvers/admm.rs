//! ADMM with the splitting `c = z` and soft thresholding on `z`.
//!
//! The penalty starts at `μ0` and moves by factors of `ρ` within
//! `[μ_min, μ_max]` to balance primal and dual residuals; after
//! `ADAPT_ITERS` iterations it is only allowed to grow. A penalty that
//! only grows freezes the iterates long before the ℓ1 objective has
//! converged. Exact solves are finished by polishing: the support and signs
//! of the iterate are turned into an exact KKT point when possible.
//!
//! Exact problems add `μ/2 ‖Y c - b‖²` and `μ/2 (1ᵀc - 1)²` to the augmented
//! Lagrangian, which makes the `c`-step matrix `I + YᵀY (+ 11ᵀ)` free of `μ`;
//! it is Cholesky-factored once per column. Noisy problems keep the data term
//! `λ/2 ‖Y c - b‖²` unpenalized, so their `c`-step matrix
//! `λYᵀY + μI (+ μ11ᵀ)` changes with `μ`. It is inverted through one
//! eigendecomposition of `YᵀY` plus a Sherman–Morrison correction for `11ᵀ`.

use nalgebra::{DMatrix, DVector};

use super::{check_column, others, scatter, ColumnSolution, Mode, SolverConfig, Variant};
use crate::error::{Error, Result};
use crate::model::DataMatrix;
use crate::numerics::{select_columns, shrink, symmetric_eig};

const BALANCE: f64 = 10.0;
/// Polishing is attempted every `POLISH_EVERY` iterations once the primal
/// residual is below `POLISH_START`, and every `POLISH_SLOW` iterations
/// before that. Ill-conditioned problems can stall far from feasibility
/// with the right support already found.
const POLISH_EVERY: usize = 10;
const POLISH_SLOW: usize = 100;
const POLISH_START: f64 = 1e-3;
/// After this many iterations the penalty may only grow. Balancing that
/// keeps oscillating can drive the iterates off to infinity on
/// ill-conditioned columns; a bounded nondecreasing penalty cannot.
const ADAPT_ITERS: usize = 500;

/// Solve column `j` by ADMM. Running out of iterations is not an error: the
/// last iterate is returned with `converged == false`.
pub fn solve_column_admm(x: &DataMatrix, j: usize, cfg: &SolverConfig) -> Result<ColumnSolution> {
    cfg.validate()?;
    check_column(x, j)?;
    let n = x.len();
    let (idx, y) = others(x, j, cfg.mode);
    let m = idx.len();
    if m == 0 {
        return Err(Error::NoRepresentation("no other points".into()));
    }
    // Right-hand side of the data constraint: 0 after translation, else x_j.
    let b = match cfg.mode {
        Mode::Assc => DVector::zeros(x.ambient_dim()),
        Mode::Ssc => x.point(j),
    };
    let affine = cfg.mode == Mode::Assc;
    let run = match cfg.variant {
        Variant::Exact => exact(&y, &b, affine, cfg)?,
        Variant::Noisy { lambda } => noisy(&y, &b, affine, lambda, cfg)?,
    };

    let c = &run.c;
    let l1 = c.iter().map(|v| v.abs()).sum::<f64>();
    let objective = match cfg.variant {
        Variant::Exact => l1,
        Variant::Noisy { lambda } => {
            let resid = x.point(j) - x.select(&idx) * c;
            l1 + 0.5 * lambda * resid.norm_squared()
        }
    };
    Ok(ColumnSolution {
        j,
        c: scatter(n, &idx, c),
        objective,
        dual_w: run.w.as_slice().to_vec(),
        dual_nu: run.nu,
        iterations: run.iterations,
        converged: run.converged,
        primal_residual: run.primal,
        dual_residual: run.dual,
    })
}

struct Run {
    c: DVector<f64>,
    w: DVector<f64>,
    nu: f64,
    iterations: usize,
    converged: bool,
    primal: f64,
    dual: f64,
}

fn exact(y: &DMatrix<f64>, b: &DVector<f64>, affine: bool, cfg: &SolverConfig) -> Result<Run> {
    let m = y.ncols();
    let mut gram = y.transpose() * y;
    for i in 0..m {
        gram[(i, i)] += 1.0;
    }
    if affine {
        gram.add_scalar_mut(1.0);
    }
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::Internal("c-step matrix is not positive definite".into()))?;
    let ytb = y.transpose() * b;

    let mut c = DVector::zeros(m);
    let mut yv = DVector::zeros(m);
    let mut w = DVector::zeros(y.nrows());
    let mut nu = 0.0;
    let mut mu = cfg.mu0;
    let (mut primal, mut dual) = (f64::INFINITY, f64::INFINITY);

    for it in 1..=cfg.max_iters {
        let z = (&c - &yv / mu).map(|v| shrink(v, 1.0 / mu));
        let mut rhs = &z + &ytb + (&yv - y.transpose() * &w) / mu;
        if affine {
            rhs.add_scalar_mut(1.0 - nu / mu);
        }
        let c_new = chol.solve(&rhs);

        let r_split = &z - &c_new;
        let r_data = y * &c_new - b;
        let r_sum = if affine { c_new.sum() - 1.0 } else { 0.0 };
        yv += &r_split * mu;
        w += &r_data * mu;
        nu += mu * r_sum;

        primal = r_split.amax().max(r_data.amax()).max(r_sum.abs());
        dual = mu * (&c_new - &c).amax();
        c = c_new;
        if (primal <= POLISH_START && it % POLISH_EVERY == 0) || it % POLISH_SLOW == 0 {
            if let Some((pc, pw, pnu)) = polish(y, b, affine, &z, &w, nu, cfg.primal_tol) {
                return Ok(Run { c: pc, w: pw, nu: pnu, iterations: it, converged: true, primal, dual });
            }
        }
        if primal <= cfg.primal_tol && dual <= cfg.dual_tol {
            return Ok(Run { c, w, nu, iterations: it, converged: true, primal, dual });
        }
        let r = (r_split.norm_squared() + r_data.norm_squared() + r_sum * r_sum).sqrt();
        mu = next_penalty(mu, r, dual * (m as f64).sqrt(), it, cfg);
    }
    Ok(Run { c, w, nu, iterations: cfg.max_iters, converged: false, primal, dual })
}

/// Residual balancing: grow `μ` by `ρ` while the primal residual dominates,
/// shrink it while the dual residual dominates, within `[μ_min, μ_max]`.
fn next_penalty(mu: f64, primal: f64, dual: f64, it: usize, cfg: &SolverConfig) -> f64 {
    if primal > BALANCE * dual {
        (mu * cfg.rho).min(cfg.mu_max)
    } else if dual > BALANCE * primal && it <= ADAPT_ITERS {
        (mu / cfg.rho).max(cfg.mu_min)
    } else {
        mu
    }
}

/// Recover an exactly optimal point from the support and signs of `z`.
///
/// On the support `S` the iterate is projected onto the constraint set; if
/// the signs survive and a multiplier `λ` with `A_Sᵀλ = -sign(z_S)` and
/// `‖A_{S^c}ᵀλ‖∞ <= 1` exists, the projection is optimal.
fn polish(
    y: &DMatrix<f64>,
    b: &DVector<f64>,
    affine: bool,
    z: &DVector<f64>,
    w: &DVector<f64>,
    nu: f64,
    primal_tol: f64,
) -> Option<(DVector<f64>, DVector<f64>, f64)> {
    let m = y.ncols();
    let d = y.nrows();
    let rows = d + usize::from(affine);
    let mut a = DMatrix::zeros(rows, m);
    a.rows_mut(0, d).copy_from(y);
    let mut rhs = DVector::zeros(rows);
    rhs.rows_mut(0, d).copy_from(b);
    if affine {
        a.row_mut(d).fill(1.0);
        rhs[d] = 1.0;
    }
    let zmax = z.amax();
    if zmax == 0.0 {
        return None;
    }
    // Candidate supports: thresholded entries of z, then the k largest
    // entries for every k up to the number of constraints (vertex optima).
    let mut order: Vec<usize> = (0..m).filter(|&i| z[i] != 0.0).collect();
    order.sort_by(|&p, &q| z[q].abs().total_cmp(&z[p].abs()));
    let mut supports: Vec<Vec<usize>> = Vec::new();
    for rel in [0.0, 1e-8, 1e-6, 1e-4] {
        let s: Vec<usize> = (0..m).filter(|&i| z[i].abs() > rel * zmax).collect();
        supports.push(s);
    }
    for k in 1..=rows.min(order.len()) {
        let mut s = order[..k].to_vec();
        s.sort_unstable();
        supports.push(s);
    }
    supports.dedup();
    for support in supports {
        if support.is_empty() {
            continue;
        }
        let a_s = select_columns(&a, &support);
        let z_s = DVector::from_iterator(support.len(), support.iter().map(|&i| z[i]));
        let svd = a_s.clone().svd(true, true);
        let tol = 1e-12 * svd.singular_values.max().max(1.0);
        let Ok(corr) = svd.solve(&(&a_s * &z_s - &rhs), tol) else { continue };
        let c_s = &z_s - corr;
        if (&a_s * &c_s - &rhs).amax() > primal_tol * (1.0 + rhs.amax()) {
            continue;
        }
        if support.iter().enumerate().any(|(k, &i)| c_s[k] * z[i].signum() <= 0.0) {
            continue;
        }
        let signs = z_s.map(|v| -v.signum());
        let ats = a_s.transpose();
        let mut lam0 = DVector::zeros(rows);
        lam0.rows_mut(0, d).copy_from(w);
        if affine {
            lam0[d] = nu;
        }
        let svd_t = ats.clone().svd(true, true);
        let Ok(corr) = svd_t.solve(&(&ats * &lam0 - &signs), tol) else { continue };
        let cands = [lam0.clone() - corr, svd_t.solve(&signs, tol).unwrap_or(lam0)];
        let Some(lam) = cands.into_iter().find(|lam| {
            (&ats * lam - &signs).amax() <= 1e-9 && (a.transpose() * lam).amax() <= 1.0 + 1e-9
        }) else {
            continue;
        };
        let mut c = DVector::zeros(m);
        for (k, &i) in support.iter().enumerate() {
            c[i] = c_s[k];
        }
        let w = lam.rows(0, d).into_owned();
        let nu = if affine { lam[d] } else { 0.0 };
        return Some((c, w, nu));
    }
    None
}

fn noisy(y: &DMatrix<f64>, b: &DVector<f64>, affine: bool, lambda: f64, cfg: &SolverConfig) -> Result<Run> {
    let m = y.ncols();
    let (evals, evecs) = symmetric_eig(&(y.transpose() * y))?;
    let evals = evals.map(|v| v.max(0.0));
    let ones_hat = evecs.transpose() * DVector::from_element(m, 1.0);
    let ytb = y.transpose() * b * lambda;
    // K(μ)⁻¹ r with K = λYᵀY + μI, in the eigenbasis.
    let k_inv = |r_hat: &DVector<f64>, mu: f64| -> DVector<f64> {
        DVector::from_iterator(m, (0..m).map(|i| r_hat[i] / (lambda * evals[i] + mu)))
    };

    let mut c = DVector::zeros(m);
    let mut yv = DVector::zeros(m);
    let mut nu = 0.0;
    let mut mu = cfg.mu0;
    let (mut primal, mut dual) = (f64::INFINITY, f64::INFINITY);

    for it in 1..=cfg.max_iters {
        let z = (&c - &yv / mu).map(|v| shrink(v, 1.0 / mu));
        let mut rhs = &z * mu + &yv + &ytb;
        if affine {
            rhs.add_scalar_mut(mu - nu);
        }
        let mut sol_hat = k_inv(&(evecs.transpose() * &rhs), mu);
        if affine {
            // (K + μ11ᵀ)⁻¹ by Sherman–Morrison.
            let u_hat = k_inv(&ones_hat, mu);
            let coef = mu * ones_hat.dot(&sol_hat) / (1.0 + mu * ones_hat.dot(&u_hat));
            sol_hat -= u_hat * coef;
        }
        let c_new = &evecs * sol_hat;

        let r_split = &z - &c_new;
        let r_sum = if affine { c_new.sum() - 1.0 } else { 0.0 };
        yv += &r_split * mu;
        nu += mu * r_sum;

        primal = r_split.amax().max(r_sum.abs());
        dual = mu * (&c_new - &c).amax();
        c = c_new;
        if primal <= cfg.primal_tol && dual <= cfg.dual_tol {
            let w = (y * &c - b) * lambda;
            return Ok(Run { c, w, nu, iterations: it, converged: true, primal, dual });
        }
        let r = (r_split.norm_squared() + r_sum * r_sum).sqrt();
        mu = next_penalty(mu, r, dual * (m as f64).sqrt(), it, cfg);
    }
    let w = (y * &c - b) * lambda;
    Ok(Run { c, w, nu, iterations: cfg.max_iters, converged: false, primal, dual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::solve_column_oracle;
    use nalgebra::dmatrix;

    fn two_lines_r3() -> DataMatrix {
        let p = dmatrix![
            -2.0, -1.0, 0.0, 1.0, 2.0, 1.0, 0.0, -1.0, -2.0, -3.0;
            1.0, 1.0, 1.0, 1.0, 1.0, 0.0, 1.0, 2.0, 3.0, 4.0;
            1.0, 1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0
        ];
        DataMatrix::new(p, Some(vec![1, 1, 1, 1, 1, 2, 2, 2, 2, 2])).unwrap()
    }

    #[test]
    fn interior_point_is_dense_with_unit_norm() {
        let x = two_lines_r3();
        let s = solve_column_admm(&x, 2, &SolverConfig::default()).unwrap();
        assert!(s.converged);
        assert_eq!(s.c[2], 0.0);
        assert!((s.objective - 1.0).abs() < 1e-4, "{}", s.objective);
        for i in [0, 1, 3, 4] {
            assert!(s.c[i] > 1e-3, "{:?}", s.c);
        }
        for i in 5..10 {
            assert!(s.c[i].abs() < 1e-6);
        }
        assert!((s.dual_nu + 1.0).abs() < 1e-3, "{}", s.dual_nu);
    }

    #[test]
    fn duplicate_point_ssc() {
        let x = DataMatrix::unlabeled(dmatrix![1.0, 3.0, 1.0; 2.0, 0.0, 2.0]).unwrap();
        let s = solve_column_admm(&x, 0, &SolverConfig::new(Mode::Ssc, Variant::Exact)).unwrap();
        assert!(s.converged);
        assert!((s.objective - 1.0).abs() < 1e-4);
        assert!((s.c[2] - 1.0).abs() < 1e-4);
    }

    #[test]
    fn agrees_with_oracle_on_toy() {
        let x = two_lines_r3();
        for mode in [Mode::Ssc, Mode::Assc] {
            for j in 0..x.len() {
                let a = solve_column_admm(&x, j, &SolverConfig::new(mode, Variant::Exact)).unwrap();
                let o = solve_column_oracle(&x, j, mode).unwrap();
                assert!(a.converged, "{mode:?} {j}");
                assert!((a.objective - o.objective).abs() < 1e-4, "{mode:?} {j}: {} vs {}", a.objective, o.objective);
            }
        }
    }

    #[test]
    fn noisy_variants_converge_and_sum_to_one() {
        let x = two_lines_r3();
        for mode in [Mode::Ssc, Mode::Assc] {
            let cfg = SolverConfig::new(mode, Variant::Noisy { lambda: 50.0 });
            let s = solve_column_admm(&x, 3, &cfg).unwrap();
            assert!(s.converged, "{mode:?}");
            if mode == Mode::Assc {
                assert!((s.c.iter().sum::<f64>() - 1.0).abs() <= 1e-7);
            }
            // Large λ approaches the exact solution.
            assert!(s.objective < 1.5);
        }
    }

    #[test]
    fn noisy_matches_direct_solve_for_small_problem() {
        // With λ small the ℓ1 term dominates; compare to a brute-force grid
        // over the affine line c1 + c2 = 1 of a two-representer problem.
        let x = DataMatrix::unlabeled(dmatrix![0.0, 1.0, 3.0; 0.0, 0.5, -0.2]).unwrap();
        let lambda = 2.0;
        let s = solve_column_admm(&x, 0, &SolverConfig::new(Mode::Assc, Variant::Noisy { lambda })).unwrap();
        let f = |t: f64| {
            let c = [t, 1.0 - t];
            let r = x.point(0) - x.point(1) * c[0] - x.point(2) * c[1];
            c[0].abs() + c[1].abs() + 0.5 * lambda * r.norm_squared()
        };
        let best = (0..=200_000).map(|k| f(-1.0 + 3.0 * k as f64 / 200_000.0)).fold(f64::INFINITY, f64::min);
        assert!((s.objective - best).abs() < 1e-6, "{} vs {best}", s.objective);
    }
}
