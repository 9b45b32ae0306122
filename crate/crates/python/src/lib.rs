//! Python bindings.
//!
//! Points cross the boundary as lists of rows (one point per row), labels as
//! 1-based integers. Reports come back as JSON strings.

use assc_core::certificates::{self, CertifyOptions};
use assc_core::clustering;
use assc_core::datagen::{self, RandomArrangementSpec, ToyId};
use assc_core::model::{self, DataMatrix};
use assc_core::solvers::{self, CoefficientMatrix as CoreCoefficients, Mode, Variant};
use assc_core::Error;
use nalgebra::{DMatrix, DVector};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::InvalidInput(_) | Error::PreconditionViolation(_) | Error::NoRepresentation(_) => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn parse_mode(mode: &str) -> PyResult<Mode> {
    match mode.to_ascii_lowercase().as_str() {
        "assc" => Ok(Mode::Assc),
        "ssc" => Ok(Mode::Ssc),
        _ => Err(PyValueError::new_err(format!("unknown mode '{mode}', expected 'assc' or 'ssc'"))),
    }
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.column_iter().map(|c| c.iter().copied().collect()).collect()
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn from_matrix_rows(rows: &[Vec<f64>]) -> PyResult<DMatrix<f64>> {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != m) {
        return Err(PyValueError::new_err("rows have different lengths"));
    }
    Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

/// A point set, optionally labelled.
#[pyclass(module = "assc", frozen, skip_from_py_object)]
#[derive(Clone)]
struct Dataset {
    inner: DataMatrix,
}

#[pymethods]
impl Dataset {
    #[new]
    #[pyo3(signature = (points, labels=None))]
    fn new(points: Vec<Vec<f64>>, labels: Option<Vec<usize>>) -> PyResult<Self> {
        Ok(Self { inner: DataMatrix::from_rows(&points, labels).map_err(to_py)? })
    }

    #[getter]
    fn points(&self) -> Vec<Vec<f64>> {
        rows_of(self.inner.points())
    }

    #[getter]
    fn labels(&self) -> Option<Vec<usize>> {
        self.inner.labels().map(<[usize]>::to_vec)
    }

    #[getter]
    fn ambient_dim(&self) -> usize {
        self.inner.ambient_dim()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Dataset(n={}, dim={})", self.inner.len(), self.inner.ambient_dim())
    }
}

/// Labelled data together with the affine subspaces it was drawn from.
#[pyclass(module = "assc", frozen)]
struct Arrangement {
    inner: model::Arrangement,
}

#[pymethods]
impl Arrangement {
    /// Fit one affine subspace per label to labelled data.
    #[staticmethod]
    #[pyo3(signature = (dataset, tol=1e-6))]
    fn fit(dataset: &Dataset, tol: f64) -> PyResult<Self> {
        let inner = model::Arrangement::from_labeled_data(dataset.inner.clone(), tol).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn dataset(&self) -> Dataset {
        Dataset { inner: self.inner.data.clone() }
    }

    #[getter]
    fn subspace_dims(&self) -> Vec<usize> {
        self.inner.subspaces.iter().map(|s| s.dim()).collect()
    }

    fn __repr__(&self) -> String {
        format!("Arrangement(n={}, dims={:?})", self.inner.data.len(), self.subspace_dims())
    }
}

#[pyclass(module = "assc", frozen, skip_from_py_object)]
#[derive(Clone)]
struct SolverConfig {
    inner: solvers::SolverConfig,
}

#[pymethods]
impl SolverConfig {
    /// `lam` selects the noisy variant.
    #[new]
    #[pyo3(signature = (mode="assc", lam=None, mu0=None, rho=None, mu_max=None, max_iters=None, tol=None, seed=0))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        mode: &str,
        lam: Option<f64>,
        mu0: Option<f64>,
        rho: Option<f64>,
        mu_max: Option<f64>,
        max_iters: Option<usize>,
        tol: Option<f64>,
        seed: u64,
    ) -> PyResult<Self> {
        let variant = match lam {
            Some(lambda) => Variant::Noisy { lambda },
            None => Variant::Exact,
        };
        let mut cfg = solvers::SolverConfig::new(parse_mode(mode)?, variant);
        if let Some(v) = mu0 {
            cfg.mu0 = v;
            cfg.mu_min = cfg.mu_min.min(v);
        }
        cfg.rho = rho.unwrap_or(cfg.rho);
        cfg.mu_max = mu_max.unwrap_or(cfg.mu_max);
        cfg.max_iters = max_iters.unwrap_or(cfg.max_iters);
        if let Some(t) = tol {
            cfg.primal_tol = t;
            cfg.dual_tol = t;
        }
        cfg.seed = seed;
        cfg.validate().map_err(to_py)?;
        Ok(Self { inner: cfg })
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

#[pyclass(module = "assc", frozen, get_all)]
struct ColumnSolution {
    j: usize,
    c: Vec<f64>,
    objective: f64,
    dual_nu: f64,
    iterations: usize,
    converged: bool,
}

impl From<solvers::ColumnSolution> for ColumnSolution {
    fn from(s: solvers::ColumnSolution) -> Self {
        Self {
            j: s.j,
            c: s.c,
            objective: s.objective,
            dual_nu: s.dual_nu,
            iterations: s.iterations,
            converged: s.converged,
        }
    }
}

#[pymethods]
impl ColumnSolution {
    fn __repr__(&self) -> String {
        format!("ColumnSolution(j={}, objective={}, converged={})", self.j, self.objective, self.converged)
    }
}

#[pyclass(module = "assc", frozen)]
struct CoefficientMatrix {
    inner: CoreCoefficients,
}

#[pymethods]
impl CoefficientMatrix {
    /// `N × N`, column `j` holds the representation of point `j`.
    #[getter]
    fn c(&self) -> Vec<Vec<f64>> {
        matrix_rows(&self.inner.c)
    }

    #[getter]
    fn objectives(&self) -> Vec<f64> {
        self.inner.stats.iter().map(|s| s.objective).collect()
    }

    fn nonconverged(&self) -> Vec<usize> {
        self.inner.nonconverged()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

#[pyfunction]
fn make_toy(name: &str) -> PyResult<Arrangement> {
    let id: ToyId = name.parse().map_err(to_py)?;
    Ok(Arrangement { inner: datagen::make_toy(id).arrangement })
}

#[pyfunction]
#[pyo3(signature = (dims, ambient, points_per_cluster, seed=0, spread=1.0, separation=1.0))]
fn random_arrangement(
    dims: Vec<usize>,
    ambient: usize,
    points_per_cluster: usize,
    seed: u64,
    spread: f64,
    separation: f64,
) -> PyResult<Arrangement> {
    let mut spec = RandomArrangementSpec::new(dims, ambient, points_per_cluster, seed);
    spec.spread = spread;
    spec.separation = separation;
    Ok(Arrangement { inner: datagen::random_arrangement(&spec).map_err(to_py)? })
}

#[pyfunction]
#[pyo3(signature = (dataset, j, config=None))]
fn solve_column(dataset: &Dataset, j: usize, config: Option<&SolverConfig>) -> PyResult<ColumnSolution> {
    let cfg = config.map(|c| c.inner).unwrap_or_default();
    Ok(solvers::solve_column_admm(&dataset.inner, j, &cfg).map_err(to_py)?.into())
}

#[pyfunction]
#[pyo3(signature = (dataset, j, mode="assc"))]
fn solve_column_oracle(dataset: &Dataset, j: usize, mode: &str) -> PyResult<ColumnSolution> {
    Ok(solvers::solve_column_oracle(&dataset.inner, j, parse_mode(mode)?).map_err(to_py)?.into())
}

#[pyfunction]
#[pyo3(signature = (dataset, config=None))]
fn build_coefficient_matrix(py: Python<'_>, dataset: &Dataset, config: Option<&SolverConfig>) -> PyResult<CoefficientMatrix> {
    let cfg = config.map(|c| c.inner).unwrap_or_default();
    let data = dataset.inner.clone();
    let inner = py.detach(move || solvers::build_coefficient_matrix(&data, &cfg)).map_err(to_py)?;
    Ok(CoefficientMatrix { inner })
}

/// Spectral clustering of the symmetrized affinity `(|C| + |C|ᵀ) / 2`.
#[pyfunction]
#[pyo3(signature = (coefficients, n_clusters, seed=0))]
fn spectral_cluster(coefficients: &CoefficientMatrix, n_clusters: usize, seed: u64) -> PyResult<Vec<usize>> {
    let a = clustering::build_affinity(&coefficients.inner.c).map_err(to_py)?;
    Ok(clustering::spectral_cluster(&a, n_clusters, seed).map_err(to_py)?.labels)
}

#[pyfunction]
fn clustering_error(predicted: Vec<usize>, truth: Vec<usize>) -> PyResult<f64> {
    clustering::clustering_error(&predicted, &truth).map_err(to_py)
}

#[pyfunction]
fn compute_lambda(dataset: &Dataset, alpha: f64) -> PyResult<f64> {
    solvers::compute_lambda(&dataset.inner, alpha).map_err(to_py)
}

/// Minimum-norm dual point of `x` over the given points (rows).
#[pyfunction]
fn compute_dual_point(points: Vec<Vec<f64>>, x: Vec<f64>) -> PyResult<Vec<f64>> {
    let pts = from_matrix_rows(&points)?.transpose();
    let v = solvers::compute_dual_point(&pts, &DVector::from_vec(x)).map_err(to_py)?;
    Ok(v.as_slice().to_vec())
}

/// Returns `(mu_tilde, inv_dual_norm, holds)`.
#[pyfunction]
fn check_incoherence(dataset: &Dataset, j: usize) -> PyResult<(f64, f64, bool)> {
    let r = certificates::check_incoherence(&dataset.inner, j).map_err(to_py)?;
    Ok((r.mu_tilde, r.inv_dual_norm, r.holds))
}

/// Full certificate report as a JSON string.
#[pyfunction]
#[pyo3(signature = (arrangement, coefficients, oracle_check=true))]
fn certify(
    py: Python<'_>,
    arrangement: &Arrangement,
    coefficients: &CoefficientMatrix,
    oracle_check: bool,
) -> PyResult<String> {
    let opts = CertifyOptions { oracle_check, clustering_error: None };
    let report = py
        .detach(|| certificates::certify(&arrangement.inner, &coefficients.inner, &opts))
        .map_err(to_py)?;
    serde_json::to_string(&report).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

#[pymodule]
fn assc(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Dataset>()?;
    m.add_class::<Arrangement>()?;
    m.add_class::<SolverConfig>()?;
    m.add_class::<ColumnSolution>()?;
    m.add_class::<CoefficientMatrix>()?;
    m.add_function(wrap_pyfunction!(make_toy, m)?)?;
    m.add_function(wrap_pyfunction!(random_arrangement, m)?)?;
    m.add_function(wrap_pyfunction!(solve_column, m)?)?;
    m.add_function(wrap_pyfunction!(solve_column_oracle, m)?)?;
    m.add_function(wrap_pyfunction!(build_coefficient_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(spectral_cluster, m)?)?;
    m.add_function(wrap_pyfunction!(clustering_error, m)?)?;
    m.add_function(wrap_pyfunction!(compute_lambda, m)?)?;
    m.add_function(wrap_pyfunction!(compute_dual_point, m)?)?;
    m.add_function(wrap_pyfunction!(check_incoherence, m)?)?;
    m.add_function(wrap_pyfunction!(certify, m)?)?;
    Ok(())
}
