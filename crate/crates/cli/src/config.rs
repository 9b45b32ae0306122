//! Experiment configuration and the run report.

use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{bail, Result};
use assc::certificates::CertificateReport;
use assc::model::DataMatrix;
use assc::solvers::{compute_lambda, ColumnStats, Mode, SolverConfig, Variant};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetSource {
    Toy(String),
    Csv(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariantKind {
    Exact,
    Noisy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Clusters {
    FromLabels,
    Count(usize),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Outputs {
    pub coefficients: Option<PathBuf>,
    pub affinity: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

/// Solver settings as written in a config file. `lambda` wins over
/// `alpha`; one of them is needed for the noisy variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverSettings {
    pub mode: Mode,
    pub variant: VariantKind,
    pub lambda: Option<f64>,
    pub mu0: f64,
    pub mu_min: f64,
    pub rho: f64,
    pub mu_max: f64,
    pub max_iters: usize,
    pub primal_tol: f64,
    pub dual_tol: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        let d = SolverConfig::default();
        Self {
            mode: d.mode,
            variant: VariantKind::Exact,
            lambda: None,
            mu0: d.mu0,
            mu_min: d.mu_min,
            rho: d.rho,
            mu_max: d.mu_max,
            max_iters: d.max_iters,
            primal_tol: d.primal_tol,
            dual_tol: d.dual_tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub source: DatasetSource,
    #[serde(default)]
    pub solver: SolverSettings,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default = "from_labels")]
    pub clusters: Clusters,
    #[serde(default)]
    pub outputs: Outputs,
    #[serde(default)]
    pub certify: bool,
    #[serde(default)]
    pub seed: u64,
}

fn from_labels() -> Clusters {
    Clusters::FromLabels
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.solver.variant == VariantKind::Noisy && self.solver.lambda.is_none() && self.alpha.is_none() {
            bail!("the noisy variant needs lambda or alpha");
        }
        if let Clusters::Count(0) = self.clusters {
            bail!("cluster count must be positive");
        }
        self.solver_config_with(1.0)?;
        Ok(())
    }

    /// Resolve λ against the data and build the solver configuration.
    pub fn solver_config(&self, data: &DataMatrix) -> Result<SolverConfig> {
        let lambda = match (self.solver.variant, self.solver.lambda, self.alpha) {
            (VariantKind::Exact, _, _) => 0.0,
            (VariantKind::Noisy, Some(l), _) => l,
            (VariantKind::Noisy, None, Some(a)) => compute_lambda(data, a)?,
            (VariantKind::Noisy, None, None) => bail!("the noisy variant needs lambda or alpha"),
        };
        self.solver_config_with(lambda)
    }

    fn solver_config_with(&self, lambda: f64) -> Result<SolverConfig> {
        let s = &self.solver;
        let variant = match s.variant {
            VariantKind::Exact => Variant::Exact,
            VariantKind::Noisy => Variant::Noisy { lambda },
        };
        let cfg = SolverConfig {
            mode: s.mode,
            variant,
            mu0: s.mu0,
            mu_min: s.mu_min,
            rho: s.rho,
            mu_max: s.mu_max,
            max_iters: s.max_iters,
            primal_tol: s.primal_tol,
            dual_tol: s.dual_tol,
            seed: self.seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnFailure {
    pub j: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub lambda: Option<f64>,
    pub columns: Vec<ColumnStats>,
    pub failures: Vec<ColumnFailure>,
    pub predicted_labels: Option<Vec<usize>>,
    pub clustering_error: Option<f64>,
    pub certificate: Option<CertificateReport>,
    /// Seconds per stage.
    pub wall_times: BTreeMap<String, f64>,
}
