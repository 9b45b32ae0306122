//! Affinity construction, normalized spectral clustering and scoring.

mod kmeans;

pub use kmeans::{kmeans, KMeansResult};

use nalgebra::DMatrix;
use pathfinding::kuhn_munkres::kuhn_munkres;
use pathfinding::matrix::Matrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::numerics::{ensure_finite, symmetric_eig};

/// Degree given to isolated vertices so the normalization stays finite.
pub const ISOLATED_DEGREE: f64 = 1e-12;
pub const KMEANS_RESTARTS: usize = 20;
pub const KMEANS_MAX_ITERS: usize = 300;

/// Symmetric, nonnegative, zero-diagonal similarity matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityMatrix(DMatrix<f64>);

impl AffinityMatrix {
    pub fn new(a: DMatrix<f64>) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(invalid("affinity must be square"));
        }
        ensure_finite(&a, "affinity")?;
        if a.iter().any(|v| *v < 0.0) {
            return Err(invalid("affinity entries must be nonnegative"));
        }
        if a != a.transpose() {
            return Err(invalid("affinity must be exactly symmetric"));
        }
        if a.diagonal().iter().any(|v| *v != 0.0) {
            return Err(invalid("affinity diagonal must be zero"));
        }
        Ok(Self(a))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.0.nrows() == 0
    }
}

/// `½(|C| + |Cᵀ|)`.
pub fn build_affinity(c: &DMatrix<f64>) -> Result<AffinityMatrix> {
    if c.nrows() != c.ncols() {
        return Err(invalid("coefficient matrix must be square"));
    }
    ensure_finite(c, "coefficient matrix")?;
    if let Some(j) = (0..c.nrows()).find(|&j| c[(j, j)] != 0.0) {
        return Err(invalid(format!("coefficient matrix has nonzero diagonal at {j}")));
    }
    let abs = c.abs();
    let n = c.nrows();
    // Entry-wise from both triangles so the result is exactly symmetric.
    let a = DMatrix::from_fn(n, n, |i, j| 0.5 * (abs[(i, j)] + abs[(j, i)]));
    AffinityMatrix::new(a)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralClustering {
    /// 1-based labels, numbered in order of first appearance.
    pub labels: Vec<usize>,
    /// Vertices with zero degree, regularized before normalization.
    pub isolated: Vec<usize>,
    pub inertia: f64,
}

/// Normalized spectral clustering into `n` groups.
pub fn spectral_cluster(a: &AffinityMatrix, n: usize, seed: u64) -> Result<SpectralClustering> {
    let size = a.len();
    if n == 0 || n > size {
        return Err(invalid(format!("cannot split {size} points into {n} groups")));
    }
    if n == 1 {
        return Ok(SpectralClustering { labels: vec![1; size], isolated: Vec::new(), inertia: 0.0 });
    }
    let m = a.matrix();
    let degrees: Vec<f64> = m.row_iter().map(|r| r.sum()).collect();
    let isolated: Vec<usize> = (0..size).filter(|&i| degrees[i] <= 0.0).collect();
    let inv_sqrt: Vec<f64> = degrees.iter().map(|d| 1.0 / d.max(ISOLATED_DEGREE).sqrt()).collect();
    let lap = DMatrix::from_fn(size, size, |i, j| {
        let off = m[(i, j)] * inv_sqrt[i] * inv_sqrt[j];
        if i == j {
            1.0 - off
        } else {
            -off
        }
    });
    let (_, vecs) = symmetric_eig(&lap)?;
    let mut emb = vecs.columns(0, n).into_owned();
    for mut row in emb.row_iter_mut() {
        let norm = row.norm();
        if norm > 0.0 {
            row /= norm;
        }
    }
    let km = kmeans(&emb, n, KMEANS_RESTARTS, KMEANS_MAX_ITERS, seed)?;
    Ok(SpectralClustering { labels: relabel(&km.assignments), isolated, inertia: km.inertia })
}

/// Renumber groups 1.. in order of first appearance.
pub fn relabel(groups: &[usize]) -> Vec<usize> {
    let mut seen: Vec<usize> = Vec::new();
    groups
        .iter()
        .map(|g| match seen.iter().position(|s| s == g) {
            Some(k) => k + 1,
            None => {
                seen.push(*g);
                seen.len()
            }
        })
        .collect()
}

/// Percentage of points misassigned under the best one-to-one matching of
/// predicted groups to true groups.
pub fn clustering_error(pred: &[usize], truth: &[usize]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(invalid(format!("label lengths differ: {} vs {}", pred.len(), truth.len())));
    }
    if pred.is_empty() {
        return Ok(0.0);
    }
    let index = |labels: &[usize]| {
        let mut values: Vec<usize> = labels.to_vec();
        values.sort_unstable();
        values.dedup();
        let ids: Vec<usize> = labels.iter().map(|l| values.binary_search(l).expect("present")).collect();
        (values.len(), ids)
    };
    let (kp, pi) = index(pred);
    let (kt, ti) = index(truth);
    let k = kp.max(kt);
    let mut counts = Matrix::new(k, k, 0i64);
    for (p, t) in pi.iter().zip(&ti) {
        counts[(*p, *t)] += 1;
    }
    let (matched, _) = kuhn_munkres(&counts);
    Ok(100.0 * (1.0 - matched as f64 / pred.len() as f64))
}
