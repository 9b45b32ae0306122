//! Checks of solver output against the geometry of the arrangement.
//!
//! Guarantees come in two polarities. A positive guarantee predicts that
//! every optimal representation of the point is subspace-preserving; a
//! negative one predicts that none is. Guarantees are computed from the
//! labelled data alone. The coefficient matrix only enters the
//! preserving/dense flags and the soundness cross-check, which compares
//! guarantees against exact LP solutions.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clustering::AffinityMatrix;
use crate::error::{invalid, Error, Result};
use crate::geometry::{
    affine_hull_dim, classify_point, convex_representation, embedded_spans_independent,
    face_affine_hull_intersects_hull, is_affinely_independent, subspace_intersects_hull, PointClass, PointKind,
};
use crate::model::{embed_matrix, Arrangement, DataMatrix};
use crate::numerics::{rank_with_tol, select_columns, DEFAULT_RANK_TOL};
use crate::solvers::{compute_dual_point, solve_column_oracle, CoefficientMatrix, ColumnStats, Mode};

/// Coefficients at most this fraction of the largest one count as zero.
pub const SUPPORT_REL_TOL: f64 = 1e-5;
const GEOM_TOL: f64 = 1e-9;

/// Absolute support threshold for a coefficient vector.
pub fn support_tol(c: &[f64]) -> f64 {
    SUPPORT_REL_TOL * c.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// No coefficient above `tol` on a point with a different label.
pub fn is_subspace_preserving(c: &[f64], labels: &[usize], j: usize, tol: f64) -> bool {
    c.iter()
        .zip(labels)
        .all(|(v, &l)| l == labels[j] || v.abs() <= tol)
}

/// Subspace-preserving, with every other same-label point above `tol`.
pub fn is_subspace_dense(c: &[f64], labels: &[usize], j: usize, tol: f64) -> bool {
    is_subspace_preserving(c, labels, j, tol)
        && c
            .iter()
            .zip(labels)
            .enumerate()
            .all(|(i, (v, &l))| i == j || l != labels[j] || v.abs() > tol)
}

/// `max_κ ‖X_κᵀ v / ‖v‖‖∞` over the given clusters.
pub fn subspace_incoherence(dual_point: &DVector<f64>, other_clusters: &[DMatrix<f64>]) -> Result<f64> {
    let norm = dual_point.norm();
    if !(norm > 0.0) {
        return Err(invalid("dual point must be nonzero"));
    }
    let v = dual_point / norm;
    let mut worst = 0.0_f64;
    for x in other_clusters {
        if x.nrows() != v.len() {
            return Err(invalid("cluster dimension does not match the dual point"));
        }
        if x.ncols() > 0 {
            worst = worst.max((x.transpose() * &v).amax());
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IncoherenceCheck {
    pub mu_tilde: f64,
    pub inv_dual_norm: f64,
    pub holds: bool,
}

/// Incoherence condition on the homogeneously embedded data: the dual point
/// of `x̃_j` over the other points of its cluster must be less coherent
/// with every other cluster than its inverse norm.
pub fn check_incoherence(x: &DataMatrix, j: usize) -> Result<IncoherenceCheck> {
    let labels = x.labels().ok_or_else(|| invalid("incoherence needs labels"))?;
    if j >= x.len() {
        return Err(invalid(format!("point {j} out of range")));
    }
    let emb = embed_matrix(x);
    let own: Vec<usize> = (0..x.len()).filter(|&i| i != j && labels[i] == labels[j]).collect();
    if own.is_empty() {
        return Err(invalid("no other points in the cluster"));
    }
    let v = compute_dual_point(&emb.select(&own), &emb.point(j))?;
    let others: Vec<DMatrix<f64>> = (1..=x.num_clusters())
        .filter(|&l| l != labels[j])
        .map(|l| emb.select(&x.cluster_indices(l)))
        .collect();
    let mu_tilde = subspace_incoherence(&v, &others)?;
    let inv_dual_norm = 1.0 / v.norm();
    Ok(IncoherenceCheck { mu_tilde, inv_dual_norm, holds: mu_tilde < inv_dual_norm })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Guarantee {
    /// Independent embedded spans and full-rank embedded cluster.
    EmbeddedIndependence,
    /// Incoherence of the embedded dual point.
    Incoherence,
    /// Affinely independent subspaces and full-dimensional cluster.
    AffineIndependence,
    /// Relative interior point; its subspace misses the hull of the others.
    InteriorSeparation,
    /// Point inside a proper face; its subspace misses the hull of the others.
    BoundarySeparation,
    /// Point inside a proper face; the face's affine hull misses the hull of
    /// all points off the face.
    FaceSeparation,
    /// Vertex of its cluster that is a convex combination of other points.
    ExtremeInsideHull,
    /// Vertex of its cluster that is not a vertex of the whole hull.
    ExtremeNotGlobalVertex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GuaranteeVerdict {
    pub guarantee: Guarantee,
    /// Predicted outcome: `true` for "every optimal solution is
    /// subspace-preserving", `false` for "no optimal solution is".
    pub preserving: bool,
}

/// Geometry-only facts for one point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointGuarantees {
    pub class: PointClass,
    pub incoherence: Option<IncoherenceCheck>,
    pub guarantees: Vec<GuaranteeVerdict>,
}

impl PointGuarantees {
    pub fn predicts_preserving(&self) -> Option<bool> {
        if self.guarantees.iter().any(|g| g.preserving) {
            Some(true)
        } else if self.guarantees.iter().any(|g| !g.preserving) {
            Some(false)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrangementReport {
    pub affinely_independent: bool,
    pub embedded_independent: bool,
    /// Per subspace: whether it meets the hull of all other clusters' points.
    pub hull_intersections: Vec<bool>,
}

pub fn evaluate_arrangement(arr: &Arrangement) -> Result<ArrangementReport> {
    let data = &arr.data;
    let labels = arr.labels();
    let hull_intersections = (1..=arr.num_clusters())
        .map(|l| {
            let rest: Vec<usize> = (0..data.len()).filter(|&i| labels[i] != l).collect();
            subspace_intersects_hull(&arr.subspaces[l - 1], &data.select(&rest), GEOM_TOL)
        })
        .collect::<Result<_>>()?;
    Ok(ArrangementReport {
        affinely_independent: is_affinely_independent(&arr.subspaces, GEOM_TOL)?,
        embedded_independent: embedded_spans_independent(&arr.subspaces, GEOM_TOL)?,
        hull_intersections,
    })
}

/// Which guarantees apply to each point of a labelled arrangement.
pub fn evaluate_guarantees(arr: &Arrangement) -> Result<Vec<PointGuarantees>> {
    let summary = evaluate_arrangement(arr)?;
    evaluate_guarantees_with(arr, &summary)
}

fn evaluate_guarantees_with(arr: &Arrangement, summary: &ArrangementReport) -> Result<Vec<PointGuarantees>> {
    let data = &arr.data;
    (0..data.len())
        .into_par_iter()
        .map(|j| point_guarantees(arr, summary, j))
        .collect()
}

fn point_guarantees(arr: &Arrangement, summary: &ArrangementReport, j: usize) -> Result<PointGuarantees> {
    use Guarantee::*;
    let data = &arr.data;
    let labels = arr.labels();
    let l = labels[j];
    let members = data.cluster_indices(l);
    let local = members.iter().position(|&i| i == j).expect("point is in its cluster");
    let cluster = data.select(&members);
    let sub_dim = arr.subspaces[l - 1].dim();

    let mut class = if members.len() == 1 {
        PointClass { kind: PointKind::Extreme, generators: vec![0], face_dim: 0, degenerate: false }
    } else {
        classify_point(local, &cluster, GEOM_TOL)?
    };
    // Map generators to global indices.
    class.generators = class.generators.iter().map(|&g| members[g]).collect();

    let own_rest: Vec<usize> = members.iter().copied().filter(|&i| i != j).collect();
    let rest_pts = data.select(&own_rest);
    let full_dim = !own_rest.is_empty() && affine_hull_dim(&rest_pts, GEOM_TOL) == sub_dim;

    let mut guarantees = Vec::new();
    let mut push = |g, preserving| guarantees.push(GuaranteeVerdict { guarantee: g, preserving });

    if summary.affinely_independent && full_dim {
        push(AffineIndependence, true);
    }
    if summary.embedded_independent && !own_rest.is_empty() {
        let embedded = embed_matrix(&DataMatrix::unlabeled(rest_pts.clone())?);
        if rank_with_tol(embedded.points(), DEFAULT_RANK_TOL)? == sub_dim + 1 {
            push(EmbeddedIndependence, true);
        }
    }

    let others: Vec<usize> = (0..data.len()).filter(|&i| labels[i] != l).collect();
    let separated = !summary.hull_intersections[l - 1];
    if !class.degenerate {
        match class.kind {
            PointKind::RelativeInterior if separated => push(InteriorSeparation, true),
            PointKind::BoundaryFace => {
                if separated {
                    push(BoundarySeparation, true);
                }
                let mut on_face = class.generators.clone();
                on_face.push(j);
                let off_face: Vec<usize> = (0..data.len()).filter(|i| !on_face.contains(i)).collect();
                if class.face_dim > 0
                    && !face_affine_hull_intersects_hull(&data.select(&on_face), &data.select(&off_face), GEOM_TOL)?
                {
                    push(FaceSeparation, true);
                }
            }
            PointKind::Extreme if !others.is_empty() => {
                let all_rest: Vec<usize> = (0..data.len()).filter(|&i| i != j).collect();
                if convex_representation(&data.point(j), &data.select(&all_rest))?.is_some() {
                    push(ExtremeInsideHull, false);
                    push(ExtremeNotGlobalVertex, false);
                }
            }
            _ => {}
        }
    }

    let incoherence = if others.is_empty() {
        None
    } else {
        match check_incoherence(data, j) {
            Ok(check) => {
                if check.holds {
                    push(Incoherence, true);
                }
                Some(check)
            }
            // Embedded point outside the span of its cluster: not applicable.
            Err(Error::InvalidInput(_)) => None,
            Err(e) => return Err(e),
        }
    };
    Ok(PointGuarantees { class, incoherence, guarantees })
}

/// Per cluster, whether its members form a connected graph under edges with
/// affinity above `tol`.
pub fn cluster_connectivity(a: &AffinityMatrix, labels: &[usize], tol: f64) -> Result<Vec<bool>> {
    let m = a.matrix();
    if labels.len() != m.nrows() {
        return Err(invalid("label count does not match the affinity size"));
    }
    let clusters = labels.iter().copied().max().unwrap_or(0);
    Ok((1..=clusters)
        .map(|l| {
            let members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == l).collect();
            if members.len() <= 1 {
                return true;
            }
            let mut seen = vec![false; members.len()];
            let mut stack = vec![0];
            seen[0] = true;
            while let Some(p) = stack.pop() {
                for (q, flag) in seen.iter_mut().enumerate() {
                    if !*flag && m[(members[p], members[q])] > tol {
                        *flag = true;
                        stack.push(q);
                    }
                }
            }
            seen.into_iter().all(|s| s)
        })
        .collect())
}

/// Affinity of the thresholded supports: an edge wherever either
/// coefficient is above its column's support threshold.
pub fn support_affinity(c: &DMatrix<f64>) -> Result<AffinityMatrix> {
    let n = c.nrows();
    if c.ncols() != n {
        return Err(invalid("coefficient matrix must be square"));
    }
    let tols: Vec<f64> = (0..n).map(|j| support_tol(c.column(j).as_slice())).collect();
    let on = |i: usize, j: usize| c[(i, j)].abs() > tols[j];
    AffinityMatrix::new(DMatrix::from_fn(n, n, |i, j| {
        if i != j && (on(i, j) || on(j, i)) {
            1.0
        } else {
            0.0
        }
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointReport {
    pub index: usize,
    pub label: Option<usize>,
    pub objective: f64,
    pub nonnegative: bool,
    pub subspace_preserving: Option<bool>,
    pub subspace_dense: Option<bool>,
    pub class: Option<PointClass>,
    pub incoherence: Option<IncoherenceCheck>,
    pub guarantees: Vec<GuaranteeVerdict>,
    /// Exact LP solution preserving, when the cross-check ran.
    pub oracle_preserving: Option<bool>,
    /// A guarantee disagreed with the exact solution.
    pub theory_violation: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub points: Vec<PointReport>,
    pub arrangement: Option<ArrangementReport>,
    pub connectivity: Option<Vec<bool>>,
    /// Every column preserving and every cluster with a dense column.
    pub correct_clustering: Option<bool>,
    pub clustering_error: Option<f64>,
    pub theory_violations: Vec<usize>,
    pub solver: Vec<ColumnStats>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertifyOptions {
    /// Cross-check guarantees against exact LP solutions.
    pub oracle_check: bool,
    pub clustering_error: Option<f64>,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self { oracle_check: true, clustering_error: None }
    }
}

fn column_facts(c: &[f64]) -> (f64, bool) {
    let tol = support_tol(c);
    (tol, c.iter().all(|v| *v >= -tol))
}

/// Full report for a labelled arrangement and a coefficient matrix.
pub fn certify(arr: &Arrangement, cm: &CoefficientMatrix, opts: &CertifyOptions) -> Result<CertificateReport> {
    let data = &arr.data;
    let n = data.len();
    if cm.len() != n {
        return Err(invalid(format!("coefficient matrix has {} columns for {n} points", cm.len())));
    }
    let labels = arr.labels();
    let summary = evaluate_arrangement(arr)?;
    let guarantees = evaluate_guarantees_with(arr, &summary)?;

    let oracle: Vec<Option<bool>> = if opts.oracle_check {
        (0..n)
            .into_par_iter()
            .map(|j| match solve_column_oracle(data, j, Mode::Assc) {
                Ok(s) => Ok(Some(is_subspace_preserving(&s.c, labels, j, support_tol(&s.c)))),
                Err(Error::NoRepresentation(_)) => Ok(None),
                Err(e) => Err(e),
            })
            .collect::<Result<_>>()?
    } else {
        vec![None; n]
    };

    let mut points = Vec::with_capacity(n);
    for (j, g) in guarantees.into_iter().enumerate() {
        let c = cm.column(j);
        let c = c.as_slice();
        let (tol, nonnegative) = column_facts(c);
        let predicted = g.predicts_preserving();
        let theory_violation = match (predicted, oracle[j]) {
            (Some(p), Some(o)) => p != o,
            _ => false,
        };
        points.push(PointReport {
            index: j,
            label: Some(labels[j]),
            objective: cm.stats[j].objective,
            nonnegative,
            subspace_preserving: Some(is_subspace_preserving(c, labels, j, tol)),
            subspace_dense: Some(is_subspace_dense(c, labels, j, tol)),
            class: Some(g.class),
            incoherence: g.incoherence,
            guarantees: g.guarantees,
            oracle_preserving: oracle[j],
            theory_violation,
        });
    }

    let connectivity = cluster_connectivity(&support_affinity(&cm.c)?, labels, 0.0)?;
    let all_preserving = points.iter().all(|p| p.subspace_preserving == Some(true));
    let dense_everywhere = (1..=arr.num_clusters())
        .all(|l| points.iter().any(|p| p.label == Some(l) && p.subspace_dense == Some(true)));
    let theory_violations = points.iter().filter(|p| p.theory_violation).map(|p| p.index).collect();
    Ok(CertificateReport {
        points,
        arrangement: Some(summary),
        connectivity: Some(connectivity),
        correct_clustering: Some(all_preserving && dense_everywhere),
        clustering_error: opts.clustering_error,
        theory_violations,
        solver: cm.stats.clone(),
    })
}

/// Report restricted to solver statistics, for data without labels.
pub fn certify_unlabeled(data: &DataMatrix, cm: &CoefficientMatrix) -> Result<CertificateReport> {
    if cm.len() != data.len() {
        return Err(invalid("coefficient matrix size does not match the data"));
    }
    let points = (0..data.len())
        .map(|j| {
            let c = cm.column(j);
            let (_, nonnegative) = column_facts(c.as_slice());
            PointReport {
                index: j,
                label: None,
                objective: cm.stats[j].objective,
                nonnegative,
                subspace_preserving: None,
                subspace_dense: None,
                class: None,
                incoherence: None,
                guarantees: Vec::new(),
                oracle_preserving: None,
                theory_violation: false,
            }
        })
        .collect();
    Ok(CertificateReport {
        points,
        arrangement: None,
        connectivity: None,
        correct_clustering: None,
        clustering_error: None,
        theory_violations: Vec::new(),
        solver: cm.stats.clone(),
    })
}

/// Points of `data` at `idx` as a matrix; convenience for callers holding
/// global indices.
pub fn points_at(data: &DataMatrix, idx: &[usize]) -> DMatrix<f64> {
    select_columns(data.points(), idx)
}
