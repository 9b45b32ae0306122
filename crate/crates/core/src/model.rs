//! Point sets, labels and affine subspaces.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::numerics::{ensure_finite, select_columns};

/// `D × N` point set, one point per column, with optional 1-based labels.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    points: DMatrix<f64>,
    labels: Option<Vec<usize>>,
}

impl DataMatrix {
    pub fn new(points: DMatrix<f64>, labels: Option<Vec<usize>>) -> Result<Self> {
        ensure_finite(&points, "data matrix")?;
        if let Some(l) = &labels {
            validate_labels(l, points.ncols())?;
        }
        Ok(Self { points, labels })
    }

    pub fn unlabeled(points: DMatrix<f64>) -> Result<Self> {
        Self::new(points, None)
    }

    /// Build from row-major points (one point per row), as read from CSV.
    pub fn from_rows(rows: &[Vec<f64>], labels: Option<Vec<usize>>) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != d) {
            return Err(invalid("rows have different lengths"));
        }
        let points = DMatrix::from_fn(d, n, |i, j| rows[j][i]);
        Self::new(points, labels)
    }

    pub fn points(&self) -> &DMatrix<f64> {
        &self.points
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn ambient_dim(&self) -> usize {
        self.points.nrows()
    }

    pub fn len(&self) -> usize {
        self.points.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.points.ncols() == 0
    }

    pub fn point(&self, j: usize) -> DVector<f64> {
        self.points.column(j).into_owned()
    }

    pub fn num_clusters(&self) -> usize {
        self.labels.as_ref().map_or(0, |l| l.iter().copied().max().unwrap_or(0))
    }

    /// Column indices carrying label `label`.
    pub fn cluster_indices(&self, label: usize) -> Vec<usize> {
        match &self.labels {
            Some(l) => (0..l.len()).filter(|&i| l[i] == label).collect(),
            None => Vec::new(),
        }
    }

    pub fn select(&self, idx: &[usize]) -> DMatrix<f64> {
        select_columns(&self.points, idx)
    }

    /// Sub-dataset on the given columns; labels are renormalised to `1..n'`.
    pub fn subset(&self, idx: &[usize]) -> Result<Self> {
        let labels = self.labels.as_ref().map(|l| {
            let raw: Vec<i64> = idx.iter().map(|&i| l[i] as i64).collect();
            normalize_labels(&raw)
        });
        Self::new(self.select(idx), labels)
    }

    pub fn with_labels(&self, labels: Option<Vec<usize>>) -> Result<Self> {
        Self::new(self.points.clone(), labels)
    }

    /// Row-major copy of the points.
    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|j| self.points.column(j).iter().copied().collect()).collect()
    }
}

fn validate_labels(labels: &[usize], n: usize) -> Result<()> {
    if labels.len() != n {
        return Err(invalid(format!("{} labels for {} points", labels.len(), n)));
    }
    if labels.contains(&0) {
        return Err(invalid("labels are 1-based"));
    }
    let max = labels.iter().copied().max().unwrap_or(0);
    let mut seen = vec![false; max + 1];
    for &l in labels {
        seen[l] = true;
    }
    if let Some(missing) = (1..=max).find(|&l| !seen[l]) {
        return Err(invalid(format!("label {missing} never occurs; labels must be dense")));
    }
    Ok(())
}

/// Map an arbitrary integer label alphabet to dense ids `1..=n`, ordered by
/// the sorted original values.
pub fn normalize_labels(raw: &[i64]) -> Vec<usize> {
    let mut ids = BTreeMap::new();
    for &r in raw {
        ids.entry(r).or_insert(0usize);
    }
    for (k, v) in ids.values_mut().enumerate() {
        *v = k + 1;
    }
    raw.iter().map(|r| ids[r]).collect()
}

/// Affine subspace `offset + span(basis)` with orthonormal basis columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineSubspaceModel {
    offset: Vec<f64>,
    /// Column-major `D × d` basis.
    basis: Vec<f64>,
    dim: usize,
}

impl AffineSubspaceModel {
    pub fn new(offset: DVector<f64>, basis: DMatrix<f64>) -> Result<Self> {
        let d_amb = offset.len();
        if basis.nrows() != d_amb {
            return Err(invalid("basis rows must match the offset length"));
        }
        if basis.ncols() > d_amb {
            return Err(invalid("subspace dimension exceeds the ambient dimension"));
        }
        ensure_finite(&basis, "basis")?;
        if !offset.iter().all(|v| v.is_finite()) {
            return Err(invalid("offset must be finite"));
        }
        let gram = basis.transpose() * &basis;
        let dev = (gram - DMatrix::identity(basis.ncols(), basis.ncols())).amax();
        if dev > 1e-10 {
            return Err(invalid(format!("basis is not orthonormal (deviation {dev:e})")));
        }
        Ok(Self {
            offset: offset.as_slice().to_vec(),
            dim: basis.ncols(),
            basis: basis.as_slice().to_vec(),
        })
    }

    /// A single point viewed as a 0-dimensional affine subspace.
    pub fn point(p: DVector<f64>) -> Result<Self> {
        let d = p.len();
        Self::new(p, DMatrix::zeros(d, 0))
    }

    pub fn offset(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.offset)
    }

    pub fn basis(&self) -> DMatrix<f64> {
        DMatrix::from_column_slice(self.offset.len(), self.dim, &self.basis)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ambient_dim(&self) -> usize {
        self.offset.len()
    }

    /// Orthogonal projector onto the direction subspace.
    pub fn projector(&self) -> DMatrix<f64> {
        let b = self.basis();
        &b * b.transpose()
    }

    pub fn distance(&self, x: &DVector<f64>) -> f64 {
        let r = x - self.offset();
        let b = self.basis();
        (&r - &b * (b.transpose() * &r)).norm()
    }

    /// `offset` followed by `offset + bᵢ` for each basis column: an affine
    /// basis of the subspace.
    pub fn affine_basis_points(&self) -> DMatrix<f64> {
        let o = self.offset();
        let b = self.basis();
        let mut out = DMatrix::zeros(o.len(), self.dim + 1);
        out.set_column(0, &o);
        for k in 0..self.dim {
            out.set_column(k + 1, &(&o + b.column(k)));
        }
        out
    }

    pub fn translated(&self, t: &DVector<f64>) -> Result<Self> {
        Self::new(self.offset() + t, self.basis())
    }
}

/// Labelled data together with the affine subspaces it was sampled from.
#[derive(Debug, Clone)]
pub struct Arrangement {
    pub subspaces: Vec<AffineSubspaceModel>,
    pub data: DataMatrix,
}

impl Arrangement {
    /// Check that label `ℓ` points lie within `tol · scale` of subspace `ℓ`.
    pub fn new(subspaces: Vec<AffineSubspaceModel>, data: DataMatrix, tol: f64) -> Result<Self> {
        let labels = data.labels().ok_or_else(|| invalid("an arrangement needs labels"))?;
        if subspaces.len() != data.num_clusters() {
            return Err(invalid(format!(
                "{} subspaces for {} clusters",
                subspaces.len(),
                data.num_clusters()
            )));
        }
        if subspaces.iter().any(|s| s.ambient_dim() != data.ambient_dim()) {
            return Err(invalid("subspace and data dimensions differ"));
        }
        let scale = 1.0 + data.points().amax();
        for (j, &l) in labels.iter().enumerate() {
            let dist = subspaces[l - 1].distance(&data.point(j));
            if dist > tol * scale {
                return Err(invalid(format!("point {j} is {dist:e} away from subspace {l}")));
            }
        }
        Ok(Self { subspaces, data })
    }

    /// Fit each cluster's affine hull from the labelled data.
    pub fn from_labeled_data(data: DataMatrix, tol: f64) -> Result<Self> {
        if data.labels().is_none() {
            return Err(invalid("an arrangement needs labels"));
        }
        let subspaces = (1..=data.num_clusters())
            .map(|l| fit_affine_subspace(&data.select(&data.cluster_indices(l)), tol))
            .collect::<Result<Vec<_>>>()?;
        Self::new(subspaces, data, tol.sqrt())
    }

    pub fn num_clusters(&self) -> usize {
        self.subspaces.len()
    }

    pub fn labels(&self) -> &[usize] {
        self.data.labels().expect("arrangement data is labelled")
    }
}

/// `[x; 1]`.
pub fn homogeneous_embed(x: &DVector<f64>) -> DVector<f64> {
    let mut out = DVector::from_element(x.len() + 1, 1.0);
    out.rows_mut(0, x.len()).copy_from(x);
    out
}

/// `[X; 1ᵀ]` with labels carried over.
pub fn embed_matrix(x: &DataMatrix) -> DataMatrix {
    let p = x.points();
    let mut out = DMatrix::from_element(p.nrows() + 1, p.ncols(), 1.0);
    out.rows_mut(0, p.nrows()).copy_from(p);
    DataMatrix {
        points: out,
        labels: x.labels.clone(),
    }
}

/// Affine hull of the columns of `points`: offset at the mean, directions
/// from the SVD of the centred points above `tol` relative to the data scale.
pub fn fit_affine_subspace(points: &DMatrix<f64>, tol: f64) -> Result<AffineSubspaceModel> {
    if points.ncols() == 0 {
        return Err(invalid("cannot fit a subspace to zero points"));
    }
    ensure_finite(points, "points")?;
    let (basis, mean) = centered_basis(points, tol);
    AffineSubspaceModel::new(mean, basis)
}

/// Orthonormal principal directions of the mean-centred columns, and the mean.
pub(crate) fn centered_basis(points: &DMatrix<f64>, tol: f64) -> (DMatrix<f64>, DVector<f64>) {
    let d = points.nrows();
    let n = points.ncols();
    let mean = points.column_mean();
    let mut centered = points.clone();
    for j in 0..n {
        let mut c = centered.column_mut(j);
        c -= &mean;
    }
    if n < 2 || d == 0 {
        return (DMatrix::zeros(d, 0), mean);
    }
    let scale = points.amax().max(centered.amax()).max(f64::MIN_POSITIVE);
    let svd = centered.svd(true, false);
    let u = svd.u.expect("svd computed with u");
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > tol * scale * (n as f64).sqrt())
        .collect();
    (select_columns(&u, &keep), mean)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector};
    use proptest::prelude::*;

    fn toy1_first_line() -> DMatrix<f64> {
        dmatrix![-2.0, -1.0, 0.0, 1.0, 2.0;
                 1.0, 1.0, 1.0, 1.0, 1.0;
                 1.0, 1.0, 1.0, 1.0, 1.0]
    }

    #[test]
    fn embedding_appends_one() {
        assert_eq!(homogeneous_embed(&dvector![0.0, 1.0]), dvector![0.0, 1.0, 1.0]);
        assert_eq!(homogeneous_embed(&dvector![-1.0, 1.0]), dvector![-1.0, 1.0, 1.0]);
        assert_eq!(homogeneous_embed(&DVector::zeros(3)), dvector![0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn embed_matrix_shapes_and_labels() {
        let x = DataMatrix::unlabeled(dmatrix![-1.0, 0.0, 1.0, 2.0; 1.0, 1.0, 1.0, 1.0]).unwrap();
        let e = embed_matrix(&x);
        assert_eq!(e.points().shape(), (3, 4));
        assert!(e.points().row(2).iter().all(|v| *v == 1.0));
        assert!(e.labels().is_none());
        assert_eq!(e.points().rows(0, 2), x.points().rows(0, 2));
    }

    #[test]
    fn fit_single_point_and_line() {
        let p = fit_affine_subspace(&dmatrix![1.0; 2.0; 3.0], 1e-9).unwrap();
        assert_eq!(p.dim(), 0);
        assert_eq!(p.offset(), dvector![1.0, 2.0, 3.0]);

        let line = fit_affine_subspace(&toy1_first_line(), 1e-9).unwrap();
        assert_eq!(line.dim(), 1);
        let b = line.basis();
        assert!((b[(0, 0)].abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fit_triangle_plane() {
        let tri = dmatrix![0.0, 1.0, 2.0, 0.5, 1.5, 1.0;
                           1.0, 1.0, 1.0, 0.0, 0.0, -1.0;
                           0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        assert_eq!(fit_affine_subspace(&tri, 1e-9).unwrap().dim(), 2);
    }

    #[test]
    fn labels_must_be_dense_and_one_based() {
        let pts = DMatrix::zeros(2, 3);
        assert!(DataMatrix::new(pts.clone(), Some(vec![1, 3, 3])).is_err());
        assert!(DataMatrix::new(pts.clone(), Some(vec![0, 1, 1])).is_err());
        assert!(DataMatrix::new(pts, Some(vec![2, 1, 2])).is_ok());
        assert_eq!(normalize_labels(&[7, -2, 7, 3]), vec![3, 1, 3, 2]);
    }

    #[test]
    fn arrangement_rejects_off_subspace_points() {
        let line = fit_affine_subspace(&toy1_first_line(), 1e-9).unwrap();
        let mut pts = toy1_first_line();
        pts[(2, 4)] = 1.5;
        let data = DataMatrix::new(pts, Some(vec![1; 5])).unwrap();
        assert!(Arrangement::new(vec![line], data, 1e-9).is_err());
    }

    proptest! {
        #[test]
        fn fit_is_translation_equivariant(
            coords in proptest::collection::vec(-3.0..3.0f64, 2 * 6),
            t in proptest::collection::vec(-10.0..10.0f64, 4),
        ) {
            // Six points on a random 2-plane in R⁴.
            let basis = dmatrix![1.0, 0.0; 0.0, 0.6; 0.0, 0.8; 0.0, 0.0];
            let c = DMatrix::from_column_slice(2, 6, &coords);
            let pts = &basis * c;
            let t = DVector::from_vec(t);
            let mut shifted = pts.clone();
            for j in 0..6 { let mut col = shifted.column_mut(j); col += &t; }
            let a = fit_affine_subspace(&pts, 1e-9).unwrap();
            let b = fit_affine_subspace(&shifted, 1e-9).unwrap();
            prop_assert_eq!(a.dim(), b.dim());
            prop_assert!((a.offset() + &t - b.offset()).amax() < 1e-9);
            prop_assert!((a.projector() - b.projector()).amax() < 1e-8);
            for j in 0..6 {
                prop_assert!(a.distance(&pts.column(j).into_owned()) <= 1e-9 * 10.0);
            }
            let embedded = embed_matrix(&DataMatrix::unlabeled(pts.clone()).unwrap());
            prop_assert_eq!(embedded.points().rows(0, 4).into_owned(), pts);
        }
    }
}
