//! Affine arrangement predicates and convex-hull face classification.
//!
//! Set-level conditions (intersections, membership, minimal faces) are all
//! decided by LP feasibility on the vertex description of the hulls; no
//! facet enumeration is ever performed.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::{centered_basis, homogeneous_embed, AffineSubspaceModel};
use crate::numerics::{rank_with_tol, select_columns, solve_lp, LpProblem, LpStatus, LpTolerances};

/// Coefficient above which a point counts as a generator of the minimal face.
pub const GENERATOR_TOL: f64 = 1e-7;
/// Points closer than this (relative to the data scale) are coincident.
pub const DUPLICATE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PointKind {
    RelativeInterior,
    BoundaryFace,
    Extreme,
}

/// Position of a sample point relative to the convex hull of its cluster.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointClass {
    pub kind: PointKind,
    /// Column indices (into the cluster matrix) of the points spanning the
    /// minimal face. `[j]` for extreme points.
    pub generators: Vec<usize>,
    pub face_dim: usize,
    /// Set when the point coincides with another sample point.
    pub degenerate: bool,
}

/// Dimension of the affine hull of the columns.
pub fn affine_hull_dim(points: &DMatrix<f64>, tol: f64) -> usize {
    if points.ncols() <= 1 {
        return 0;
    }
    centered_basis(points, tol).0.ncols()
}

fn check_same_ambient(subspaces: &[&AffineSubspaceModel]) -> Result<usize> {
    let d = subspaces
        .first()
        .ok_or_else(|| invalid("need at least one subspace"))?
        .ambient_dim();
    if subspaces.iter().any(|s| s.ambient_dim() != d) {
        return Err(invalid("subspaces live in different ambient dimensions"));
    }
    Ok(d)
}

fn pooled_affine_bases(subspaces: &[&AffineSubspaceModel]) -> DMatrix<f64> {
    let d = subspaces[0].ambient_dim();
    let total: usize = subspaces.iter().map(|s| s.dim() + 1).sum();
    let mut out = DMatrix::zeros(d, total);
    let mut col = 0;
    for s in subspaces {
        let pts = s.affine_basis_points();
        out.columns_mut(col, pts.ncols()).copy_from(&pts);
        col += pts.ncols();
    }
    out
}

/// Whether two affine subspaces are affinely disjoint: they do not meet and
/// their direction spaces intersect only at zero.
///
/// The verdict is computed directly and cross-checked against the dimension
/// of the affine hull of their union; disagreement is reported as an error.
pub fn are_affinely_disjoint(a: &AffineSubspaceModel, b: &AffineSubspaceModel, tol: f64) -> Result<bool> {
    check_same_ambient(&[a, b])?;
    let (ba, bb) = (a.basis(), b.basis());
    let (da, db) = (a.dim(), b.dim());
    let scale = 1.0 + a.offset().amax().max(b.offset().amax());

    let mut stacked = DMatrix::zeros(a.ambient_dim(), da + db);
    stacked.columns_mut(0, da).copy_from(&ba);
    stacked.columns_mut(da, db).copy_from(&(-&bb));
    let directions_trivial = da + db == 0 || rank_with_tol(&stacked, tol)? == da + db;

    // Least-squares solve of offset_a + Ba t = offset_b + Bb s.
    let rhs = b.offset() - a.offset();
    let residual = if da + db == 0 {
        rhs.norm()
    } else {
        let svd = stacked.clone().svd(true, true);
        let sol = svd
            .solve(&rhs, tol)
            .map_err(|e| Error::Internal(format!("least squares failed: {e}")))?;
        (&stacked * sol - &rhs).norm()
    };
    let intersect = residual <= tol.sqrt() * scale;
    let direct = !intersect && directions_trivial;

    let hull_dim = affine_hull_dim(&pooled_affine_bases(&[a, b]), tol);
    let by_dimension = hull_dim == da + db + 1;
    if direct != by_dimension {
        return Err(Error::Internal(format!(
            "affine disjointness is numerically ambiguous (direct {direct}, dimension identity {by_dimension})"
        )));
    }
    Ok(direct)
}

/// Whether the affine hull of the union attains `Σ dim + (n - 1)`.
pub fn is_affinely_independent(subspaces: &[AffineSubspaceModel], tol: f64) -> Result<bool> {
    let refs: Vec<&AffineSubspaceModel> = subspaces.iter().collect();
    check_same_ambient(&refs)?;
    let expected: usize = subspaces.iter().map(|s| s.dim()).sum::<usize>() + subspaces.len() - 1;
    Ok(affine_hull_dim(&pooled_affine_bases(&refs), tol) == expected)
}

/// Dimension of the affine hull of the union of the subspaces.
pub fn arrangement_hull_dim(subspaces: &[AffineSubspaceModel], tol: f64) -> Result<usize> {
    let refs: Vec<&AffineSubspaceModel> = subspaces.iter().collect();
    check_same_ambient(&refs)?;
    Ok(affine_hull_dim(&pooled_affine_bases(&refs), tol))
}

/// Whether the linear spans of the homogeneously embedded subspaces are
/// independent, i.e. the stacked embedded bases have rank `Σ (dim + 1)`.
pub fn embedded_spans_independent(subspaces: &[AffineSubspaceModel], tol: f64) -> Result<bool> {
    let refs: Vec<&AffineSubspaceModel> = subspaces.iter().collect();
    let d = check_same_ambient(&refs)?;
    let pooled = pooled_affine_bases(&refs);
    let mut embedded = DMatrix::zeros(d + 1, pooled.ncols());
    for j in 0..pooled.ncols() {
        embedded.set_column(j, &homogeneous_embed(&pooled.column(j).into_owned()));
    }
    Ok(rank_with_tol(&embedded, tol)? == pooled.ncols())
}

/// Convex coefficients expressing `x` over the columns of `points`, if any.
pub fn convex_representation(x: &DVector<f64>, points: &DMatrix<f64>) -> Result<Option<DVector<f64>>> {
    let k = points.ncols();
    if k == 0 {
        return Ok(None);
    }
    let (a, b) = convex_system(x, points);
    let p = LpProblem::new(DVector::zeros(k)).with_equalities(a, b);
    let s = solve_lp(&p, &LpTolerances::default())?;
    Ok(match s.status {
        LpStatus::Optimal => Some(s.x),
        _ => None,
    })
}

/// `[P; 1ᵀ] c = [x; 1]`.
fn convex_system(x: &DVector<f64>, points: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>) {
    let d = points.nrows();
    let k = points.ncols();
    let mut a = DMatrix::from_element(d + 1, k, 1.0);
    a.rows_mut(0, d).copy_from(points);
    (a, homogeneous_embed(x))
}

/// Locate `points[:, j]` on the face lattice of the convex hull of
/// `points`: relative interior, relative interior of a proper face, or a
/// vertex.
pub fn classify_point(j: usize, points: &DMatrix<f64>, tol: f64) -> Result<PointClass> {
    let n = points.ncols();
    if n < 2 {
        return Err(invalid("classification needs at least two points"));
    }
    if j >= n {
        return Err(invalid(format!("point index {j} out of range")));
    }
    let scale = 1.0 + points.amax();
    let xj = points.column(j).into_owned();

    let dups: Vec<usize> = (0..n)
        .filter(|&i| i != j && (points.column(i) - &xj).amax() <= DUPLICATE_TOL * scale)
        .collect();
    if !dups.is_empty() {
        return Ok(PointClass {
            kind: PointKind::BoundaryFace,
            generators: dups,
            face_dim: 0,
            degenerate: true,
        });
    }

    // Representatives of coincident groups among the other points.
    let mut reps: Vec<usize> = Vec::new();
    let mut members: Vec<Vec<usize>> = Vec::new();
    for i in (0..n).filter(|&i| i != j) {
        match reps
            .iter()
            .position(|&r| (points.column(r) - points.column(i)).amax() <= DUPLICATE_TOL * scale)
        {
            Some(g) => members[g].push(i),
            None => {
                reps.push(i);
                members.push(vec![i]);
            }
        }
    }
    let rep_points = select_columns(points, &reps);
    let k = reps.len();

    let Some(first) = convex_representation(&xj, &rep_points)? else {
        return Ok(PointClass {
            kind: PointKind::Extreme,
            generators: vec![j],
            face_dim: 0,
            degenerate: false,
        });
    };

    let mut is_gen = vec![false; k];
    let mark = |c: &DVector<f64>, is_gen: &mut Vec<bool>| {
        for (g, v) in c.iter().enumerate() {
            if *v > GENERATOR_TOL {
                is_gen[g] = true;
            }
        }
    };
    mark(&first, &mut is_gen);
    let (a, b) = convex_system(&xj, &rep_points);
    for i in 0..k {
        if is_gen[i] {
            continue;
        }
        let mut cost = DVector::zeros(k);
        cost[i] = -1.0;
        let p = LpProblem::new(cost).with_equalities(a.clone(), b.clone());
        let s = solve_lp(&p, &LpTolerances::default())?;
        if s.status != LpStatus::Optimal {
            return Err(Error::SolverFailure(format!("face LP for index {i} returned {:?}", s.status)));
        }
        mark(&s.x, &mut is_gen);
    }

    let mut generators: Vec<usize> = (0..k).filter(|&g| is_gen[g]).flat_map(|g| members[g].clone()).collect();
    generators.sort_unstable();
    let all = is_gen.iter().all(|&g| g);
    let face_dim = affine_hull_dim(&select_columns(points, &generators), tol);
    let kind = if all { PointKind::RelativeInterior } else { PointKind::BoundaryFace };
    let face_dim = if all { affine_hull_dim(points, tol) } else { face_dim };
    Ok(PointClass {
        kind,
        generators,
        face_dim,
        degenerate: false,
    })
}

/// Whether the affine subspace meets the convex hull of `other_points`.
pub fn subspace_intersects_hull(a: &AffineSubspaceModel, other_points: &DMatrix<f64>, _tol: f64) -> Result<bool> {
    if other_points.nrows() != a.ambient_dim() {
        return Err(invalid("dimension mismatch between subspace and points"));
    }
    let k = other_points.ncols();
    if k == 0 {
        return Ok(false);
    }
    let d = a.ambient_dim();
    let dim = a.dim();
    // Variables: t (free, dim) then c (>= 0, k).
    let mut eq = DMatrix::zeros(d + 1, dim + k);
    eq.view_mut((0, 0), (d, dim)).copy_from(&a.basis());
    eq.view_mut((0, dim), (d, k)).copy_from(&(-other_points));
    for c in 0..k {
        eq[(d, dim + c)] = 1.0;
    }
    let mut rhs = DVector::zeros(d + 1);
    rhs.rows_mut(0, d).copy_from(&(-a.offset()));
    rhs[d] = 1.0;
    let mut lb = DVector::zeros(dim + k);
    lb.rows_mut(0, dim).fill(f64::NEG_INFINITY);
    feasible(LpProblem::new(DVector::zeros(dim + k)).with_equalities(eq, rhs).with_lower_bounds(lb))
}

/// Whether the affine hull of `face_points` meets the convex hull of
/// `non_face_points`.
pub fn face_affine_hull_intersects_hull(
    face_points: &DMatrix<f64>,
    non_face_points: &DMatrix<f64>,
    _tol: f64,
) -> Result<bool> {
    if face_points.nrows() != non_face_points.nrows() {
        return Err(invalid("dimension mismatch between point sets"));
    }
    let (f, k) = (face_points.ncols(), non_face_points.ncols());
    if f == 0 || k == 0 {
        return Ok(false);
    }
    let d = face_points.nrows();
    // Variables: a (free, affine weights on the face) then c (convex weights).
    let mut eq = DMatrix::zeros(d + 2, f + k);
    eq.view_mut((0, 0), (d, f)).copy_from(face_points);
    eq.view_mut((0, f), (d, k)).copy_from(&(-non_face_points));
    for i in 0..f {
        eq[(d, i)] = 1.0;
    }
    for c in 0..k {
        eq[(d + 1, f + c)] = 1.0;
    }
    let mut rhs = DVector::zeros(d + 2);
    rhs[d] = 1.0;
    rhs[d + 1] = 1.0;
    let mut lb = DVector::zeros(f + k);
    lb.rows_mut(0, f).fill(f64::NEG_INFINITY);
    feasible(LpProblem::new(DVector::zeros(f + k)).with_equalities(eq, rhs).with_lower_bounds(lb))
}

fn feasible(p: LpProblem) -> Result<bool> {
    let s = solve_lp(&p, &LpTolerances::default())?;
    Ok(s.status == LpStatus::Optimal)
}

/// Convex coefficients of `x` over the columns of `points` that are all
/// strictly positive. `x` must lie in the relative interior of the hull.
///
/// For every point `yᵢ` the segment from `yᵢ` through `x` is extended as far
/// as the hull allows, to a point `xᵢ`, so that `x = bᵢ yᵢ + (1 - bᵢ) xᵢ`
/// with `bᵢ > 0`. Averaging these representations over `i` gives every point
/// weight at least `bᵢ / K`.
pub fn strict_convex_combination(x: &DVector<f64>, points: &DMatrix<f64>, tol: f64) -> Result<DVector<f64>> {
    let k = points.ncols();
    if k == 0 {
        return Err(invalid("no points to combine"));
    }
    if points.nrows() != x.len() {
        return Err(invalid("dimension mismatch"));
    }
    let d = x.len();
    let scale = 1.0 + points.amax().max(x.amax());
    let mut total = DVector::zeros(k);
    for i in 0..k {
        let yi = points.column(i).into_owned();
        let dir = x - &yi;
        let mut rep = DVector::zeros(k);
        if dir.amax() <= DUPLICATE_TOL * scale {
            rep[i] = 1.0;
            total += rep;
            continue;
        }
        // max t  s.t.  x + t (x - yi) = P c,  1ᵀc = 1,  c >= 0,  t >= 0.
        let mut eq = DMatrix::zeros(d + 1, k + 1);
        eq.view_mut((0, 0), (d, k)).copy_from(points);
        eq.view_mut((0, k), (d, 1)).copy_from(&(-&dir));
        for c in 0..k {
            eq[(d, c)] = 1.0;
        }
        let mut rhs = DVector::zeros(d + 1);
        rhs.rows_mut(0, d).copy_from(x);
        rhs[d] = 1.0;
        let mut cost = DVector::zeros(k + 1);
        cost[k] = -1.0;
        let s = solve_lp(&LpProblem::new(cost).with_equalities(eq, rhs), &LpTolerances::default())?;
        match s.status {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => {
                return Err(Error::PreconditionViolation("point is outside the convex hull".into()))
            }
            LpStatus::Unbounded => return Err(Error::Internal("antipode LP unbounded".into())),
        }
        let t = s.x[k];
        if t <= tol {
            return Err(Error::PreconditionViolation(format!(
                "point is on the relative boundary: segment from point {i} cannot be extended"
            )));
        }
        let b = t / (1.0 + t);
        let far = s.x.rows(0, k).into_owned();
        rep[i] += b;
        rep += far * (1.0 - b);
        total += rep;
    }
    Ok(total / k as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fit_affine_subspace;
    use nalgebra::{dmatrix, dvector};

    const TOL: f64 = 1e-9;

    fn line(offset: DVector<f64>, dir: DVector<f64>) -> AffineSubspaceModel {
        let n = dir.norm();
        AffineSubspaceModel::new(offset, DMatrix::from_column_slice(dir.len(), 1, (dir / n).as_slice())).unwrap()
    }

    #[test]
    fn hull_dims() {
        assert_eq!(affine_hull_dim(&dmatrix![1.0; 2.0], TOL), 0);
        let l = dmatrix![-2.0, -1.0, 0.0, 1.0, 2.0; 1.0, 1.0, 1.0, 1.0, 1.0; 1.0, 1.0, 1.0, 1.0, 1.0];
        assert_eq!(affine_hull_dim(&l, TOL), 1);
    }

    #[test]
    fn disjointness() {
        // Two lines of the R³ toy.
        let a1 = line(dvector![0.0, 1.0, 1.0], dvector![1.0, 0.0, 0.0]);
        let a2 = line(dvector![1.0, 0.0, 0.0], dvector![-1.0, 1.0, 0.0]);
        assert!(are_affinely_disjoint(&a1, &a2, TOL).unwrap());
        // Parallel lines in R².
        let p1 = line(dvector![0.0, 1.0], dvector![1.0, 0.0]);
        let p2 = line(dvector![0.0, -4.0], dvector![1.0, 0.0]);
        assert!(!are_affinely_disjoint(&p1, &p2, TOL).unwrap());
        assert!(!are_affinely_disjoint(&a1, &a1, TOL).unwrap());
        assert!(are_affinely_disjoint(&a1, &p1, TOL).is_err());
    }

    #[test]
    fn independence() {
        let a1 = line(dvector![0.0, 1.0, 1.0], dvector![1.0, 0.0, 0.0]);
        let a2 = line(dvector![1.0, 0.0, 0.0], dvector![-1.0, 1.0, 0.0]);
        assert!(is_affinely_independent(&[a1.clone(), a2.clone()], TOL).unwrap());
        assert!(embedded_spans_independent(&[a1.clone(), a2], TOL).unwrap());
        assert!(is_affinely_independent(&[a1.clone()], TOL).unwrap());
        assert!(embedded_spans_independent(&[a1], TOL).unwrap());

        let p1 = line(dvector![0.0, 1.0], dvector![1.0, 0.0]);
        let p2 = line(dvector![0.0, -4.0], dvector![1.0, 0.0]);
        assert!(!is_affinely_independent(&[p1.clone(), p2.clone()], TOL).unwrap());
        assert!(!embedded_spans_independent(&[p1, p2], TOL).unwrap());
    }

    #[test]
    fn classify_interior_extreme_and_edge() {
        let l = dmatrix![-2.0, -1.0, 0.0, 1.0, 2.0; 1.0, 1.0, 1.0, 1.0, 1.0; 1.0, 1.0, 1.0, 1.0, 1.0];
        let c = classify_point(2, &l, TOL).unwrap();
        assert_eq!(c.kind, PointKind::RelativeInterior);
        assert_eq!(c.generators, vec![0, 1, 3, 4]);
        assert_eq!(c.face_dim, 1);

        let l2 = dmatrix![-1.0, 0.0, 1.0, 2.0; 1.0, 1.0, 1.0, 1.0];
        let c = classify_point(0, &l2, TOL).unwrap();
        assert_eq!(c.kind, PointKind::Extreme);
        assert_eq!((c.generators.clone(), c.face_dim), (vec![0], 0));

        // Square with its edge midpoint.
        let sq = dmatrix![0.0, 1.0, 1.0, 0.0, 0.5; 0.0, 0.0, 1.0, 1.0, 0.0];
        let c = classify_point(4, &sq, TOL).unwrap();
        assert_eq!(c.kind, PointKind::BoundaryFace);
        assert_eq!(c.generators, vec![0, 1]);
        assert_eq!(c.face_dim, 1);
    }

    #[test]
    fn duplicate_points_are_flagged() {
        let pts = dmatrix![0.0, 1.0, 2.0, 1.0; 0.0, 0.0, 0.0, 0.0];
        let c = classify_point(1, &pts, TOL).unwrap();
        assert!(c.degenerate);
        assert_eq!((c.kind, c.face_dim, c.generators.clone()), (PointKind::BoundaryFace, 0, vec![3]));
        // The duplicate pair does not disturb the classification of others.
        let c0 = classify_point(0, &pts, TOL).unwrap();
        assert_eq!(c0.kind, PointKind::Extreme);
    }

    #[test]
    fn hull_intersection() {
        let a1 = line(dvector![0.0, 1.0], dvector![1.0, 0.0]);
        let other = dmatrix![-1.0, 0.0, 1.0, 2.0; -4.0, -4.0, -4.0, -4.0];
        assert!(!subspace_intersects_hull(&a1, &other, TOL).unwrap());
        let axis = line(dvector![0.0, 0.0], dvector![1.0, 0.0]);
        assert!(subspace_intersects_hull(&axis, &dmatrix![0.0, 0.0; -1.0, 1.0], TOL).unwrap());

        let seg = dmatrix![0.0, 1.0; 0.0, 0.0];
        assert!(face_affine_hull_intersects_hull(&seg, &dmatrix![5.0, 5.0; -1.0, 1.0], TOL).unwrap());
        assert!(!face_affine_hull_intersects_hull(&seg, &dmatrix![5.0, 5.0; 1.0, 2.0], TOL).unwrap());

        let fitted = fit_affine_subspace(&dmatrix![-1.0, 0.0, 1.0; 1.0, 1.0, 1.0], TOL).unwrap();
        assert!(!subspace_intersects_hull(&fitted, &other, TOL).unwrap());
    }

    #[test]
    fn strict_combinations() {
        let c = strict_convex_combination(&dvector![0.5, 0.5], &dmatrix![0.0, 1.0; 0.0, 1.0], TOL).unwrap();
        assert!((c - dvector![0.5, 0.5]).amax() < 1e-12);
        let c = strict_convex_combination(&dvector![1.0], &dmatrix![0.0, 2.0], TOL).unwrap();
        assert!((c - dvector![0.5, 0.5]).amax() < 1e-12);

        let others = dmatrix![-2.0, -1.0, 1.0, 2.0; 1.0, 1.0, 1.0, 1.0; 1.0, 1.0, 1.0, 1.0];
        let x = dvector![0.0, 1.0, 1.0];
        let c = strict_convex_combination(&x, &others, TOL).unwrap();
        assert!(c.iter().all(|v| *v > 0.0));
        assert!((c.sum() - 1.0).abs() < 1e-12);
        assert!((&others * &c - &x).amax() < 1e-9);

        // Vertex of the hull: precondition violated.
        assert!(matches!(
            strict_convex_combination(&dvector![0.0], &dmatrix![0.0, 1.0], TOL),
            Err(Error::PreconditionViolation(_))
        ));
    }
}
