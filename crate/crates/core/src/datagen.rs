//! Small hand-made arrangements with known answers, and seeded random
//! arrangements for property sweeps.

use nalgebra::{dmatrix, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{is_affinely_independent, PointKind};
use crate::model::{AffineSubspaceModel, Arrangement, DataMatrix};
use crate::numerics::orthonormal_basis;

const REJECTION_BUDGET: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ToyId {
    TwoLinesR3,
    TwoLinesR2,
    TriangleLineR3,
    TriangleR2,
    DualExampleR2,
}

impl ToyId {
    pub const ALL: [ToyId; 5] = [
        ToyId::TwoLinesR3,
        ToyId::TwoLinesR2,
        ToyId::TriangleLineR3,
        ToyId::TriangleR2,
        ToyId::DualExampleR2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ToyId::TwoLinesR3 => "two-lines-r3",
            ToyId::TwoLinesR2 => "two-lines-r2",
            ToyId::TriangleLineR3 => "triangle-line-r3",
            ToyId::TriangleR2 => "triangle-r2",
            ToyId::DualExampleR2 => "dual-example-r2",
        }
    }
}

impl std::str::FromStr for ToyId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.to_ascii_lowercase().replace('_', "-");
        ToyId::ALL
            .into_iter()
            .find(|t| t.name() == norm || format!("{t:?}").to_ascii_lowercase() == norm)
            .ok_or_else(|| invalid(format!("unknown toy dataset '{s}'")))
    }
}

/// Facts a correct implementation must reproduce on a toy dataset. Vectors
/// are indexed by point; `None` means nothing is claimed for that point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectedFacts {
    pub affinely_independent: bool,
    pub kinds: Vec<PointKind>,
    pub subspace_preserving: Vec<Option<bool>>,
    pub nonnegative: Vec<Option<bool>>,
    pub incoherence_holds: Vec<Option<bool>>,
    pub clustering_error: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ToyDataset {
    pub id: ToyId,
    pub arrangement: Arrangement,
    pub facts: ExpectedFacts,
}

fn line(offset: DVector<f64>, dir: DVector<f64>) -> AffineSubspaceModel {
    let n = dir.norm();
    AffineSubspaceModel::new(offset, DMatrix::from_column_slice(dir.len(), 1, (dir / n).as_slice()))
        .expect("unit direction")
}

fn plane_z0() -> AffineSubspaceModel {
    AffineSubspaceModel::new(DVector::zeros(3), dmatrix![1.0, 0.0; 0.0, 1.0; 0.0, 0.0]).expect("orthonormal")
}

fn stack(blocks: &[DMatrix<f64>]) -> (DMatrix<f64>, Vec<usize>) {
    let d = blocks[0].nrows();
    let n: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(d, n);
    let mut labels = Vec::with_capacity(n);
    let mut col = 0;
    for (l, b) in blocks.iter().enumerate() {
        out.columns_mut(col, b.ncols()).copy_from(b);
        col += b.ncols();
        labels.extend(std::iter::repeat_n(l + 1, b.ncols()));
    }
    (out, labels)
}

fn build(subspaces: Vec<AffineSubspaceModel>, blocks: &[DMatrix<f64>]) -> Arrangement {
    let (pts, labels) = stack(blocks);
    let data = DataMatrix::new(pts, Some(labels)).expect("toy data is valid");
    Arrangement::new(subspaces, data, 1e-12).expect("toy points lie on their subspaces")
}

/// The four points `(-1,1), (0,1), (1,1), (2,1)` on the line `y = 1`.
pub fn dual_example_line() -> DMatrix<f64> {
    dmatrix![-1.0, 0.0, 1.0, 2.0; 1.0, 1.0, 1.0, 1.0]
}

/// The region in which a lone second-cluster sample `p` satisfies the
/// incoherence condition for each of the four line points.
pub fn dual_example_regions(p: [f64; 2]) -> [bool; 4] {
    let [x1, x2] = p;
    let mid = -3.0 < x2 && x2 < 1.0;
    [-3.0 + 2.0 * x1 < x2 && x2 < 1.0 + 2.0 * x1, mid, mid, -1.0 < x1 && x1 < 1.0]
}

/// The four-point line plus a single second-cluster sample at `p`.
pub fn dual_example(p: [f64; 2]) -> ToyDataset {
    let pv = DVector::from_column_slice(&p);
    let arrangement = build(
        vec![
            line(DVector::from_column_slice(&[0.0, 1.0]), DVector::from_column_slice(&[1.0, 0.0])),
            AffineSubspaceModel::point(pv.clone()).expect("finite point"),
        ],
        &[dual_example_line(), DMatrix::from_column_slice(2, 1, &p)],
    );
    use PointKind::*;
    let regions = dual_example_regions(p);
    ToyDataset {
        id: ToyId::DualExampleR2,
        arrangement,
        facts: ExpectedFacts {
            affinely_independent: (pv[1] - 1.0).abs() > 0.0,
            kinds: vec![Extreme, RelativeInterior, RelativeInterior, Extreme, Extreme],
            subspace_preserving: vec![None; 5],
            nonnegative: vec![None; 5],
            incoherence_holds: regions.iter().map(|&b| Some(b)).chain([None]).collect(),
            clustering_error: None,
        },
    }
}

pub fn make_toy(id: ToyId) -> ToyDataset {
    use PointKind::*;
    match id {
        ToyId::TwoLinesR3 => {
            let x1 = dmatrix![
                -2.0, -1.0, 0.0, 1.0, 2.0;
                1.0, 1.0, 1.0, 1.0, 1.0;
                1.0, 1.0, 1.0, 1.0, 1.0
            ];
            let x2 = dmatrix![
                1.0, 0.0, -1.0, -2.0, -3.0;
                0.0, 1.0, 2.0, 3.0, 4.0;
                0.0, 0.0, 0.0, 0.0, 0.0
            ];
            let subs = vec![
                line(DVector::from_column_slice(&[0.0, 1.0, 1.0]), DVector::from_column_slice(&[1.0, 0.0, 0.0])),
                line(DVector::from_column_slice(&[1.0, 0.0, 0.0]), DVector::from_column_slice(&[-1.0, 1.0, 0.0])),
            ];
            let line_kinds = [Extreme, RelativeInterior, RelativeInterior, RelativeInterior, Extreme];
            ToyDataset {
                id,
                arrangement: build(subs, &[x1, x2]),
                facts: ExpectedFacts {
                    affinely_independent: true,
                    kinds: line_kinds.iter().chain(line_kinds.iter()).copied().collect(),
                    subspace_preserving: vec![Some(true); 10],
                    nonnegative: line_kinds.iter().chain(line_kinds.iter()).map(|k| Some(*k != Extreme)).collect(),
                    incoherence_holds: vec![None; 10],
                    clustering_error: Some(0.0),
                },
            }
        }
        ToyId::TwoLinesR2 => {
            let x1 = dual_example_line();
            let x2 = dmatrix![-1.0, 0.0, 1.0, 2.0; -4.0, -4.0, -4.0, -4.0];
            let subs = vec![
                line(DVector::from_column_slice(&[0.0, 1.0]), DVector::from_column_slice(&[1.0, 0.0])),
                line(DVector::from_column_slice(&[0.0, -4.0]), DVector::from_column_slice(&[1.0, 0.0])),
            ];
            let kinds = [Extreme, RelativeInterior, RelativeInterior, Extreme];
            ToyDataset {
                id,
                arrangement: build(subs, &[x1, x2]),
                facts: ExpectedFacts {
                    affinely_independent: false,
                    kinds: kinds.iter().chain(kinds.iter()).copied().collect(),
                    subspace_preserving: kinds.iter().chain(kinds.iter()).map(|k| Some(*k != Extreme)).collect(),
                    nonnegative: vec![None; 8],
                    incoherence_holds: vec![None; 8],
                    clustering_error: Some(0.0),
                },
            }
        }
        ToyId::TriangleLineR3 => {
            let x1 = dmatrix![
                0.0, 1.0, 2.0, 0.5, 1.5, 1.0;
                1.0, 1.0, 1.0, 0.0, 0.0, -1.0;
                0.0, 0.0, 0.0, 0.0, 0.0, 0.0
            ];
            let x2 = dmatrix![
                0.0, 1.0, 2.0, 3.0, 4.0, 5.0;
                -2.0, -2.0, -2.0, -2.0, -2.0, -2.0;
                1.0, 1.0, 1.0, 1.0, 1.0, 1.0
            ];
            let subs = vec![
                plane_z0(),
                line(DVector::from_column_slice(&[0.0, -2.0, 1.0]), DVector::from_column_slice(&[1.0, 0.0, 0.0])),
            ];
            let kinds = vec![
                Extreme,
                BoundaryFace,
                Extreme,
                BoundaryFace,
                BoundaryFace,
                Extreme,
                Extreme,
                RelativeInterior,
                RelativeInterior,
                RelativeInterior,
                RelativeInterior,
                Extreme,
            ];
            let preserving = kinds.iter().map(|k| if *k == Extreme { None } else { Some(true) }).collect();
            ToyDataset {
                id,
                arrangement: build(subs, &[x1, x2]),
                facts: ExpectedFacts {
                    affinely_independent: false,
                    kinds,
                    subspace_preserving: preserving,
                    nonnegative: vec![None; 12],
                    incoherence_holds: vec![None; 12],
                    clustering_error: None,
                },
            }
        }
        ToyId::TriangleR2 => {
            let pts = triangle_points();
            let subspace =
                AffineSubspaceModel::new(DVector::zeros(2), DMatrix::identity(2, 2)).expect("orthonormal");
            let kinds: Vec<PointKind> =
                (0..16).map(|i| if matches!(i, 0 | 4 | 8) { Extreme } else { BoundaryFace }).collect();
            let nonneg = kinds.iter().map(|k| Some(*k != Extreme)).collect();
            ToyDataset {
                id,
                arrangement: build(vec![subspace], &[pts]),
                facts: ExpectedFacts {
                    affinely_independent: true,
                    kinds,
                    subspace_preserving: vec![Some(true); 16],
                    nonnegative: nonneg,
                    incoherence_holds: vec![None; 16],
                    clustering_error: None,
                },
            }
        }
        ToyId::DualExampleR2 => dual_example([0.0, 0.0]),
    }
}

/// Sixteen points on the edges of the triangle `(0,-1), (1,1), (2,-1)`:
/// five on the first edge, five on the second (sharing the apex) and the
/// third edge sampled at eighths, closing back at the first vertex.
fn triangle_points() -> DMatrix<f64> {
    let v = [[0.0, -1.0], [1.0, 1.0], [2.0, -1.0]];
    let lerp = |a: [f64; 2], b: [f64; 2], t: f64| [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
    let mut cols: Vec<[f64; 2]> = Vec::with_capacity(16);
    for k in 0..4 {
        cols.push(lerp(v[0], v[1], k as f64 / 4.0));
    }
    for k in 0..4 {
        cols.push(lerp(v[1], v[2], k as f64 / 4.0));
    }
    for k in 0..8 {
        cols.push(lerp(v[2], v[0], k as f64 / 8.0));
    }
    DMatrix::from_fn(2, 16, |r, c| cols[c][r])
}

/// Parameters of [`random_arrangement`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomArrangementSpec {
    pub dims: Vec<usize>,
    pub ambient: usize,
    pub points_per_cluster: usize,
    /// Half-width of the sampling box in subspace coordinates.
    pub spread: f64,
    /// Standard deviation of the subspace offsets.
    pub separation: f64,
    pub force_independent: bool,
    pub seed: u64,
}

impl RandomArrangementSpec {
    pub fn new(dims: Vec<usize>, ambient: usize, points_per_cluster: usize, seed: u64) -> Self {
        Self {
            dims,
            ambient,
            points_per_cluster,
            spread: 1.0,
            separation: 1.0,
            force_independent: false,
            seed,
        }
    }
}

/// Random affine subspaces with Gaussian offsets and orthonormalized
/// Gaussian bases, each sampled uniformly in a box of its own coordinates.
pub fn random_arrangement(spec: &RandomArrangementSpec) -> Result<Arrangement> {
    let d = spec.ambient;
    if spec.dims.is_empty() || d == 0 {
        return Err(invalid("need at least one subspace and a positive ambient dimension"));
    }
    if let Some(bad) = spec.dims.iter().find(|&&k| k >= d) {
        return Err(invalid(format!("subspace dimension {bad} must be below the ambient dimension {d}")));
    }
    if spec.points_per_cluster == 0 {
        return Err(invalid("need at least one point per cluster"));
    }
    if !(spec.spread > 0.0 && spec.separation >= 0.0) {
        return Err(invalid("spread must be positive and separation nonnegative"));
    }
    let needed: usize = spec.dims.iter().sum::<usize>() + spec.dims.len() - 1;
    if spec.force_independent && needed > d {
        return Err(Error::GenerationFailure(format!(
            "affine independence needs dimension {needed}, ambient is {d}"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    for _ in 0..REJECTION_BUDGET {
        let subspaces: Vec<AffineSubspaceModel> = spec
            .dims
            .iter()
            .map(|&k| {
                let offset = DVector::from_fn(d, |_, _| spec.separation * rng.sample::<f64, _>(StandardNormal));
                let raw = DMatrix::from_fn(d, k, |_, _| rng.sample::<f64, _>(StandardNormal));
                let basis = orthonormal_basis(&raw, 1e-10);
                (offset, basis)
            })
            .map(|(o, b)| AffineSubspaceModel::new(o, b))
            .collect::<Result<_>>()?;
        if subspaces.iter().zip(&spec.dims).any(|(s, &k)| s.dim() != k) {
            continue;
        }
        if spec.force_independent && !is_affinely_independent(&subspaces, 1e-9)? {
            continue;
        }
        let blocks: Vec<DMatrix<f64>> = subspaces
            .iter()
            .map(|s| {
                let coords =
                    DMatrix::from_fn(s.dim(), spec.points_per_cluster, |_, _| rng.random_range(-spec.spread..=spec.spread));
                let mut pts = s.basis() * coords;
                for mut col in pts.column_iter_mut() {
                    col += s.offset();
                }
                pts
            })
            .collect();
        let (pts, labels) = stack(&blocks);
        let data = DataMatrix::new(pts, Some(labels))?;
        return Arrangement::new(subspaces, data, 1e-12);
    }
    Err(Error::GenerationFailure(format!("no acceptable arrangement in {REJECTION_BUDGET} draws")))
}

/// Add i.i.d. Gaussian noise of standard deviation `sigma` to every entry.
pub fn add_noise(data: &DataMatrix, sigma: f64, seed: u64) -> Result<DataMatrix> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(invalid(format!("noise level must be nonnegative, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(data.clone());
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| invalid(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = data.points();
    let noisy = DMatrix::from_fn(p.nrows(), p.ncols(), |r, c| p[(r, c)] + normal.sample(&mut rng));
    DataMatrix::new(noisy, data.labels().map(|l| l.to_vec()))
}
