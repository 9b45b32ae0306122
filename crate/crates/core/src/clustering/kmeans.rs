//! Lloyd's k-means with k-means++ seeding and seeded restarts.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    /// 0-based cluster per row.
    pub assignments: Vec<usize>,
    /// `k × dim` centroids.
    pub centroids: DMatrix<f64>,
    pub inertia: f64,
}

/// Cluster the rows of `points`. Restart `r` uses its own generator derived
/// from `seed`; the lowest-inertia run wins, ties going to the earlier run.
pub fn kmeans(points: &DMatrix<f64>, k: usize, restarts: usize, max_iters: usize, seed: u64) -> Result<KMeansResult> {
    let n = points.nrows();
    if k == 0 || k > n {
        return Err(invalid(format!("cannot form {k} clusters from {n} rows")));
    }
    if restarts == 0 {
        return Err(invalid("need at least one restart"));
    }
    let runs: Vec<KMeansResult> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            lloyd(points, plus_plus(points, k, &mut rng), max_iters)
        })
        .collect();
    let mut best = 0;
    for (r, run) in runs.iter().enumerate() {
        if run.inertia < runs[best].inertia {
            best = r;
        }
    }
    Ok(runs.into_iter().nth(best).expect("at least one run"))
}

fn sq_dist(points: &DMatrix<f64>, i: usize, centroids: &DMatrix<f64>, c: usize) -> f64 {
    (points.row(i) - centroids.row(c)).norm_squared()
}

fn plus_plus(points: &DMatrix<f64>, k: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let n = points.nrows();
    let mut centroids = DMatrix::zeros(k, points.ncols());
    centroids.set_row(0, &points.row(rng.random_range(0..n)));
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(points, i, &centroids, 0)).collect();
    for c in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, w) in d2.iter().enumerate() {
                if target < *w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centroids.set_row(c, &points.row(pick));
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(points, i, &centroids, c));
        }
    }
    centroids
}

fn lloyd(points: &DMatrix<f64>, mut centroids: DMatrix<f64>, max_iters: usize) -> KMeansResult {
    let n = points.nrows();
    let k = centroids.nrows();
    let mut assignments = vec![usize::MAX; n];
    for _ in 0..max_iters {
        let mut changed = false;
        for (i, slot) in assignments.iter_mut().enumerate() {
            let best = (0..k)
                .min_by(|&a, &b| sq_dist(points, i, &centroids, a).total_cmp(&sq_dist(points, i, &centroids, b)))
                .expect("k > 0");
            if *slot != best {
                *slot = best;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = DMatrix::zeros(k, points.ncols());
        let mut counts = vec![0usize; k];
        for (i, &c) in assignments.iter().enumerate() {
            let mut row = sums.row_mut(c);
            row += points.row(i);
            counts[c] += 1;
        }
        for c in 0..k {
            // Empty clusters keep their previous centroid.
            if counts[c] > 0 {
                centroids.set_row(c, &(sums.row(c) / counts[c] as f64));
            }
        }
    }
    let inertia = assignments.iter().enumerate().map(|(i, &c)| sq_dist(points, i, &centroids, c)).sum();
    KMeansResult { assignments, centroids, inertia }
}
