//! Plain NMF with multiplicative updates, and k-means.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Denominator floor of the multiplicative updates.
pub const DENOM_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Factors {
    /// NMF: d×r basis. k-means: d×k centroids.
    pub u: DMatrix<f64>,
    /// NMF: n×r coefficients. k-means: n×k assignment indicator.
    pub v: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineResult {
    pub labels: Vec<usize>,
    pub factors: Option<Factors>,
    /// Objective at the start and after every iteration: ‖X − UVᵀ‖²_F for
    /// NMF, the within-cluster sum of squares for k-means.
    pub objective_trace: Vec<f64>,
}

impl BaselineResult {
    pub fn iterations(&self) -> usize {
        self.objective_trace.len().saturating_sub(1)
    }
}

/// Which baseline to run next to the solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    Nmf,
    Kmeans,
}

impl BaselineKind {
    pub fn name(self) -> &'static str {
        match self {
            BaselineKind::Nmf => "nmf",
            BaselineKind::Kmeans => "kmeans",
        }
    }

    /// Runs this baseline with `k` components on the columns of `x`.
    pub fn run(self, x: &DMatrix<f64>, k: usize, iters: usize, seed: u64) -> Result<BaselineResult> {
        match self {
            BaselineKind::Nmf => nmf_multiplicative(x, k, iters, seed),
            BaselineKind::Kmeans => kmeans(x, k, iters, seed),
        }
    }
}

/// Lee–Seung multiplicative updates for `min ‖X − UVᵀ‖²_F`, U, V ≥ 0.
/// Samples are labeled by the argmax of their row of V.
pub fn nmf_multiplicative(x: &DMatrix<f64>, r: usize, iters: usize, seed: u64) -> Result<BaselineResult> {
    let (d, n) = x.shape();
    if r == 0 || r > d.min(n) {
        return Err(Error::param("rank", format!("must lie in [1, {}], got {r}", d.min(n))));
    }
    if x.iter().any(|&v| !v.is_finite() || v < 0.0) {
        return Err(Error::Contract {
            context: "nmf",
            detail: "X must be finite and non-negative".into(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = (x.mean() / r as f64).sqrt().max(DENOM_FLOOR);
    let mut u = DMatrix::from_fn(d, r, |_, _| scale * rng.random::<f64>());
    let mut v = DMatrix::from_fn(n, r, |_, _| scale * rng.random::<f64>());
    let objective = |u: &DMatrix<f64>, v: &DMatrix<f64>| (x - u * v.transpose()).norm_squared();
    let mut trace = vec![objective(&u, &v)];
    for _ in 0..iters {
        let num = x * &v;
        let den = &u * (v.transpose() * &v);
        u.zip_zip_apply(&num, &den, |ui, a, b| *ui *= a / b.max(DENOM_FLOOR));
        let num = x.transpose() * &u;
        let den = &v * (u.transpose() * &u);
        v.zip_zip_apply(&num, &den, |vi, a, b| *vi *= a / b.max(DENOM_FLOOR));
        trace.push(objective(&u, &v));
    }
    Ok(BaselineResult {
        labels: argmax_rows(&v),
        factors: Some(Factors { u, v }),
        objective_trace: trace,
    })
}

fn argmax_rows(m: &DMatrix<f64>) -> Vec<usize> {
    m.row_iter()
        .map(|row| {
            let mut best = 0;
            for j in 1..row.len() {
                if row[j] > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}

fn sq_dist(x: &DMatrix<f64>, i: usize, c: &DMatrix<f64>, k: usize) -> f64 {
    x.column(i)
        .iter()
        .zip(c.column(k).iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum()
}

/// Lloyd's algorithm on the columns of `x` with k-means++ seeding. Clusters
/// that empty out are reseeded with the point farthest from its centroid.
pub fn kmeans(x: &DMatrix<f64>, k: usize, iters: usize, seed: u64) -> Result<BaselineResult> {
    let (d, n) = x.shape();
    if k == 0 || k > n {
        return Err(Error::param("k", format!("must lie in [1, {n}], got {k}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = DMatrix::zeros(d, k);
    let mut chosen = vec![false; n];
    let first = rng.random_range(0..n);
    centroids.set_column(0, &x.column(first));
    chosen[first] = true;
    let mut nearest: Vec<f64> = (0..n).map(|i| sq_dist(x, i, &centroids, 0)).collect();
    for c in 1..k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = None;
            for (i, &w) in nearest.iter().enumerate() {
                if w > 0.0 {
                    pick = Some(i);
                    if target < w {
                        break;
                    }
                    target -= w;
                }
            }
            pick
        } else {
            None
        };
        // All remaining mass is zero (duplicates): take an unused point.
        let pick = pick.unwrap_or_else(|| chosen.iter().position(|&used| !used).unwrap_or(0));
        chosen[pick] = true;
        centroids.set_column(c, &x.column(pick));
        for (i, near) in nearest.iter_mut().enumerate() {
            *near = near.min(sq_dist(x, i, &centroids, c));
        }
    }

    let mut labels = vec![0usize; n];
    assign(x, &centroids, &mut labels);
    let mut trace = vec![wcss(x, &centroids, &labels)];
    for _ in 0..iters {
        update_centroids(x, &mut centroids, &mut labels);
        let changed = assign(x, &centroids, &mut labels);
        trace.push(wcss(x, &centroids, &labels));
        if !changed {
            break;
        }
    }
    let mut indicator = DMatrix::zeros(n, k);
    for (i, &l) in labels.iter().enumerate() {
        indicator[(i, l)] = 1.0;
    }
    Ok(BaselineResult {
        labels,
        factors: Some(Factors {
            u: centroids,
            v: indicator,
        }),
        objective_trace: trace,
    })
}

/// Nearest centroid for every point. A point stays put when its current
/// centroid ties for nearest, otherwise ties go to the lower index. Returns
/// whether any assignment changed.
fn assign(x: &DMatrix<f64>, centroids: &DMatrix<f64>, labels: &mut [usize]) -> bool {
    let mut changed = false;
    for (i, label) in labels.iter_mut().enumerate() {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for k in 0..centroids.ncols() {
            let dist = sq_dist(x, i, centroids, k);
            if dist < best_d {
                best_d = dist;
                best = k;
            }
        }
        if sq_dist(x, i, centroids, *label) <= best_d {
            best = *label;
        }
        if *label != best {
            *label = best;
            changed = true;
        }
    }
    changed
}

fn update_centroids(x: &DMatrix<f64>, centroids: &mut DMatrix<f64>, labels: &mut [usize]) {
    let k = centroids.ncols();
    loop {
        let mut counts = vec![0usize; k];
        labels.iter().for_each(|&l| counts[l] += 1);
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            break;
        };
        // Move the worst-served point from a cluster with at least two members.
        let far = (0..labels.len())
            .filter(|&i| counts[labels[i]] >= 2)
            .max_by(|&a, &b| {
                sq_dist(x, a, centroids, labels[a])
                    .total_cmp(&sq_dist(x, b, centroids, labels[b]))
                    .then(b.cmp(&a))
            })
            .expect("k <= n leaves a cluster with two members");
        labels[far] = empty;
        centroids.set_column(empty, &x.column(far));
    }
    let mut sums = DMatrix::zeros(x.nrows(), k);
    let mut counts = vec![0usize; k];
    for (i, &l) in labels.iter().enumerate() {
        sums.column_mut(l).axpy(1.0, &x.column(i), 1.0);
        counts[l] += 1;
    }
    for (c, &count) in counts.iter().enumerate() {
        centroids.set_column(c, &(sums.column(c) / count as f64));
    }
}

/// Within-cluster sum of squares.
pub fn wcss(x: &DMatrix<f64>, centroids: &DMatrix<f64>, labels: &[usize]) -> f64 {
    labels
        .iter()
        .enumerate()
        .map(|(i, &l)| sq_dist(x, i, centroids, l))
        .sum()
}
