//! Nearest-neighbour affinity graph, its Laplacian, and the semi-supervised
//! label structures `Y` (one-hot on labeled rows) and `S` (label indicator).

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::DataMatrix;
use crate::error::{Error, Result};

/// Edge weighting of the kNN graph.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum WeightScheme {
    Binary,
    /// `exp(−‖xᵢ − xⱼ‖² / bandwidth²)`.
    Heat { bandwidth: f64 },
}

/// Graph and label context shared by every solver iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphContext {
    pub weights: DMatrix<f64>,
    /// Diagonal of D.
    pub degree: DVector<f64>,
    pub laplacian: DMatrix<f64>,
    /// n×c label matrix, one-hot on labeled rows.
    pub y: DMatrix<f64>,
    /// Diagonal of S (0/1).
    pub s: DVector<f64>,
    pub labeled_mask: Vec<bool>,
}

impl GraphContext {
    /// Builds the kNN graph on the samples of `data` and draws a stratified
    /// labeled subset at fraction `p`.
    pub fn build(
        data: &DataMatrix,
        knn: usize,
        scheme: WeightScheme,
        p: f64,
        seed: u64,
    ) -> Result<Self> {
        let weights = build_knn_graph(&data.values, knn, scheme)?;
        let labels = build_label_structures(data, p, seed)?;
        Self::from_parts(weights, labels)
    }

    pub fn from_parts(weights: DMatrix<f64>, labels: LabelStructures) -> Result<Self> {
        let (degree, laplacian) = laplacian(&weights)?;
        if labels.y.nrows() != weights.nrows() {
            return Err(Error::dim(
                "graph context",
                format!("W has {} rows, Y has {}", weights.nrows(), labels.y.nrows()),
            ));
        }
        Ok(GraphContext {
            weights,
            degree,
            laplacian,
            y: labels.y,
            s: labels.s,
            labeled_mask: labels.mask,
        })
    }

    pub fn samples(&self) -> usize {
        self.laplacian.nrows()
    }

    pub fn classes(&self) -> usize {
        self.y.ncols()
    }

    /// S as a dense diagonal matrix.
    pub fn s_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.s)
    }

    pub fn labeled_count(&self) -> usize {
        self.labeled_mask.iter().filter(|&&m| m).count()
    }
}

/// Symmetric kNN affinity over the columns of `x`.
///
/// `j` is linked to `i` when either is among the other's `knn` nearest
/// neighbours. Distance ties go to the lower index.
pub fn build_knn_graph(x: &DMatrix<f64>, knn: usize, scheme: WeightScheme) -> Result<DMatrix<f64>> {
    let n = x.ncols();
    if knn == 0 || knn >= n {
        return Err(Error::param(
            "knn",
            format!("must lie in [1, n) with n = {n}, got {knn}"),
        ));
    }
    if let WeightScheme::Heat { bandwidth } = scheme {
        if !(bandwidth > 0.0) {
            return Err(Error::param("bandwidth", "heat kernel bandwidth must be > 0"));
        }
    }
    let mut dist = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let d2 = x.column(i).metric_distance(&x.column(j)).powi(2);
            dist[(i, j)] = d2;
            dist[(j, i)] = d2;
        }
    }
    let mut w = DMatrix::<f64>::zeros(n, n);
    let mut order: Vec<usize> = Vec::with_capacity(n - 1);
    for i in 0..n {
        order.clear();
        order.extend((0..n).filter(|&j| j != i));
        order.sort_by(|&a, &b| dist[(i, a)].total_cmp(&dist[(i, b)]).then(a.cmp(&b)));
        for &j in &order[..knn] {
            let weight = match scheme {
                WeightScheme::Binary => 1.0,
                WeightScheme::Heat { bandwidth } => (-dist[(i, j)] / (bandwidth * bandwidth)).exp(),
            };
            w[(i, j)] = weight;
            w[(j, i)] = weight;
        }
    }
    Ok(w)
}

/// Degree vector and `L = D − W`.
pub fn laplacian(w: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = w.nrows();
    if w.ncols() != n {
        return Err(Error::dim("laplacian", format!("W is {}x{}", n, w.ncols())));
    }
    let scale = w.abs().max().max(1.0);
    for i in 0..n {
        if w[(i, i)] != 0.0 {
            return Err(Error::Contract {
                context: "laplacian",
                detail: format!("non-zero diagonal at {i}"),
            });
        }
        for j in 0..n {
            let v = w[(i, j)];
            if !(v >= 0.0) {
                return Err(Error::Contract {
                    context: "laplacian",
                    detail: format!("negative or non-finite weight at ({i}, {j})"),
                });
            }
            if (v - w[(j, i)]).abs() > 1e-12 * scale {
                return Err(Error::Contract {
                    context: "laplacian",
                    detail: format!("W is not symmetric at ({i}, {j})"),
                });
            }
        }
    }
    let degree = DVector::from_iterator(n, w.row_iter().map(|r| r.sum()));
    let l = DMatrix::from_diagonal(&degree) - w;
    Ok((degree, l))
}

/// Label matrix `Y`, indicator diagonal `S`, and the labeled mask.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelStructures {
    pub y: DMatrix<f64>,
    pub s: DVector<f64>,
    pub mask: Vec<bool>,
}

impl LabelStructures {
    /// Structures for an explicit labeled subset.
    pub fn from_mask(data: &DataMatrix, mask: Vec<bool>) -> Result<Self> {
        let n = data.samples();
        if mask.len() != n {
            return Err(Error::dim(
                "label structures",
                format!("mask has {} entries for {n} samples", mask.len()),
            ));
        }
        let c = data.classes;
        let mut y = DMatrix::zeros(n, c);
        let mut s = DVector::zeros(n);
        for (i, &labeled) in mask.iter().enumerate() {
            if labeled {
                let class = data.class_of(i).ok_or_else(|| Error::Contract {
                    context: "label structures",
                    detail: format!("sample {i} is marked labeled but has no ground truth"),
                })?;
                y[(i, class)] = 1.0;
                s[i] = 1.0;
            }
        }
        Ok(LabelStructures { y, s, mask })
    }
}

/// Marks `⌈p·n_j⌉` samples of every class `j` as labeled, uniformly at random.
pub fn build_label_structures(data: &DataMatrix, p: f64, seed: u64) -> Result<LabelStructures> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::param(
            "labeled_fraction",
            format!("must lie in (0, 1], got {p}"),
        ));
    }
    if data.labels.is_none() {
        return Err(Error::Contract {
            context: "label structures",
            detail: "data has no ground-truth labels".into(),
        });
    }
    let c = data.classes;
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); c];
    for i in 0..data.samples() {
        if let Some(class) = data.class_of(i) {
            members[class].push(i);
        }
    }
    if let Some(empty) = members.iter().position(Vec::is_empty) {
        return Err(Error::Contract {
            context: "label structures",
            detail: format!("class {empty} has no samples"),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mask = vec![false; data.samples()];
    for group in &mut members {
        // Guard against p·n landing a hair above an integer (0.3·10).
        let take = ((p * group.len() as f64) - 1e-9).ceil().max(1.0) as usize;
        group.shuffle(&mut rng);
        for &i in group.iter().take(take.min(group.len())) {
            mask[i] = true;
        }
    }
    LabelStructures::from_mask(data, mask)
}
