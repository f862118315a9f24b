//! Clustering agreement: accuracy under the best label matching, pairwise F1,
//! normalized mutual information and purity.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum-cost perfect matching on a square cost matrix (Kuhn–Munkres with
/// potentials, O(k³)). Entry `i` of the result is the column given to row `i`.
/// A rectangular matrix is padded with zero-cost cells first.
pub fn hungarian_assignment(cost: &DMatrix<f64>) -> Vec<usize> {
    let k = cost.nrows().max(cost.ncols());
    if k == 0 {
        return Vec::new();
    }
    let at = |i: usize, j: usize| {
        if i < cost.nrows() && j < cost.ncols() {
            cost[(i, j)]
        } else {
            0.0
        }
    };
    // 1-based arrays; index 0 is the virtual root of each augmenting path.
    let mut u = vec![0.0; k + 1];
    let mut v = vec![0.0; k + 1];
    let mut matched_row = vec![0usize; k + 1];
    let mut way = vec![0usize; k + 1];
    for i in 1..=k {
        matched_row[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; k + 1];
        let mut used = vec![false; k + 1];
        loop {
            used[j0] = true;
            let i0 = matched_row[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=k {
                if !used[j] {
                    let cur = at(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=k {
                if used[j] {
                    u[matched_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if matched_row[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            matched_row[j0] = matched_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; k];
    for j in 1..=k {
        assignment[matched_row[j] - 1] = j - 1;
    }
    assignment.truncate(cost.nrows());
    assignment
}

/// Contingency counts between two labelings. Rows follow the sorted distinct
/// predicted labels, columns the sorted distinct true labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Contingency {
    pub counts: Vec<Vec<usize>>,
    pub total: usize,
}

impl Contingency {
    pub fn new(pred: &[usize], truth: &[usize]) -> Result<Self> {
        if pred.len() != truth.len() {
            return Err(Error::Contract {
                context: "metrics",
                detail: format!("{} predictions for {} labels", pred.len(), truth.len()),
            });
        }
        let index = |labels: &[usize]| {
            let ids: BTreeMap<usize, usize> = labels.iter().map(|&l| (l, 0)).collect();
            ids.into_keys().enumerate().map(|(i, l)| (l, i)).collect::<BTreeMap<_, _>>()
        };
        let (rows, cols) = (index(pred), index(truth));
        let mut counts = vec![vec![0usize; cols.len()]; rows.len()];
        for (p, t) in pred.iter().zip(truth) {
            counts[rows[p]][cols[t]] += 1;
        }
        Ok(Contingency {
            counts,
            total: pred.len(),
        })
    }

    fn row_sums(&self) -> Vec<usize> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    fn col_sums(&self) -> Vec<usize> {
        let cols = self.counts.first().map_or(0, Vec::len);
        (0..cols).map(|j| self.counts.iter().map(|r| r[j]).sum()).collect()
    }

    /// Square table padded with zero rows or columns.
    pub fn padded(&self) -> Vec<Vec<usize>> {
        let rows = self.counts.len();
        let cols = self.counts.first().map_or(0, Vec::len);
        let k = rows.max(cols);
        (0..k)
            .map(|i| (0..k).map(|j| if i < rows && j < cols { self.counts[i][j] } else { 0 }).collect())
            .collect()
    }
}

/// Fraction of samples matched under the best one-to-one label mapping.
pub fn accuracy(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let table = Contingency::new(pred, truth)?;
    Ok(accuracy_from(&table))
}

fn accuracy_from(table: &Contingency) -> f64 {
    if table.total == 0 {
        return 0.0;
    }
    let padded = table.padded();
    let k = padded.len();
    let cost = DMatrix::from_fn(k, k, |i, j| -(padded[i][j] as f64));
    let assignment = hungarian_assignment(&cost);
    let matched: usize = assignment.iter().enumerate().map(|(i, &j)| padded[i][j]).sum();
    matched as f64 / table.total as f64
}

fn pairs(m: usize) -> f64 {
    (m * m.saturating_sub(1) / 2) as f64
}

/// Pair-counting F1: precision and recall of "same cluster" decisions over all
/// unordered sample pairs. Two all-singleton partitions score 1.
pub fn pairwise_f1(pred: &[usize], truth: &[usize]) -> Result<f64> {
    Ok(f1_from(&Contingency::new(pred, truth)?))
}

fn f1_from(table: &Contingency) -> f64 {
    let tp: f64 = table.counts.iter().flatten().map(|&c| pairs(c)).sum();
    let pred_pairs: f64 = table.row_sums().into_iter().map(pairs).sum();
    let true_pairs: f64 = table.col_sums().into_iter().map(pairs).sum();
    if pred_pairs == 0.0 && true_pairs == 0.0 {
        return 1.0;
    }
    let precision = if pred_pairs > 0.0 { tp / pred_pairs } else { 0.0 };
    let recall = if true_pairs > 0.0 { tp / true_pairs } else { 0.0 };
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Sums after sorting so the result does not depend on term order.
fn stable_sum(mut terms: Vec<f64>) -> f64 {
    terms.sort_by(f64::total_cmp);
    terms.into_iter().sum()
}

fn entropy(sizes: &[usize], total: f64) -> f64 {
    stable_sum(
        sizes
            .iter()
            .filter(|&&s| s > 0)
            .map(|&s| {
                let p = s as f64 / total;
                -p * p.ln()
            })
            .collect(),
    )
}

/// `MI(K, T) / max(H(K), H(T))`, zero when both partitions are a single block.
pub fn nmi(pred: &[usize], truth: &[usize]) -> Result<f64> {
    Ok(nmi_from(&Contingency::new(pred, truth)?))
}

fn nmi_from(table: &Contingency) -> f64 {
    if table.total == 0 {
        return 0.0;
    }
    let total = table.total as f64;
    let (rows, cols) = (table.row_sums(), table.col_sums());
    let h = entropy(&rows, total).max(entropy(&cols, total));
    if h <= 0.0 {
        return 0.0;
    }
    let mut terms = Vec::new();
    for (i, row) in table.counts.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if c > 0 {
                let p = c as f64 / total;
                let ratio = (c as f64 * total) / (rows[i] as f64 * cols[j] as f64);
                terms.push(p * ratio.ln());
            }
        }
    }
    (stable_sum(terms) / h).clamp(0.0, 1.0)
}

/// Fraction of samples in the majority true class of their predicted cluster.
pub fn purity(pred: &[usize], truth: &[usize]) -> Result<f64> {
    Ok(purity_from(&Contingency::new(pred, truth)?))
}

fn purity_from(table: &Contingency) -> f64 {
    if table.total == 0 {
        return 0.0;
    }
    let majority: usize = table
        .counts
        .iter()
        .map(|r| r.iter().copied().max().unwrap_or(0))
        .sum();
    majority as f64 / table.total as f64
}

/// All four scores plus the contingency table they were computed from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub acc: f64,
    pub f1: f64,
    pub nmi: f64,
    pub pur: f64,
    /// Predicted clusters × true classes, padded to square.
    pub confusion: Vec<Vec<usize>>,
}

pub fn evaluate(pred: &[usize], truth: &[usize]) -> Result<MetricReport> {
    let table = Contingency::new(pred, truth)?;
    Ok(MetricReport {
        acc: accuracy_from(&table),
        f1: f1_from(&table),
        nmi: nmi_from(&table),
        pur: purity_from(&table),
        confusion: table.padded(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn permutations(k: usize) -> Vec<Vec<usize>> {
        if k == 0 {
            return vec![Vec::new()];
        }
        let mut out = Vec::new();
        for p in permutations(k - 1) {
            for pos in 0..=p.len() {
                let mut q = p.clone();
                q.insert(pos, k - 1);
                out.push(q);
            }
        }
        out
    }

    #[test]
    fn hungarian_identity() {
        let cost = DMatrix::from_fn(4, 4, |i, j| if i == j { 0.0 } else { 1.0 });
        assert_eq!(hungarian_assignment(&cost), vec![0, 1, 2, 3]);
    }

    #[test]
    fn hungarian_constant_cost() {
        let cost = DMatrix::from_element(5, 5, 2.5);
        let a = hungarian_assignment(&cost);
        let total: f64 = a.iter().enumerate().map(|(i, &j)| cost[(i, j)]).sum();
        assert_eq!(total, 12.5);
        let mut cols = a.clone();
        cols.sort();
        assert_eq!(cols, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn hungarian_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for k in 1..=6 {
            let perms = permutations(k);
            for _ in 0..30 {
                let cost = DMatrix::from_fn(k, k, |_, _| rng.random_range(-5.0..5.0));
                let score = |p: &[usize]| p.iter().enumerate().map(|(i, &j)| cost[(i, j)]).sum::<f64>();
                let best = perms.iter().map(|p| score(p)).fold(f64::INFINITY, f64::min);
                let got = score(&hungarian_assignment(&cost));
                assert!((got - best).abs() < 1e-9, "k={k}: {got} vs {best}");
            }
        }
    }

    #[test]
    fn accuracy_examples() {
        assert_eq!(accuracy(&[0, 1, 2], &[0, 1, 2]).unwrap(), 1.0);
        assert_eq!(accuracy(&[0, 0, 1, 1], &[1, 1, 0, 0]).unwrap(), 1.0);
        assert!((accuracy(&[0, 1, 1], &[0, 0, 1]).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!(accuracy(&[0, 1], &[0]).is_err());
    }

    #[test]
    fn f1_examples() {
        assert_eq!(pairwise_f1(&[0, 0, 1, 1], &[0, 0, 1, 1]).unwrap(), 1.0);
        assert!((pairwise_f1(&[0, 0, 0, 0], &[0, 0, 1, 1]).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(pairwise_f1(&[0, 1, 2, 3], &[0, 0, 1, 1]).unwrap(), 0.0);
    }

    #[test]
    fn nmi_examples() {
        assert!((nmi(&[0, 0, 1, 1, 2], &[0, 0, 1, 1, 2]).unwrap() - 1.0).abs() < 1e-15);
        // Product partition: knowing one label says nothing about the other.
        assert!(nmi(&[0, 0, 1, 1], &[0, 1, 0, 1]).unwrap().abs() < 1e-12);
        assert_eq!(nmi(&[0, 0, 0], &[1, 1, 1]).unwrap(), 0.0);
        let (a, b) = ([0, 1, 1, 2, 0, 2, 2], [1, 1, 0, 0, 2, 2, 1]);
        assert_eq!(nmi(&a, &b).unwrap(), nmi(&b, &a).unwrap());
    }

    #[test]
    fn purity_examples() {
        assert_eq!(purity(&[0, 1, 1], &[0, 1, 1]).unwrap(), 1.0);
        assert!((purity(&[0, 0, 0, 0, 0, 0], &[0, 0, 1, 1, 2, 2]).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((purity(&[0, 0, 1], &[0, 1, 1]).unwrap() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn report_pads_confusion() {
        let r = evaluate(&[0, 0, 0, 1], &[0, 1, 2, 2]).unwrap();
        assert_eq!(r.confusion.len(), 3);
        assert!(r.confusion.iter().all(|row| row.len() == 3));
        let col_sums: Vec<usize> = (0..3).map(|j| r.confusion.iter().map(|row| row[j]).sum()).collect();
        assert_eq!(col_sums, vec![1, 1, 2]);
    }

    fn labels(max: usize) -> impl Strategy<Value = Vec<(usize, usize)>> {
        proptest::collection::vec((0..max, 0..max), 1..40)
    }

    proptest! {
        #[test]
        fn metrics_stay_in_unit_interval(pairs in labels(5)) {
            let (p, t): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
            let r = evaluate(&p, &t).unwrap();
            for v in [r.acc, r.f1, r.nmi, r.pur] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }

        #[test]
        fn acc_is_one_iff_same_partition(pairs in labels(3)) {
            let (p, t): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
            let same = (0..p.len()).all(|i| (0..p.len()).all(|j| (p[i] == p[j]) == (t[i] == t[j])));
            prop_assert_eq!(accuracy(&p, &t).unwrap() == 1.0, same);
        }

        #[test]
        fn invariant_under_relabeling(pairs in labels(4), shift in 1usize..4) {
            let (p, t): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
            let p2: Vec<usize> = p.iter().map(|&l| (l + shift) % 4).collect();
            let t2: Vec<usize> = t.iter().map(|&l| 10 + (3 - l)).collect();
            let a = evaluate(&p, &t).unwrap();
            let b = evaluate(&p2, &t2).unwrap();
            prop_assert!((a.acc - b.acc).abs() <= 1e-12);
            prop_assert!((a.f1 - b.f1).abs() <= 1e-12);
            prop_assert!((a.nmi - b.nmi).abs() <= 1e-12);
            prop_assert!((a.pur - b.pur).abs() <= 1e-12);
        }
    }
}
