use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Solver hyperparameters. Defaults follow the reference experimental setup
/// (λ = 1000, μ = 1, p = 0.3, ε₁ = ε₂ = 1e-4).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Hyperparams {
    /// Graph-regularization weight.
    pub lambda: f64,
    /// Label-propagation weight.
    pub mu: f64,
    /// ADMM penalty.
    pub beta: f64,
    /// Factor rank; `None` means one basis vector per class.
    pub rank: Option<usize>,
    pub labeled_fraction: f64,
    pub knn: usize,
    pub max_outer_iters: usize,
    /// Relative feasibility ‖X − UZᵀAᵀ − E‖/‖X‖ that ends the outer loop.
    pub outer_tol: f64,
    pub eps1: f64,
    pub eps2: f64,
    /// Exact-penalty weight of the U-subproblem; `None` picks 10·‖X‖_F/(d·n).
    pub ortho_penalty: Option<f64>,
    pub max_inner_iters: usize,
    pub seed: u64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            lambda: 1000.0,
            mu: 1.0,
            beta: 1.0,
            rank: None,
            labeled_fraction: 0.3,
            knn: 5,
            max_outer_iters: 200,
            outer_tol: 1e-5,
            eps1: 1e-4,
            eps2: 1e-4,
            ortho_penalty: None,
            max_inner_iters: 100,
            seed: 0,
        }
    }
}

impl Hyperparams {
    pub fn effective_rank(&self, classes: usize) -> usize {
        self.rank.unwrap_or(classes)
    }

    /// Checks ranges against a d×n problem with `classes` classes.
    pub fn validate(&self, d: usize, n: usize, classes: usize) -> Result<()> {
        fn nonneg(name: &'static str, v: f64) -> Result<()> {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::param(name, format!("must be finite and >= 0, got {v}")))
            }
        }
        fn positive(name: &'static str, v: f64) -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::param(name, format!("must be finite and > 0, got {v}")))
            }
        }
        nonneg("lambda", self.lambda)?;
        nonneg("mu", self.mu)?;
        positive("beta", self.beta)?;
        positive("outer_tol", self.outer_tol)?;
        positive("eps1", self.eps1)?;
        positive("eps2", self.eps2)?;
        if let Some(s) = self.ortho_penalty {
            positive("ortho_penalty", s)?;
        }
        if !(self.labeled_fraction > 0.0 && self.labeled_fraction <= 1.0) {
            return Err(Error::param(
                "labeled_fraction",
                format!("must lie in (0, 1], got {}", self.labeled_fraction),
            ));
        }
        let rank = self.effective_rank(classes);
        if rank == 0 || rank > d.min(n) {
            return Err(Error::param(
                "rank",
                format!("must lie in [1, min(d, n) = {}], got {rank}", d.min(n)),
            ));
        }
        if self.knn == 0 || self.knn >= n {
            return Err(Error::param(
                "knn",
                format!("must lie in [1, n) with n = {n}, got {}", self.knn),
            ));
        }
        if self.max_inner_iters == 0 {
            return Err(Error::param("max_inner_iters", "must be positive"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid_for_a_small_problem() {
        Hyperparams::default().validate(10, 30, 3).unwrap();
    }

    #[test]
    fn rank_beyond_min_dimension_is_rejected() {
        let hp = Hyperparams {
            rank: Some(5),
            ..Hyperparams::default()
        };
        assert!(hp.validate(4, 30, 3).is_err());
    }

    #[test]
    fn zero_tolerance_is_rejected() {
        let hp = Hyperparams {
            eps2: 0.0,
            ..Hyperparams::default()
        };
        assert!(matches!(
            hp.validate(10, 30, 3),
            Err(Error::Parameter { name: "eps2", .. })
        ));
    }
}
