//! Gaussian blobs with known labels.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::DataMatrix;
use crate::error::{Error, Result};

/// Mean level shared by every blob before the class offset.
pub const BASE_LEVEL: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub classes: usize,
    pub per_class: usize,
    pub dims: usize,
    pub separation: f64,
    #[serde(default)]
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn generate(&self, seed_offset: u64) -> Result<DataMatrix> {
        generate_synthetic(
            self.classes,
            self.per_class,
            self.dims,
            self.separation,
            self.seed.wrapping_add(seed_offset),
        )
    }
}

/// `c` blobs of `per_class` samples in `d` dimensions with unit within-class
/// std. Blob `j` has mean `BASE_LEVEL + separation` on features `f` with
/// `f mod c == j` and `BASE_LEVEL` elsewhere. Entries are clamped at zero and
/// samples are grouped by class.
pub fn generate_synthetic(
    c: usize,
    per_class: usize,
    d: usize,
    separation: f64,
    seed: u64,
) -> Result<DataMatrix> {
    if c < 2 {
        return Err(Error::param("classes", format!("need at least 2, got {c}")));
    }
    if per_class == 0 || d == 0 {
        return Err(Error::param("synthetic", "per_class and dims must be positive"));
    }
    if !(separation.is_finite() && separation >= 0.0) {
        return Err(Error::param("separation", format!("must be finite and >= 0, got {separation}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = c * per_class;
    let mut values = DMatrix::zeros(d, n);
    let mut labels = Vec::with_capacity(n);
    for j in 0..n {
        let class = j / per_class;
        labels.push(class as i32);
        for f in 0..d {
            let mean = BASE_LEVEL + if f % c == class { separation } else { 0.0 };
            let noise: f64 = StandardNormal.sample(&mut rng);
            values[(f, j)] = (mean + noise).max(0.0);
        }
    }
    Ok(DataMatrix::new(values, Some(labels), c)?)
}
