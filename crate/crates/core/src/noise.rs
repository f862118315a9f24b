//! Controlled corruption of observation matrices. Percentages refer to the
//! fraction of matrix entries touched.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::data::DataMatrix;
use crate::error::{Error, Result};

/// Default Gaussian std as a fraction of the data range.
pub const DEFAULT_SIGMA_SCALE: f64 = 0.1;

fn check_fraction(name: &'static str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::param(name, format!("must lie in [0, 1], got {v}")))
    }
}

fn extent(data: &DataMatrix) -> (f64, f64) {
    let v = &data.values;
    if v.is_empty() {
        (0.0, 0.0)
    } else {
        (v.min(), v.max())
    }
}

fn picked(data: &DataMatrix, fraction: f64, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let total = data.values.len();
    let count = ((fraction * total as f64).floor() as usize).min(total);
    sample(rng, total, count).into_vec()
}

/// Adds `N(0, (sigma_scale·range)²)` to `⌊ratio·d·n⌋` distinct entries and
/// clamps at zero.
pub fn gaussian_corrupt(data: &DataMatrix, ratio: f64, sigma_scale: f64, seed: u64) -> Result<DataMatrix> {
    check_fraction("ratio", ratio)?;
    if !(sigma_scale.is_finite() && sigma_scale > 0.0) {
        return Err(Error::param("sigma_scale", format!("must be > 0, got {sigma_scale}")));
    }
    let (lo, hi) = extent(data);
    let normal = Normal::new(0.0, sigma_scale * (hi - lo))
        .map_err(|e| Error::param("sigma_scale", e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = data.clone();
    for idx in picked(data, ratio, &mut rng) {
        let x = &mut out.values.as_mut_slice()[idx];
        *x = (*x + normal.sample(&mut rng)).max(0.0);
    }
    Ok(out)
}

/// Sets `⌊density·d·n⌋` distinct entries to the data minimum or maximum with
/// equal probability.
pub fn salt_pepper_corrupt(data: &DataMatrix, density: f64, seed: u64) -> Result<DataMatrix> {
    check_fraction("density", density)?;
    let (lo, hi) = extent(data);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = data.clone();
    for idx in picked(data, density, &mut rng) {
        out.values.as_mut_slice()[idx] = if rng.random::<bool>() { hi } else { lo };
    }
    Ok(out)
}

/// Replaces every entry `x` by `Poisson(scale·x)/scale`.
pub fn poisson_corrupt(data: &DataMatrix, scale: f64, seed: u64) -> Result<DataMatrix> {
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::param("scale", format!("must be > 0, got {scale}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = data.clone();
    for x in out.values.iter_mut() {
        if *x > 0.0 {
            let dist = Poisson::new(scale * *x).map_err(|e| Error::param("scale", e.to_string()))?;
            *x = dist.sample(&mut rng) / scale;
        }
    }
    Ok(out)
}

/// A corruption and its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum NoiseSpec {
    Gaussian {
        ratio: f64,
        #[serde(default = "default_sigma_scale")]
        sigma_scale: f64,
    },
    SaltPepper {
        density: f64,
    },
    Poisson {
        scale: f64,
    },
}

fn default_sigma_scale() -> f64 {
    DEFAULT_SIGMA_SCALE
}

impl NoiseSpec {
    pub fn apply(&self, data: &DataMatrix, seed: u64) -> Result<DataMatrix> {
        match *self {
            NoiseSpec::Gaussian { ratio, sigma_scale } => gaussian_corrupt(data, ratio, sigma_scale, seed),
            NoiseSpec::SaltPepper { density } => salt_pepper_corrupt(data, density, seed),
            NoiseSpec::Poisson { scale } => poisson_corrupt(data, scale, seed),
        }
    }

    /// Same kind with its strength set to `level` (ratio, density, or scale).
    pub fn with_level(&self, level: f64) -> Self {
        match *self {
            NoiseSpec::Gaussian { sigma_scale, .. } => NoiseSpec::Gaussian {
                ratio: level,
                sigma_scale,
            },
            NoiseSpec::SaltPepper { .. } => NoiseSpec::SaltPepper { density: level },
            NoiseSpec::Poisson { .. } => NoiseSpec::Poisson { scale: level },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use proptest::prelude::*;
    use rand::Rng;

    fn grid(d: usize, n: usize, seed: u64) -> DataMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DataMatrix::new(DMatrix::from_fn(d, n, |_, _| 1.0 + rng.random::<f64>()), None, 0).unwrap()
    }

    fn changed(a: &DataMatrix, b: &DataMatrix) -> usize {
        a.values.iter().zip(b.values.iter()).filter(|(x, y)| x != y).count()
    }

    #[test]
    fn zero_ratio_is_identity() {
        let x = grid(4, 5, 1);
        assert_eq!(gaussian_corrupt(&x, 0.0, 0.1, 3).unwrap(), x);
        assert_eq!(salt_pepper_corrupt(&x, 0.0, 3).unwrap(), x);
    }

    #[test]
    fn vanishing_sigma_keeps_values() {
        let x = grid(4, 5, 2);
        let y = gaussian_corrupt(&x, 1.0, 1e-15, 3).unwrap();
        for (a, b) in x.values.iter().zip(y.values.iter()) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn half_ratio_touches_fifty_entries() {
        let x = grid(10, 10, 3);
        let y = gaussian_corrupt(&x, 0.5, 0.1, 4).unwrap();
        assert_eq!(changed(&x, &y), 50);
    }

    #[test]
    fn full_density_uses_extremes() {
        let x = grid(5, 6, 4);
        let (lo, hi) = (x.values.min(), x.values.max());
        let y = salt_pepper_corrupt(&x, 1.0, 9).unwrap();
        assert!(y.values.iter().all(|&v| v == lo || v == hi));
    }

    #[test]
    fn poisson_keeps_zeros_and_mean() {
        let zero = DataMatrix::new(DMatrix::zeros(3, 3), None, 0).unwrap();
        assert_eq!(poisson_corrupt(&zero, 5.0, 1).unwrap(), zero);

        let x = DataMatrix::new(DMatrix::from_element(100, 100, 0.7), None, 0).unwrap();
        let scale = 1e4;
        let y = poisson_corrupt(&x, scale, 8).unwrap();
        let mean = y.values.mean();
        // Var(out) = x/scale per entry.
        let se = (0.7 / scale / 1e4f64).sqrt();
        assert!((mean - 0.7).abs() <= 3.0 * se, "mean {mean}");
    }

    #[test]
    fn rejects_bad_parameters() {
        let x = grid(2, 2, 0);
        assert!(gaussian_corrupt(&x, 1.5, 0.1, 0).is_err());
        assert!(gaussian_corrupt(&x, 0.5, 0.0, 0).is_err());
        assert!(salt_pepper_corrupt(&x, -0.1, 0).is_err());
        assert!(poisson_corrupt(&x, 0.0, 0).is_err());
    }

    proptest! {
        #[test]
        fn corruption_preserves_shape_and_sign(seed in 0u64..1000, level in 0.0f64..1.0) {
            let x = grid(6, 7, seed);
            let limit = (level * 42.0).floor() as usize;
            for y in [
                gaussian_corrupt(&x, level, 0.5, seed).unwrap(),
                salt_pepper_corrupt(&x, level, seed).unwrap(),
                poisson_corrupt(&x, 1.0 + 10.0 * level, seed).unwrap(),
            ] {
                prop_assert_eq!(y.values.shape(), (6, 7));
                prop_assert!(y.values.iter().all(|&v| v.is_finite() && v >= 0.0));
            }
            prop_assert!(changed(&x, &gaussian_corrupt(&x, level, 0.5, seed).unwrap()) <= limit);
            prop_assert_eq!(
                gaussian_corrupt(&x, level, 0.5, seed).unwrap(),
                gaussian_corrupt(&x, level, 0.5, seed).unwrap()
            );
        }
    }
}
