//! TOML experiment configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::matrix::MatrixFormat;
use super::synthetic::SyntheticSpec;
use crate::baselines::BaselineKind;
use crate::error::{Error, Result};
use crate::graph::WeightScheme;
use crate::noise::NoiseSpec;
use crate::params::Hyperparams;
use crate::penalty::{PenaltyKind, PenaltySpec};
use crate::solver::InitStrategy;

/// Where the observation matrix comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "source", deny_unknown_fields)]
pub enum DataSource {
    File {
        path: PathBuf,
        /// Inferred from the extension when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        format: Option<MatrixFormat>,
        /// Separate label file, overriding labels stored with the matrix.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        labels: Option<PathBuf>,
    },
    Synthetic(SyntheticSpec),
}

/// Shape of the robust loss. The scale is fixed by the ADMM penalty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PenaltyConfig {
    pub kind: PenaltyKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
}

impl Default for PenaltyConfig {
    fn default() -> Self {
        PenaltyConfig {
            kind: PenaltyKind::Etp,
            tau: None,
            gamma: None,
        }
    }
}

impl PenaltyConfig {
    /// Penalty with scale 1; the solver rescales it to `1/β`.
    pub fn spec(&self) -> Result<PenaltySpec> {
        let base = PenaltySpec::default_for(self.kind, 1.0)?;
        PenaltySpec::new(
            self.kind,
            1.0,
            self.tau.unwrap_or(base.tau()),
            self.gamma.unwrap_or(base.gamma()),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalize {
    Maxabs,
}

fn default_repetitions() -> usize {
    1
}

fn default_true() -> bool {
    true
}

fn default_baseline_iters() -> usize {
    500
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub data: DataSource,
    #[serde(default)]
    pub hyperparams: Hyperparams,
    #[serde(default)]
    pub penalty: PenaltyConfig,
    #[serde(default)]
    pub init: InitStrategy,
    #[serde(default = "default_graph")]
    pub graph: WeightScheme,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalize: Option<Normalize>,
    #[serde(default)]
    pub baselines: Vec<BaselineKind>,
    #[serde(default = "default_baseline_iters")]
    pub baseline_iters: usize,
    #[serde(default = "default_true")]
    pub metrics: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    /// Repetition `k` uses seed `seed + k` for data, labels, noise and init.
    #[serde(default)]
    pub seed: u64,
}

fn default_graph() -> WeightScheme {
    WeightScheme::Binary
}

impl ExperimentConfig {
    pub fn new(data: DataSource) -> Self {
        ExperimentConfig {
            data,
            hyperparams: Hyperparams::default(),
            penalty: PenaltyConfig::default(),
            init: InitStrategy::default(),
            graph: default_graph(),
            noise: None,
            normalize: None,
            baselines: Vec::new(),
            baseline_iters: default_baseline_iters(),
            metrics: true,
            output: None,
            repetitions: 1,
            seed: 0,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Checks everything that does not depend on the data.
    pub fn check(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::Config("repetitions must be at least 1".into()));
        }
        self.penalty.spec()?;
        if let WeightScheme::Heat { bandwidth } = self.graph {
            if !(bandwidth.is_finite() && bandwidth > 0.0) {
                return Err(Error::param("bandwidth", format!("must be > 0, got {bandwidth}")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
repetitions = 3
seed = 11
init = "kmeans"
baselines = ["nmf", "kmeans"]

[data]
source = "synthetic"
classes = 3
per_class = 20
dims = 10
separation = 4.0

[hyperparams]
lambda = 100.0
knn = 4

[penalty]
kind = "mcp"
tau = 2.5

[noise]
kind = "salt_pepper"
density = 0.3
"#;

    #[test]
    fn parses_sample() {
        let cfg = ExperimentConfig::parse(SAMPLE).unwrap();
        assert_eq!(cfg.repetitions, 3);
        assert_eq!(cfg.init, InitStrategy::Kmeans);
        assert_eq!(cfg.hyperparams.lambda, 100.0);
        assert_eq!(cfg.hyperparams.mu, 1.0);
        assert_eq!(cfg.noise, Some(NoiseSpec::SaltPepper { density: 0.3 }));
        assert_eq!(cfg.penalty.spec().unwrap().tau(), 2.5);
        assert!(matches!(cfg.data, DataSource::Synthetic(s) if s.per_class == 20));
    }

    #[test]
    fn toml_round_trip() {
        let cfg = ExperimentConfig::parse(SAMPLE).unwrap();
        let again = ExperimentConfig::parse(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        let unknown = SAMPLE.replace("knn = 4", "knn = 4\nbogus = 1");
        assert!(matches!(ExperimentConfig::parse(&unknown), Err(Error::Config(_))));
        let zero = SAMPLE.replace("repetitions = 3", "repetitions = 0");
        assert!(ExperimentConfig::parse(&zero).is_err());
        let tau = SAMPLE.replace("tau = 2.5", "tau = 1.0");
        assert!(ExperimentConfig::parse(&tau).unwrap_err().exit_code() == 2);
    }
}
