//! Repeated runs of the solver and baselines with aggregated metrics.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{DataSource, ExperimentConfig, Normalize};
use super::matrix::{load_labels, load_matrix, normalize_maxabs, MatrixFormat};
use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::graph::GraphContext;
use crate::metrics::{evaluate, MetricReport};
use crate::solver::fit;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RonmfOutcome {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<MetricReport>,
    pub iterations: usize,
    pub converged: bool,
    /// ‖X − UZᵀAᵀ − E‖_F / ‖X‖_F at the last iterate.
    pub feasibility: f64,
    /// ‖UᵀU − I‖_F at the last iterate.
    pub ortho_residual: f64,
    /// Samples whose row of A was all zero.
    pub zero_rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineOutcome {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<MetricReport>,
    pub iterations: usize,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepetitionRecord {
    pub rep: usize,
    pub seed: u64,
    pub ronmf: RonmfOutcome,
    pub baselines: BTreeMap<String, BaselineOutcome>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample standard deviation; zero for a single value.
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return MeanStd { mean: 0.0, std: 0.0 };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        };
        MeanStd { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricAggregate {
    pub acc: MeanStd,
    pub f1: MeanStd,
    pub nmi: MeanStd,
    pub pur: MeanStd,
}

impl MetricAggregate {
    fn of<'a>(reports: impl Iterator<Item = Option<&'a MetricReport>>) -> Option<Self> {
        let reports: Option<Vec<&MetricReport>> = reports.collect();
        let reports = reports?;
        if reports.is_empty() {
            return None;
        }
        let pick = |f: fn(&MetricReport) -> f64| MeanStd::of(&reports.iter().map(|r| f(r)).collect::<Vec<_>>());
        Some(MetricAggregate {
            acc: pick(|r| r.acc),
            f1: pick(|r| r.f1),
            nmi: pick(|r| r.nmi),
            pur: pick(|r| r.pur),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RonmfSummary {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<MetricAggregate>,
    pub iterations: MeanStd,
    pub feasibility: MeanStd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineSummary {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<MetricAggregate>,
    pub iterations: MeanStd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub ronmf: RonmfSummary,
    pub baselines: BTreeMap<String, BaselineSummary>,
}

impl Summary {
    pub fn of(reps: &[RepetitionRecord]) -> Self {
        let ronmf = RonmfSummary {
            metrics: MetricAggregate::of(reps.iter().map(|r| r.ronmf.metrics.as_ref())),
            iterations: MeanStd::of(&reps.iter().map(|r| r.ronmf.iterations as f64).collect::<Vec<_>>()),
            feasibility: MeanStd::of(&reps.iter().map(|r| r.ronmf.feasibility).collect::<Vec<_>>()),
        };
        let names: Vec<&String> = reps.first().map(|r| r.baselines.keys().collect()).unwrap_or_default();
        let baselines = names
            .into_iter()
            .map(|name| {
                let outcomes: Vec<&BaselineOutcome> = reps.iter().filter_map(|r| r.baselines.get(name)).collect();
                let summary = BaselineSummary {
                    metrics: MetricAggregate::of(outcomes.iter().map(|o| o.metrics.as_ref())),
                    iterations: MeanStd::of(&outcomes.iter().map(|o| o.iterations as f64).collect::<Vec<_>>()),
                };
                (name.clone(), summary)
            })
            .collect();
        Summary { ronmf, baselines }
    }
}

/// Wall-clock measurements, kept apart from the deterministic results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub total_seconds: f64,
    pub per_repetition: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsRecord {
    pub version: String,
    pub config: ExperimentConfig,
    pub repetitions: Vec<RepetitionRecord>,
    pub summary: Summary,
    pub timing: Timing,
}

impl ResultsRecord {
    /// The record with all timing fields zeroed.
    pub fn without_timing(&self) -> Self {
        ResultsRecord {
            timing: Timing {
                total_seconds: 0.0,
                per_repetition: vec![0.0; self.timing.per_repetition.len()],
            },
            ..self.clone()
        }
    }
}

/// Loads or generates the data for one repetition, then applies noise and
/// normalization.
pub fn prepare_data(cfg: &ExperimentConfig, rep: usize) -> Result<DataMatrix> {
    let seed = cfg.seed.wrapping_add(rep as u64);
    let mut data = match &cfg.data {
        DataSource::Synthetic(spec) => spec.generate(rep as u64)?,
        DataSource::File { path, format, labels } => {
            let format = match format {
                Some(f) => *f,
                None => MatrixFormat::from_path(path).ok_or_else(|| {
                    Error::Config(format!("cannot infer the format of {}", path.display()))
                })?,
            };
            let mut data = load_matrix(path, format)?;
            if let Some(label_path) = labels {
                let labels = load_labels(label_path)?;
                data = DataMatrix::labeled(data.values, labels)?;
            }
            data
        }
    };
    if let Some(noise) = &cfg.noise {
        data = noise.apply(&data, seed)?;
    }
    if cfg.normalize == Some(Normalize::Maxabs) {
        normalize_maxabs(&mut data);
    }
    Ok(data)
}

fn truth_of(data: &DataMatrix) -> Vec<(usize, usize)> {
    (0..data.samples())
        .filter_map(|i| data.class_of(i).map(|c| (i, c)))
        .collect()
}

fn score(pred: &[usize], truth: &[(usize, usize)]) -> Result<MetricReport> {
    let p: Vec<usize> = truth.iter().map(|&(i, _)| pred[i]).collect();
    let t: Vec<usize> = truth.iter().map(|&(_, c)| c).collect();
    evaluate(&p, &t)
}

fn run_repetition(cfg: &ExperimentConfig, rep: usize) -> Result<RepetitionRecord> {
    let seed = cfg.seed.wrapping_add(rep as u64);
    let data = prepare_data(cfg, rep)?;
    let mut hp = cfg.hyperparams.clone();
    hp.seed = seed;
    let ctx = GraphContext::build(&data, hp.knn, cfg.graph, hp.labeled_fraction, seed)?;
    let spec = cfg.penalty.spec()?;
    let result = fit(&data, &ctx, &hp, &spec, cfg.init)?;
    let truth = truth_of(&data);
    let metrics = |pred: &[usize]| -> Result<Option<MetricReport>> {
        if cfg.metrics {
            score(pred, &truth).map(Some)
        } else {
            Ok(None)
        }
    };
    let x = &data.values;
    let ronmf = RonmfOutcome {
        metrics: metrics(result.labels())?,
        iterations: result.state.iter,
        converged: result.converged,
        feasibility: result.state.feasibility(x)?,
        ortho_residual: result.state.orthogonality_residual(),
        zero_rows: result.prediction.zero_rows.len(),
    };
    let mut baselines = BTreeMap::new();
    for kind in &cfg.baselines {
        let res = kind.run(x, data.classes, cfg.baseline_iters, seed)?;
        baselines.insert(
            kind.name().to_string(),
            BaselineOutcome {
                metrics: metrics(&res.labels)?,
                iterations: res.iterations(),
                objective: res.objective_trace.last().copied().unwrap_or(0.0),
            },
        );
    }
    Ok(RepetitionRecord {
        rep,
        seed,
        ronmf,
        baselines,
    })
}

/// Runs every repetition and aggregates the results.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ResultsRecord> {
    cfg.check()?;
    if let DataSource::File { path, labels, .. } = &cfg.data {
        for p in std::iter::once(path).chain(labels) {
            if !p.exists() {
                return Err(Error::Io {
                    path: p.clone(),
                    source: std::io::Error::new(std::io::ErrorKind::NotFound, "file not found"),
                });
            }
        }
    }
    let start = Instant::now();
    let mut reps = Vec::with_capacity(cfg.repetitions);
    let mut per_repetition = Vec::with_capacity(cfg.repetitions);
    for rep in 0..cfg.repetitions {
        let t0 = Instant::now();
        let record = run_repetition(cfg, rep).map_err(|e| Error::Repetition {
            rep,
            source: Box::new(e),
        })?;
        per_repetition.push(t0.elapsed().as_secs_f64());
        reps.push(record);
    }
    Ok(ResultsRecord {
        version: VERSION.to_string(),
        config: cfg.clone(),
        summary: Summary::of(&reps),
        repetitions: reps,
        timing: Timing {
            total_seconds: start.elapsed().as_secs_f64(),
            per_repetition,
        },
    })
}
