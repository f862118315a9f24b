//! Parameter sweeps over the number of classes and the noise level, written
//! as plot-ready CSV.

use std::fmt::Write as _;
use std::thread;

use super::config::{DataSource, ExperimentConfig};
use super::experiment::{run_experiment, MetricAggregate, ResultsRecord};
use crate::error::{Error, Result};
use crate::noise::NoiseSpec;

pub const NOISE_LEVELS: [f64; 4] = [0.1, 0.3, 0.5, 0.7];

pub const BENCH_HEADER: &str =
    "sweep,classes,noise_level,method,acc_mean,acc_std,f1_mean,f1_std,nmi_mean,nmi_std,pur_mean,pur_std";

#[derive(Debug, Clone)]
pub struct BenchConfig {
    /// Must use synthetic data so the class count can vary.
    pub base: ExperimentConfig,
    pub classes: Vec<usize>,
    pub noise_levels: Vec<f64>,
    /// Kind of corruption swept over `noise_levels`.
    pub noise: NoiseSpec,
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub sweep: &'static str,
    pub classes: usize,
    pub noise_level: f64,
    pub method: String,
    pub metrics: MetricAggregate,
}

struct Point {
    sweep: &'static str,
    classes: usize,
    noise_level: f64,
    cfg: ExperimentConfig,
}

fn points(cfg: &BenchConfig) -> Result<Vec<Point>> {
    let DataSource::Synthetic(spec) = cfg.base.data else {
        return Err(Error::Config("bench needs a synthetic data source".into()));
    };
    let mut out = Vec::new();
    for &classes in &cfg.classes {
        let mut point = cfg.base.clone();
        point.data = DataSource::Synthetic(super::synthetic::SyntheticSpec { classes, ..spec });
        point.noise = None;
        point.metrics = true;
        out.push(Point {
            sweep: "classes",
            classes,
            noise_level: 0.0,
            cfg: point,
        });
    }
    for &level in &cfg.noise_levels {
        let mut point = cfg.base.clone();
        point.noise = Some(cfg.noise.with_level(level));
        point.metrics = true;
        out.push(Point {
            sweep: "noise",
            classes: spec.classes,
            noise_level: level,
            cfg: point,
        });
    }
    Ok(out)
}

fn rows_of(point: &Point, record: &ResultsRecord) -> Vec<BenchRow> {
    let mut rows = Vec::new();
    let mut push = |method: &str, metrics: &Option<MetricAggregate>| {
        if let Some(m) = metrics {
            rows.push(BenchRow {
                sweep: point.sweep,
                classes: point.classes,
                noise_level: point.noise_level,
                method: method.to_string(),
                metrics: m.clone(),
            });
        }
    };
    push("ronmf", &record.summary.ronmf.metrics);
    for (name, summary) in &record.summary.baselines {
        push(name, &summary.metrics);
    }
    rows
}

/// Runs every sweep point, up to `threads` at a time. Rows come back in sweep
/// order regardless of scheduling.
pub fn run_bench(cfg: &BenchConfig) -> Result<Vec<BenchRow>> {
    let points = points(cfg)?;
    let threads = cfg.threads.max(1);
    let mut records: Vec<Option<Result<ResultsRecord>>> = (0..points.len()).map(|_| None).collect();
    for (chunk_idx, chunk) in points.chunks(threads).enumerate() {
        let results: Vec<Result<ResultsRecord>> = thread::scope(|s| {
            let handles: Vec<_> = chunk.iter().map(|p| s.spawn(|| run_experiment(&p.cfg))).collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("bench worker panicked"))
                .collect()
        });
        for (i, r) in results.into_iter().enumerate() {
            records[chunk_idx * threads + i] = Some(r);
        }
    }
    let mut rows = Vec::new();
    for (point, record) in points.iter().zip(records) {
        let record = record.expect("every point was run")?;
        rows.extend(rows_of(point, &record));
    }
    Ok(rows)
}

pub fn bench_csv(rows: &[BenchRow]) -> String {
    let mut out = String::new();
    out.push_str(BENCH_HEADER);
    out.push('\n');
    for r in rows {
        let m = &r.metrics;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.sweep,
            r.classes,
            r.noise_level,
            r.method,
            m.acc.mean,
            m.acc.std,
            m.f1.mean,
            m.f1.std,
            m.nmi.mean,
            m.nmi.std,
            m.pur.mean,
            m.pur.std
        );
    }
    out
}
