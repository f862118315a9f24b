use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ronmf::io::bench::{bench_csv, run_bench, BenchConfig};
use ronmf::io::config::Normalize;
use ronmf::io::matrix::load_labels;
use ronmf::io::results::{to_csv, to_json};
use ronmf::io::{load_matrix, save_matrix, MatrixFormat, ResultsFormat};
use ronmf::noise::{NoiseSpec, DEFAULT_SIGMA_SCALE};
use ronmf::{evaluate, generate_synthetic, run_experiment, Error, ExperimentConfig, PenaltyKind, Result};

#[derive(Parser)]
#[command(name = "ronmf", version, about = "Robust orthogonal NMF clustering experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a TOML config.
    Run(RunArgs),
    /// Write a synthetic blob dataset.
    Synth(SynthArgs),
    /// Corrupt a dataset with noise.
    Noise(NoiseArgs),
    /// Score predicted labels against ground truth.
    Eval(EvalArgs),
    /// Sweep class counts and noise levels, writing one CSV.
    Bench(BenchArgs),
}

/// Overrides for every solver hyperparameter.
#[derive(Args, Default)]
struct HyperparamFlags {
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    rank: Option<usize>,
    #[arg(long)]
    labeled_fraction: Option<f64>,
    #[arg(long)]
    knn: Option<usize>,
    #[arg(long)]
    max_outer_iters: Option<usize>,
    #[arg(long)]
    outer_tol: Option<f64>,
    #[arg(long)]
    eps1: Option<f64>,
    #[arg(long)]
    eps2: Option<f64>,
    #[arg(long)]
    ortho_penalty: Option<f64>,
    #[arg(long)]
    max_inner_iters: Option<usize>,
    /// Base seed; repetition r uses seed + r.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    penalty: Option<PenaltyKind>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    repetitions: Option<usize>,
    #[arg(long, value_enum)]
    normalize: Option<NormalizeFlag>,
}

#[derive(Clone, Copy, ValueEnum)]
enum NormalizeFlag {
    Maxabs,
}

impl HyperparamFlags {
    fn apply(&self, cfg: &mut ExperimentConfig) {
        let hp = &mut cfg.hyperparams;
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = self.$field {
                    hp.$field = v;
                }
            )*};
        }
        set!(lambda, mu, beta, labeled_fraction, knn, max_outer_iters, outer_tol, eps1, eps2, max_inner_iters);
        if self.rank.is_some() {
            hp.rank = self.rank;
        }
        if self.ortho_penalty.is_some() {
            hp.ortho_penalty = self.ortho_penalty;
        }
        if let Some(seed) = self.seed {
            hp.seed = seed;
            cfg.seed = seed;
        }
        if let Some(kind) = self.penalty {
            cfg.penalty.kind = kind;
        }
        if self.tau.is_some() {
            cfg.penalty.tau = self.tau;
        }
        if self.gamma.is_some() {
            cfg.penalty.gamma = self.gamma;
        }
        if let Some(r) = self.repetitions {
            cfg.repetitions = r;
        }
        if let Some(NormalizeFlag::Maxabs) = self.normalize {
            cfg.normalize = Some(Normalize::Maxabs);
        }
    }
}

#[derive(Args)]
struct RunArgs {
    config: PathBuf,
    /// Results path; overrides the config. Stdout when neither is set.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Results format; inferred from the output extension otherwise.
    #[arg(long)]
    format: Option<ResultsFormat>,
    #[command(flatten)]
    flags: HyperparamFlags,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 3)]
    classes: usize,
    #[arg(long, default_value_t = 100)]
    per_class: usize,
    #[arg(long, default_value_t = 50)]
    dims: usize,
    #[arg(long, default_value_t = 2.0)]
    separation: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, short)]
    output: PathBuf,
    #[arg(long)]
    format: Option<MatrixFormat>,
}

#[derive(Clone, Copy, ValueEnum)]
enum NoiseKind {
    Gaussian,
    SaltPepper,
    Poisson,
}

#[derive(Args)]
struct NoiseArgs {
    input: PathBuf,
    #[arg(long, value_enum)]
    kind: NoiseKind,
    /// Corrupted fraction (gaussian), density (salt-pepper) or scale (poisson).
    #[arg(long)]
    level: f64,
    #[arg(long, default_value_t = DEFAULT_SIGMA_SCALE)]
    sigma_scale: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, short)]
    output: PathBuf,
    #[arg(long)]
    format: Option<MatrixFormat>,
}

#[derive(Args)]
struct EvalArgs {
    /// Predicted cluster per sample, one integer per line.
    pred: PathBuf,
    /// True class per sample, one integer per line.
    truth: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// Experiment config with a synthetic data source.
    config: PathBuf,
    #[arg(long, default_value_t = 2)]
    k_min: usize,
    #[arg(long, default_value_t = 6)]
    k_max: usize,
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.3,0.5,0.7")]
    noise_levels: Vec<f64>,
    #[arg(long, value_enum, default_value = "salt-pepper")]
    noise: NoiseKind,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[command(flatten)]
    flags: HyperparamFlags,
}

fn matrix_format(path: &Path, explicit: Option<MatrixFormat>) -> Result<MatrixFormat> {
    explicit
        .or_else(|| MatrixFormat::from_path(path))
        .ok_or_else(|| Error::Config(format!("cannot infer matrix format of {}; pass --format", path.display())))
}

fn write_text(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|source| Error::Io {
            path: p.to_path_buf(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_config(path: &Path, flags: &HyperparamFlags) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(path)?;
    flags.apply(&mut cfg);
    cfg.check()?;
    Ok(cfg)
}

fn run(args: RunArgs) -> Result<()> {
    let mut cfg = load_config(&args.config, &args.flags)?;
    if args.output.is_some() {
        cfg.output = args.output;
    }
    let record = run_experiment(&cfg)?;
    let out = cfg.output.as_deref();
    let format = args
        .format
        .or_else(|| out.and_then(ResultsFormat::from_path))
        .unwrap_or(ResultsFormat::Json);
    let text = match format {
        ResultsFormat::Json => to_json(&record)? + "\n",
        ResultsFormat::Csv => to_csv(&record),
    };
    write_text(out, &text)?;
    if let Some(m) = &record.summary.ronmf.metrics {
        eprintln!("ronmf acc {:.4} ± {:.4} over {} repetitions", m.acc.mean, m.acc.std, cfg.repetitions);
    }
    Ok(())
}

fn synth(args: SynthArgs) -> Result<()> {
    let format = matrix_format(&args.output, args.format)?;
    let data = generate_synthetic(args.classes, args.per_class, args.dims, args.separation, args.seed)?;
    save_matrix(&data, &args.output, format)
}

fn noise_spec(kind: NoiseKind, level: f64, sigma_scale: f64) -> NoiseSpec {
    match kind {
        NoiseKind::Gaussian => NoiseSpec::Gaussian {
            ratio: level,
            sigma_scale,
        },
        NoiseKind::SaltPepper => NoiseSpec::SaltPepper { density: level },
        NoiseKind::Poisson => NoiseSpec::Poisson { scale: level },
    }
}

fn noise(args: NoiseArgs) -> Result<()> {
    let input = matrix_format(&args.input, None)?;
    let output = matrix_format(&args.output, args.format)?;
    let data = load_matrix(&args.input, input)?;
    let noisy = noise_spec(args.kind, args.level, args.sigma_scale).apply(&data, args.seed)?;
    save_matrix(&noisy, &args.output, output)
}

fn cluster_ids(path: &Path) -> Result<Vec<usize>> {
    load_labels(path)?
        .into_iter()
        .enumerate()
        .map(|(i, l)| {
            usize::try_from(l).map_err(|_| {
                Error::Format(ronmf::io::FormatError::Text {
                    line: i + 1,
                    field: 1,
                    detail: format!("label {l} is negative"),
                })
            })
        })
        .collect()
}

fn eval(args: EvalArgs) -> Result<()> {
    let report = evaluate(&cluster_ids(&args.pred)?, &cluster_ids(&args.truth)?)?;
    let json = serde_json::to_string_pretty(&report).map_err(|e| Error::Config(e.to_string()))?;
    println!("{json}");
    Ok(())
}

fn bench(args: BenchArgs) -> Result<()> {
    if args.k_min < 1 || args.k_min > args.k_max {
        return Err(Error::Config(format!("empty class range {}..={}", args.k_min, args.k_max)));
    }
    let base = load_config(&args.config, &args.flags)?;
    let cfg = BenchConfig {
        base,
        classes: (args.k_min..=args.k_max).collect(),
        noise_levels: args.noise_levels,
        noise: noise_spec(args.noise, 0.0, DEFAULT_SIGMA_SCALE),
        threads: args.threads.max(1),
    };
    let rows = run_bench(&cfg)?;
    write_text(args.output.as_deref(), &bench_csv(&rows))
}

/// One line, so callers can split on the first colon.
fn report(code: &str, message: &str) {
    let flat: Vec<&str> = message.split_whitespace().collect();
    eprintln!("error {code}: {}", flat.join(" "));
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            report("E_USAGE", text.lines().next().unwrap_or("").trim_start_matches("error: "));
            return ExitCode::from(2);
        }
    };
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Synth(a) => synth(a),
        Command::Noise(a) => noise(a),
        Command::Eval(a) => eval(a),
        Command::Bench(a) => bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report(e.code(), &e.to_string());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
