//! Robust orthogonal non-negative matrix factorization for semi-supervised
//! clustering of noisy data.
//!
//! The model factors a non-negative `d×n` matrix as `X ≈ U Zᵀ Aᵀ + E` where
//! `U ≥ 0` has orthonormal columns, `A ≥ 0` holds per-sample class
//! memberships, and the residual `E` is charged row-wise through a non-convex
//! penalty (MCP, SCAD or ETP). A kNN graph Laplacian smooths `A` over the data
//! manifold and a label term anchors the labeled samples.
//!
//! ```no_run
//! use ronmf::{fit, generate_synthetic, GraphContext, Hyperparams, InitStrategy, PenaltySpec, WeightScheme};
//!
//! let data = generate_synthetic(3, 100, 50, 3.0, 7)?;
//! let hp = Hyperparams::default();
//! let ctx = GraphContext::build(&data, hp.knn, WeightScheme::Binary, hp.labeled_fraction, 7)?;
//! let spec = PenaltySpec::etp(1.0, 2.0)?;
//! let result = fit(&data, &ctx, &hp, &spec, InitStrategy::Random)?;
//! println!("{:?}", &result.labels()[..10]);
//! # Ok::<(), ronmf::Error>(())
//! ```

pub mod baselines;
pub mod data;
pub mod error;
pub mod graph;
pub mod io;
pub mod metrics;
pub mod noise;
pub mod params;
pub mod penalty;
pub mod solver;
pub mod state;

pub use baselines::{kmeans, nmf_multiplicative, BaselineKind, BaselineResult};
pub use data::{DataMatrix, ValidationReport, Violation, UNLABELED};
pub use error::{Error, Result};
pub use graph::{GraphContext, WeightScheme};
pub use io::{generate_synthetic, run_experiment, ExperimentConfig, ResultsRecord};
pub use metrics::{evaluate, MetricReport};
pub use params::Hyperparams;
pub use penalty::{PenaltyKind, PenaltySpec, ProxResult};
pub use solver::{fit, init_state, predict_labels, ClusteringResult, InitStrategy, Solver};
pub use state::{IterationRecord, SolverState};
