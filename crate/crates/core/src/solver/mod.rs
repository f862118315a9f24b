//! ADMM solver for robust orthogonal NMF.
//!
//! Each outer iteration updates U (projected gradient on the exact-penalty
//! subproblem), A (Sylvester equation), Z (normal equations), E (row-wise
//! proximal step) and finally the multiplier Λ.

pub mod blocks;
pub mod lagrangian;
pub mod sylvester;
pub mod u_update;

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::baselines::kmeans;
use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::graph::GraphContext;
use crate::metrics::hungarian_assignment;
use crate::params::Hyperparams;
use crate::penalty::PenaltySpec;
use crate::state::{reconstruct, IterationRecord, SolverState};

pub use blocks::{update_a, update_e, update_lambda, update_z, AOperator};
pub use lagrangian::augmented_lagrangian;
pub use sylvester::{solve_sylvester, SylvesterSolver};
pub use u_update::{grad_f_sigma, update_u, USubsolverConfig};

const KMEANS_INIT_ITERS: usize = 100;

/// How the iterate is initialized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitStrategy {
    #[default]
    Random,
    Kmeans,
}

impl FromStr for InitStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "random" => Ok(InitStrategy::Random),
            "kmeans" | "k-means" => Ok(InitStrategy::Kmeans),
            other => Err(Error::param("init", format!("unknown strategy `{other}`"))),
        }
    }
}

impl fmt::Display for InitStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InitStrategy::Random => "random",
            InitStrategy::Kmeans => "kmeans",
        })
    }
}

/// Default exact-penalty weight `10·‖X‖_F/(d·n)`.
pub fn default_ortho_penalty(x: &DMatrix<f64>) -> f64 {
    let scale = 10.0 * x.norm() / (x.nrows() * x.ncols()) as f64;
    if scale > 0.0 {
        scale
    } else {
        1.0
    }
}

/// Builds `(U⁰, A⁰, Z⁰, E⁰, Λ⁰)` with `E⁰ = X − U⁰Z⁰ᵀA⁰ᵀ` and `Λ⁰ = 0`.
///
/// U⁰ is always mapped onto the non-negative orthogonal set so that the first
/// U-step starts from a point satisfying the orthogonality tolerance.
pub fn init_state(
    data: &DataMatrix,
    ctx: &GraphContext,
    hp: &Hyperparams,
    strategy: InitStrategy,
) -> Result<SolverState> {
    let (d, n) = data.values.shape();
    let c = ctx.classes();
    let r = hp.effective_rank(c);
    if ctx.samples() != n {
        return Err(Error::dim(
            "init_state",
            format!("graph has {} samples, data has {n}", ctx.samples()),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(hp.seed);
    let random_u = DMatrix::from_fn(d, r, |_, _| rng.random::<f64>());
    let mut a = ctx.y.clone();
    for i in 0..n {
        if !ctx.labeled_mask[i] {
            for j in 0..c {
                a[(i, j)] += 0.1 * rng.random::<f64>();
            }
        }
    }
    let z = DMatrix::from_fn(c, r, |_, _| rng.random::<f64>());

    let u = match strategy {
        InitStrategy::Random => u_update::round_orthogonal(&random_u),
        InitStrategy::Kmeans => {
            let km = kmeans(&data.values, c, KMEANS_INIT_ITERS, hp.seed)?;
            let assignment = align_clusters(&km.labels, ctx, c);
            for i in 0..n {
                let mut onehot = vec![0.0; c];
                onehot[assignment[km.labels[i]]] = 1.0;
                for j in 0..c {
                    a[(i, j)] = if ctx.labeled_mask[i] {
                        0.5 * onehot[j] + 0.5 * ctx.y[(i, j)]
                    } else {
                        onehot[j]
                    };
                }
            }
            let centroids = if r == c {
                km.factors
            } else {
                kmeans(&data.values, r, KMEANS_INIT_ITERS, hp.seed)?.factors
            }
            .map(|f| f.u)
            .expect("k-means returns centroids");
            u_update::round_orthogonal(&centroids.map(|x| x.max(0.0)))
        }
    };
    let e = &data.values - reconstruct(&u, &z, &a)?;
    Ok(SolverState {
        u,
        a,
        z,
        e,
        lambda: DMatrix::zeros(d, n),
        iter: 0,
        trace: Vec::new(),
    })
}

/// Maps k-means cluster ids to classes by maximum overlap on labeled samples.
fn align_clusters(labels: &[usize], ctx: &GraphContext, c: usize) -> Vec<usize> {
    let mut overlap = DMatrix::<f64>::zeros(c, c);
    for (i, &k) in labels.iter().enumerate() {
        if ctx.labeled_mask[i] {
            if let Some(class) = (0..c).find(|&j| ctx.y[(i, j)] > 0.0) {
                overlap[(k, class)] -= 1.0;
            }
        }
    }
    hungarian_assignment(&overlap)
}

/// Predicted labels plus rows of A that carried no signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub labels: Vec<usize>,
    /// Samples whose row of A was all zero; they are assigned class 0.
    pub zero_rows: Vec<usize>,
}

/// Row-wise argmax of A, ties to the lowest column.
pub fn predict_labels(a: &DMatrix<f64>) -> Prediction {
    let mut labels = Vec::with_capacity(a.nrows());
    let mut zero_rows = Vec::new();
    for (i, row) in a.row_iter().enumerate() {
        let mut best = 0;
        for j in 1..row.len() {
            if row[j] > row[best] {
                best = j;
            }
        }
        if row.iter().all(|&x| x == 0.0) {
            zero_rows.push(i);
        }
        labels.push(best);
    }
    Prediction { labels, zero_rows }
}

/// Outcome of [`fit`].
#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringResult {
    pub prediction: Prediction,
    pub state: SolverState,
    /// Feasibility and dual residual both fell below the outer tolerance.
    pub converged: bool,
}

impl ClusteringResult {
    pub fn labels(&self) -> &[usize] {
        &self.prediction.labels
    }

    pub fn trace(&self) -> &[IterationRecord] {
        &self.state.trace
    }
}

/// One ADMM run: fixed data, graph, hyperparameters and penalty.
pub struct Solver<'a> {
    x: &'a DMatrix<f64>,
    ctx: &'a GraphContext,
    hp: &'a Hyperparams,
    spec: &'a PenaltySpec,
    a_op: AOperator,
    u_cfg: USubsolverConfig,
    state: SolverState,
}

impl<'a> Solver<'a> {
    pub fn new(
        data: &'a DataMatrix,
        ctx: &'a GraphContext,
        hp: &'a Hyperparams,
        spec: &'a PenaltySpec,
        state: SolverState,
    ) -> Result<Self> {
        let (d, n) = data.values.shape();
        hp.validate(d, n, ctx.classes())?;
        let r = hp.effective_rank(ctx.classes());
        if state.u.shape() != (d, r)
            || state.a.shape() != (n, ctx.classes())
            || state.z.shape() != (ctx.classes(), r)
            || state.e.shape() != (d, n)
            || state.lambda.shape() != (d, n)
        {
            return Err(Error::dim("solver state", "factor shapes do not match the data"));
        }
        let sigma = hp
            .ortho_penalty
            .unwrap_or_else(|| default_ortho_penalty(&data.values));
        Ok(Solver {
            x: &data.values,
            ctx,
            hp,
            spec,
            a_op: AOperator::new(ctx, hp.lambda, hp.mu)?,
            u_cfg: USubsolverConfig::new(r, sigma, hp.eps1, hp.eps2, hp.max_inner_iters),
            state,
        })
    }

    pub fn state(&self) -> &SolverState {
        &self.state
    }

    pub fn into_state(self) -> SolverState {
        self.state
    }

    pub fn lagrangian(&self) -> Result<f64> {
        augmented_lagrangian(self.x, &self.state, self.ctx, self.hp, self.spec)
    }

    /// Runs one outer iteration and appends its record to the trace.
    pub fn step(&mut self) -> Result<IterationRecord> {
        let beta = self.hp.beta;
        let iter = self.state.iter + 1;
        let x = self.x;
        let w = |s: &SolverState| x - &s.e - &s.lambda / beta;
        let mut deltas = [0.0; 5];
        let mut before = self.lagrangian()?;
        let fitted_before = self.state.reconstruct()?;

        let wk = w(&self.state);
        let uu = update_u(&self.state.u, &wk, &self.state.z, &self.state.a, &self.u_cfg)?;
        self.state.u = uu.u.clone();
        before = self.settle("U", iter, before, &mut deltas[0])?;

        let au = update_a(&wk, &self.state.u, &self.state.z, &self.state.a, self.ctx, &self.a_op, beta)?;
        self.state.a = au.a;
        before = self.settle("A", iter, before, &mut deltas[1])?;

        let zu = update_z(&wk, &self.state.u, &self.state.a, &self.state.z)?;
        self.state.z = zu.z;
        before = self.settle("Z", iter, before, &mut deltas[2])?;

        let s = &self.state;
        let eu = update_e(x, &s.u, &s.z, &s.a, &s.lambda, &s.e, self.spec, beta)?;
        self.state.e = eu.e;
        before = self.settle("E", iter, before, &mut deltas[3])?;

        let s = &self.state;
        self.state.lambda = update_lambda(&s.lambda, x, &s.u, &s.z, &s.a, &s.e, beta)?;
        let lagrangian = self.settle("Lambda", iter, before, &mut deltas[4])?;

        let record = IterationRecord {
            iter,
            lagrangian,
            feasibility: self.state.feasibility(x)?,
            dual_residual: (self.state.reconstruct()? - &fitted_before).norm() / scale(&fitted_before),
            ortho_residual: self.state.orthogonality_residual(),
            penalty_gap: uu.penalty_gap,
            block_deltas: deltas,
            u_status: uu.status,
            u_inner_iters: uu.inner_iters,
            u_stationarity: uu.stationarity,
            u_penalty: uu.penalty,
            a_step: au.step,
            a_regularized: au.regularized,
            a_residual: au.residual,
            z_step: zu.step,
            z_pseudo_inverse: zu.pseudo_inverse,
            z_residual: zu.residual,
            e_retained_rows: eu.retained_rows,
        };
        self.state.iter = iter;
        self.state.trace.push(record.clone());
        Ok(record)
    }

    /// Checks the iterate after a block and records the Lagrangian change.
    fn settle(&self, block: &'static str, iteration: usize, before: f64, delta: &mut f64) -> Result<f64> {
        let after = self.lagrangian()?;
        if !self.state.is_finite() || !after.is_finite() {
            return Err(Error::NonFinite { block, iteration });
        }
        *delta = after - before;
        Ok(after)
    }
}

fn scale(x: &DMatrix<f64>) -> f64 {
    let norm = x.norm();
    if norm > 0.0 {
        norm
    } else {
        1.0
    }
}

/// Runs the solver from `state` until both the feasibility and the dual
/// residual fall below the outer tolerance, or the iteration cap is reached.
pub fn fit_from(
    data: &DataMatrix,
    ctx: &GraphContext,
    hp: &Hyperparams,
    spec: &PenaltySpec,
    state: SolverState,
) -> Result<ClusteringResult> {
    let mut solver = Solver::new(data, ctx, hp, spec, state)?;
    let mut converged = false;
    for _ in 0..hp.max_outer_iters {
        let record = solver.step()?;
        if record.feasibility <= hp.outer_tol && record.dual_residual <= hp.outer_tol {
            converged = true;
            break;
        }
    }
    let state = solver.into_state();
    Ok(ClusteringResult {
        prediction: predict_labels(&state.a),
        state,
        converged,
    })
}

/// Initializes with `init` and runs [`fit_from`].
pub fn fit(
    data: &DataMatrix,
    ctx: &GraphContext,
    hp: &Hyperparams,
    spec: &PenaltySpec,
    init: InitStrategy,
) -> Result<ClusteringResult> {
    let state = init_state(data, ctx, hp, init)?;
    fit_from(data, ctx, hp, spec, state)
}
