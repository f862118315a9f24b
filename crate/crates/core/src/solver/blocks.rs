//! Closed-form block updates for A, Z, E and the multiplier.

use nalgebra::DMatrix;

use super::sylvester::SylvesterSolver;
use crate::error::{Error, Result};
use crate::graph::GraphContext;
use crate::penalty::PenaltySpec;
use crate::state::{reconstruct, BlockStep};

/// Left operator `2λL + 2μS` of the A-update with its eigendecomposition.
#[derive(Debug, Clone)]
pub struct AOperator {
    pub p: DMatrix<f64>,
    solver: SylvesterSolver,
    lambda: f64,
    mu: f64,
}

impl AOperator {
    pub fn new(ctx: &GraphContext, lambda: f64, mu: f64) -> Result<Self> {
        let mut p = &ctx.laplacian * (2.0 * lambda);
        for i in 0..p.nrows() {
            p[(i, i)] += 2.0 * mu * ctx.s[i];
        }
        let solver = SylvesterSolver::new(&p)?;
        Ok(AOperator {
            p,
            solver,
            lambda,
            mu,
        })
    }
}

#[derive(Debug, Clone)]
pub struct AUpdate {
    pub a: DMatrix<f64>,
    /// Unconstrained solution before projection.
    pub a_bar: DMatrix<f64>,
    pub step: BlockStep,
    pub regularized: bool,
    /// `‖PĀ + ĀQ − R‖ / ‖R‖`.
    pub residual: f64,
}

/// `β/2‖W − UZᵀAᵀ‖² + λTr(AᵀLA) + μTr((A−Y)ᵀS(A−Y))`.
pub fn a_objective(
    a: &DMatrix<f64>,
    w: &DMatrix<f64>,
    u: &DMatrix<f64>,
    z: &DMatrix<f64>,
    ctx: &GraphContext,
    lambda: f64,
    mu: f64,
    beta: f64,
) -> f64 {
    let fit = w - u * (a * z).transpose();
    0.5 * beta * fit.norm_squared()
        + super::lagrangian::graph_term(a, ctx, lambda)
        + super::lagrangian::label_term(a, ctx, mu)
}

/// Pieces `(Q, R)` of the A stationarity equation `P·A + A·Q = R`, with
/// `Q = βZ(UᵀU)Zᵀ` and `R = βWᵀUZᵀ + 2μSY`.
pub fn a_equation(
    w: &DMatrix<f64>,
    u: &DMatrix<f64>,
    z: &DMatrix<f64>,
    ctx: &GraphContext,
    mu: f64,
    beta: f64,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let q = z * (u.transpose() * u) * z.transpose() * beta;
    let q = (&q + q.transpose()) * 0.5;
    let mut r = w.transpose() * u * z.transpose() * beta;
    for i in 0..r.nrows() {
        if ctx.s[i] != 0.0 {
            let row = ctx.y.row(i) * (2.0 * mu * ctx.s[i]);
            r.row_mut(i).zip_apply(&row, |a, b| *a += b);
        }
    }
    (q, r)
}

/// Gradient of [`a_objective`] in A.
pub fn a_gradient(
    a: &DMatrix<f64>,
    w: &DMatrix<f64>,
    u: &DMatrix<f64>,
    z: &DMatrix<f64>,
    ctx: &GraphContext,
    op: &AOperator,
    beta: f64,
) -> DMatrix<f64> {
    let (q, r) = a_equation(w, u, z, ctx, op.mu, beta);
    &op.p * a + a * q - r
}

/// Solves the A stationarity equation, projects onto `A ≥ 0`, and keeps the
/// result only if it does not increase the block objective.
pub fn update_a(
    w: &DMatrix<f64>,
    u: &DMatrix<f64>,
    z: &DMatrix<f64>,
    a_old: &DMatrix<f64>,
    ctx: &GraphContext,
    op: &AOperator,
    beta: f64,
) -> Result<AUpdate> {
    let (q, r) = a_equation(w, u, z, ctx, op.mu, beta);
    let (a_bar, q_used, regularized) = match op.solver.solve(&q, &r) {
        Ok(a) => (a, q.clone(), false),
        Err(Error::SingularSylvester { .. }) => {
            let reg = 1e-10 * op.solver.scale().max(q.abs().max());
            let q_reg = &q + DMatrix::identity(q.nrows(), q.ncols()) * reg;
            (op.solver.solve(&q_reg, &r)?, q_reg, true)
        }
        Err(e) => return Err(e),
    };
    let rhs_norm = r.norm();
    let resid = (&op.p * &a_bar + &a_bar * &q_used - &r).norm();
    let residual = if rhs_norm > 0.0 { resid / rhs_norm } else { resid };

    let objective = |a: &DMatrix<f64>| a_objective(a, w, u, z, ctx, op.lambda, op.mu, beta);
    let candidate = a_bar.map(|x| x.max(0.0));
    let grad_old = &op.p * a_old + a_old * &q - &r;
    let (a, step) = safeguard(a_old, candidate, &grad_old, objective);
    Ok(AUpdate {
        a,
        a_bar,
        step,
        regularized,
        residual,
    })
}

#[derive(Debug, Clone)]
pub struct ZUpdate {
    pub z: DMatrix<f64>,
    pub z_bar: DMatrix<f64>,
    pub step: BlockStep,
    pub pseudo_inverse: bool,
    /// `‖AᵀA Z̄ UᵀU − AᵀWᵀU‖ / ‖AᵀWᵀU‖`.
    pub residual: f64,
}

/// Least-squares Z followed by projection onto `Z ≥ 0`, safeguarded like A.
pub fn update_z(
    w: &DMatrix<f64>,
    u: &DMatrix<f64>,
    a: &DMatrix<f64>,
    z_old: &DMatrix<f64>,
) -> Result<ZUpdate> {
    if z_old.shape() != (a.ncols(), u.ncols()) {
        return Err(Error::dim(
            "update_z",
            format!("Z is {}x{}", z_old.nrows(), z_old.ncols()),
        ));
    }
    let ata = a.transpose() * a;
    let utu = u.transpose() * u;
    let b = a.transpose() * w.transpose() * u;
    let (ata_inv, pinv_a) = spd_inverse(&ata);
    let (utu_inv, pinv_u) = spd_inverse(&utu);
    let z_bar = &ata_inv * &b * &utu_inv;
    let b_norm = b.norm();
    let resid = (&ata * &z_bar * &utu - &b).norm();
    let residual = if b_norm > 0.0 { resid / b_norm } else { resid };

    let objective = |z: &DMatrix<f64>| 0.5 * (w - u * (a * z).transpose()).norm_squared();
    let grad_old = &ata * z_old * &utu - &b;
    let candidate = z_bar.map(|x| x.max(0.0));
    let (z, step) = safeguard(z_old, candidate, &grad_old, objective);
    Ok(ZUpdate {
        z,
        z_bar,
        step,
        pseudo_inverse: pinv_a || pinv_u,
        residual,
    })
}

/// Inverse of a symmetric PSD matrix, falling back to the minimum-norm
/// pseudo-inverse when it is numerically rank deficient.
fn spd_inverse(m: &DMatrix<f64>) -> (DMatrix<f64>, bool) {
    let svd = m.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if smax > 0.0 && smin > 1e-12 * smax {
        if let Some(chol) = m.clone().cholesky() {
            return (chol.inverse(), false);
        }
    }
    let tol = 1e-12 * smax.max(f64::MIN_POSITIVE);
    let pinv = svd
        .pseudo_inverse(tol)
        .unwrap_or_else(|_| DMatrix::zeros(m.nrows(), m.ncols()));
    (pinv, true)
}

/// Accepts `candidate` if it does not increase `objective`, otherwise tries
/// the exact minimizer of the quadratic along `old → candidate`, otherwise
/// keeps `old`. Both endpoints are non-negative so every trial point is too.
fn safeguard(
    old: &DMatrix<f64>,
    candidate: DMatrix<f64>,
    grad_old: &DMatrix<f64>,
    objective: impl Fn(&DMatrix<f64>) -> f64,
) -> (DMatrix<f64>, BlockStep) {
    let f_old = objective(old);
    let f_cand = objective(&candidate);
    if f_cand <= f_old {
        return (candidate, BlockStep::Projected);
    }
    let dir = &candidate - old;
    let slope = grad_old.dot(&dir);
    if slope < 0.0 {
        let curvature = f_cand - f_old - slope;
        let theta = (-slope / (2.0 * curvature)).clamp(0.0, 1.0);
        let trial = old + dir * theta;
        if objective(&trial) <= f_old {
            return (trial, BlockStep::LineSearch);
        }
    }
    (old.clone(), BlockStep::Kept)
}

#[derive(Debug, Clone)]
pub struct EUpdate {
    pub e: DMatrix<f64>,
    pub retained_rows: usize,
}

/// Row-wise prox of `V = X − UZᵀAᵀ − Λ/β` at scale `1/β`.
///
/// A row keeps its previous value when the prox candidate scores worse on
/// `½‖e − Vᵢ‖² + φ_{1/β}(‖e‖)`, which can only happen for penalties whose
/// closed form is not the exact minimizer.
pub fn update_e(
    x: &DMatrix<f64>,
    u: &DMatrix<f64>,
    z: &DMatrix<f64>,
    a: &DMatrix<f64>,
    multiplier: &DMatrix<f64>,
    e_old: &DMatrix<f64>,
    spec: &PenaltySpec,
    beta: f64,
) -> Result<EUpdate> {
    let phi = super::lagrangian::residual_penalty(spec, beta)?;
    let v = x - reconstruct(u, z, a)? - multiplier / beta;
    let mut e = DMatrix::zeros(v.nrows(), v.ncols());
    let mut retained_rows = 0;
    let row_objective = |row: &[f64], target: &[f64]| {
        let dist: f64 = row.iter().zip(target).map(|(a, b)| (a - b) * (a - b)).sum();
        let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
        0.5 * dist + phi.value(norm)
    };
    for i in 0..v.nrows() {
        let target: Vec<f64> = v.row(i).iter().copied().collect();
        let candidate = phi.prox_row(&target);
        let previous: Vec<f64> = e_old.row(i).iter().copied().collect();
        let chosen = if row_objective(&candidate, &target) <= row_objective(&previous, &target) {
            candidate
        } else {
            retained_rows += 1;
            previous
        };
        for (j, val) in chosen.into_iter().enumerate() {
            e[(i, j)] = val;
        }
    }
    Ok(EUpdate { e, retained_rows })
}

/// `Λ − β(X − UZᵀAᵀ − E)`.
pub fn update_lambda(
    multiplier: &DMatrix<f64>,
    x: &DMatrix<f64>,
    u: &DMatrix<f64>,
    z: &DMatrix<f64>,
    a: &DMatrix<f64>,
    e: &DMatrix<f64>,
    beta: f64,
) -> Result<DMatrix<f64>> {
    let r = x - reconstruct(u, z, a)? - e;
    Ok(multiplier - r * beta)
}
