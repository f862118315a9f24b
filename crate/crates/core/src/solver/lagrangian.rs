use nalgebra::DMatrix;

use crate::error::Result;
use crate::graph::GraphContext;
use crate::params::Hyperparams;
use crate::penalty::PenaltySpec;
use crate::state::{reconstruct, SolverState};

/// The row penalty used by the E-step: the same shape with scale `1/β`.
pub fn residual_penalty(spec: &PenaltySpec, beta: f64) -> Result<PenaltySpec> {
    spec.with_sigma(1.0 / beta)
}

/// `Σᵢ β·φ_{1/β}(‖Eᵢ‖₂)`, the structured loss whose proximal step is the
/// row-wise prox at scale `1/β`.
pub fn structured_loss(e: &DMatrix<f64>, spec: &PenaltySpec, beta: f64) -> Result<f64> {
    let phi = residual_penalty(spec, beta)?;
    Ok(e.row_iter().map(|row| beta * phi.value(row.norm())).sum())
}

/// `λ·Tr(AᵀLA)`.
pub fn graph_term(a: &DMatrix<f64>, ctx: &GraphContext, lambda: f64) -> f64 {
    lambda * a.dot(&(&ctx.laplacian * a))
}

/// `μ·Tr((A − Y)ᵀS(A − Y))`.
pub fn label_term(a: &DMatrix<f64>, ctx: &GraphContext, mu: f64) -> f64 {
    let mut total = 0.0;
    for i in 0..a.nrows() {
        if ctx.s[i] != 0.0 {
            total += ctx.s[i] * (a.row(i) - ctx.y.row(i)).norm_squared();
        }
    }
    mu * total
}

/// Augmented Lagrangian
/// `‖E‖₂,φ + λTr(AᵀLA) + μTr((A−Y)ᵀS(A−Y)) − ⟨Λ, R⟩ + (β/2)‖R‖²`
/// with `R = X − UZᵀAᵀ − E`.
pub fn augmented_lagrangian(
    x: &DMatrix<f64>,
    state: &SolverState,
    ctx: &GraphContext,
    hp: &Hyperparams,
    spec: &PenaltySpec,
) -> Result<f64> {
    let r = x - reconstruct(&state.u, &state.z, &state.a)? - &state.e;
    Ok(structured_loss(&state.e, spec, hp.beta)?
        + graph_term(&state.a, ctx, hp.lambda)
        + label_term(&state.a, ctx, hp.mu)
        - state.lambda.dot(&r)
        + 0.5 * hp.beta * r.norm_squared())
}
