use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The ADMM iterate (U, A, Z, E, Λ) plus its iteration history.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    /// d×r non-negative basis.
    pub u: DMatrix<f64>,
    /// n×c non-negative membership matrix.
    pub a: DMatrix<f64>,
    /// c×r non-negative auxiliary matrix.
    pub z: DMatrix<f64>,
    /// d×n residual absorbed by the robust loss.
    pub e: DMatrix<f64>,
    /// d×n multiplier.
    pub lambda: DMatrix<f64>,
    pub iter: usize,
    pub trace: Vec<IterationRecord>,
}

impl SolverState {
    /// `U Zᵀ Aᵀ` for this state.
    pub fn reconstruct(&self) -> Result<DMatrix<f64>> {
        reconstruct(&self.u, &self.z, &self.a)
    }

    /// ‖X − UZᵀAᵀ − E‖_F / ‖X‖_F (absolute when X = 0).
    pub fn feasibility(&self, x: &DMatrix<f64>) -> Result<f64> {
        let r = x - self.reconstruct()? - &self.e;
        let scale = x.norm();
        Ok(if scale > 0.0 { r.norm() / scale } else { r.norm() })
    }

    /// ‖UᵀU − I‖_F.
    pub fn orthogonality_residual(&self) -> f64 {
        let r = self.u.ncols();
        (self.u.transpose() * &self.u - DMatrix::identity(r, r)).norm()
    }

    pub fn is_finite(&self) -> bool {
        [&self.u, &self.a, &self.z, &self.e, &self.lambda]
            .iter()
            .all(|m| m.iter().all(|v| v.is_finite()))
    }
}

/// Computes `U Zᵀ Aᵀ` for U d×r, Z c×r, A n×c.
pub fn reconstruct(u: &DMatrix<f64>, z: &DMatrix<f64>, a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if u.ncols() != z.ncols() || z.nrows() != a.ncols() {
        return Err(Error::dim(
            "reconstruct",
            format!(
                "U is {}x{}, Z is {}x{}, A is {}x{}",
                u.nrows(),
                u.ncols(),
                z.nrows(),
                z.ncols(),
                a.nrows(),
                a.ncols()
            ),
        ));
    }
    // (A Z Uᵀ)ᵀ keeps the inner product at c×r.
    Ok(u * (a * z).transpose())
}

/// Outcome of the U-subsolver for one outer iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UStatus {
    /// Stationarity and orthogonality tolerances both met.
    Converged,
    /// Inner iteration cap reached before stationarity.
    IterationCap,
    /// Candidate failed the orthogonality check and was rounded onto the
    /// non-negative orthogonal set.
    Rounded,
    /// Candidate did not decrease the subproblem objective; previous U kept.
    Rejected,
}

/// How a projected closed-form block candidate was accepted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockStep {
    /// `max(X̄, 0)` decreased the block objective and was taken as is.
    Projected,
    /// Exact line search between the old block and the projected candidate.
    LineSearch,
    /// No decrease found; old block kept.
    Kept,
}

/// Diagnostics recorded after each outer iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    /// Augmented Lagrangian after the full iteration.
    pub lagrangian: f64,
    pub feasibility: f64,
    /// ‖UZᵀAᵀ − (UZᵀAᵀ)_prev‖_F / ‖(UZᵀAᵀ)_prev‖_F, the relative change of
    /// the fitted part.
    pub dual_residual: f64,
    /// ‖UᵀU − I‖_F.
    pub ortho_residual: f64,
    /// ‖Uv‖² − 1.
    pub penalty_gap: f64,
    /// Change of the augmented Lagrangian across the U, A, Z, E and Λ steps.
    pub block_deltas: [f64; 5],
    pub u_status: UStatus,
    pub u_inner_iters: usize,
    /// ‖min(U, grad f_σ(U))‖_F at the accepted U.
    pub u_stationarity: f64,
    /// Exact-penalty weight in force when the U-subsolver stopped.
    pub u_penalty: f64,
    pub a_step: BlockStep,
    pub a_regularized: bool,
    /// Relative residual of the A stationarity equation at Ā.
    pub a_residual: f64,
    pub z_step: BlockStep,
    pub z_pseudo_inverse: bool,
    /// Relative norm of the Z normal-equation gradient at Z̄.
    pub z_residual: f64,
    /// Rows of E left unchanged because the prox candidate scored worse.
    pub e_retained_rows: usize,
}
