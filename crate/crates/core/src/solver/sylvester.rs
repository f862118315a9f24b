//! Dense symmetric Sylvester solver `P·X + X·Q = R` by diagonalizing both sides.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative threshold under which `pᵢ + qⱼ` counts as singular.
pub const SINGULAR_TOL: f64 = 1e-12;

/// Eigendecomposition of the left operator `P`, reusable across right-hand
/// operators `Q` of any size.
#[derive(Debug, Clone)]
pub struct SylvesterSolver {
    vectors: DMatrix<f64>,
    values: DVector<f64>,
    scale: f64,
}

impl SylvesterSolver {
    pub fn new(p: &DMatrix<f64>) -> Result<Self> {
        check_symmetric("P", p)?;
        let eig = SymmetricEigen::new(p.clone());
        let scale = eig.eigenvalues.amax().max(1.0);
        Ok(SylvesterSolver {
            vectors: eig.eigenvectors,
            values: eig.eigenvalues,
            scale,
        })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `max(1, ‖P‖₂)`, the floor of the singularity threshold scale.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Solves `P·X + X·Q = R`.
    pub fn solve(&self, q: &DMatrix<f64>, r: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        check_symmetric("Q", q)?;
        let n = self.dim();
        let c = q.nrows();
        if r.shape() != (n, c) {
            return Err(Error::dim(
                "sylvester",
                format!("R is {}x{}, expected {n}x{c}", r.nrows(), r.ncols()),
            ));
        }
        let qe = SymmetricEigen::new(q.clone());
        let scale = self.scale.max(qe.eigenvalues.amax());
        let mut core = self.vectors.transpose() * r * &qe.eigenvectors;
        for j in 0..c {
            for i in 0..n {
                let sum = self.values[i] + qe.eigenvalues[j];
                if sum.abs() < SINGULAR_TOL * scale {
                    return Err(Error::SingularSylvester { row: i, col: j, sum });
                }
                core[(i, j)] /= sum;
            }
        }
        Ok(&self.vectors * core * qe.eigenvectors.transpose())
    }
}

/// Solves `P·X + X·Q = R` for symmetric `P` (n×n) and `Q` (c×c).
pub fn solve_sylvester(p: &DMatrix<f64>, q: &DMatrix<f64>, r: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    SylvesterSolver::new(p)?.solve(q, r)
}

fn check_symmetric(name: &'static str, m: &DMatrix<f64>) -> Result<()> {
    if !m.is_square() {
        return Err(Error::dim(
            "sylvester",
            format!("{name} is {}x{}", m.nrows(), m.ncols()),
        ));
    }
    let tol = 1e-10 * m.abs().max().max(1.0);
    if (m - m.transpose()).abs().max() > tol {
        return Err(Error::Contract {
            context: "sylvester",
            detail: format!("{name} is not symmetric"),
        });
    }
    Ok(())
}
