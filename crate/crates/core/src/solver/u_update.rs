//! Basis update under non-negativity and orthogonality.
//!
//! The subproblem `min ½‖W − U M‖²  s.t. U ≥ 0, UᵀU = I` (with `M = ZᵀAᵀ`) is
//! replaced by the exact penalty `f_σ(U) = f(U) + σ(‖Uv‖² − 1)`, `v = e/√r`,
//! over non-negative matrices with unit-norm columns. On that set
//! `‖Uv‖² − 1 = (1/r)·Σ_{i≠j} ⟨uᵢ, uⱼ⟩ ≥ 0`, vanishing exactly when the
//! columns are orthogonal. Iterates move along the Riemannian gradient and are
//! mapped back by clamping at zero and renormalizing columns.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::state::UStatus;

/// Tuning of the projected-gradient U-subsolver.
#[derive(Debug, Clone, PartialEq)]
pub struct USubsolverConfig {
    /// Initial exact-penalty weight σ_U.
    pub ortho_penalty: f64,
    /// Stationarity tolerance on ‖min(U, grad f_σ(U))‖_F.
    pub eps1: f64,
    /// Orthogonality tolerance on |‖Uv‖² − 1|.
    pub eps2: f64,
    pub max_inner_iters: usize,
    pub armijo_c: f64,
    pub backtrack_ratio: f64,
    /// Penalty escalations allowed when ‖Uv‖² − 1 stays above `eps2`.
    pub max_penalty_rounds: usize,
    pub penalty_growth: f64,
    v: DVector<f64>,
}

impl USubsolverConfig {
    pub fn new(rank: usize, ortho_penalty: f64, eps1: f64, eps2: f64, max_inner_iters: usize) -> Self {
        USubsolverConfig {
            ortho_penalty,
            eps1,
            eps2,
            max_inner_iters,
            armijo_c: 1e-4,
            backtrack_ratio: 0.5,
            max_penalty_rounds: 6,
            penalty_growth: 10.0,
            v: unit_mean_vector(rank),
        }
    }

    /// `e/√r`.
    pub fn v(&self) -> &DVector<f64> {
        &self.v
    }
}

/// The constant unit vector `e/√r`.
pub fn unit_mean_vector(rank: usize) -> DVector<f64> {
    DVector::from_element(rank, 1.0 / (rank as f64).sqrt())
}

/// `‖Uv‖² − 1`.
pub fn penalty_gap(u: &DMatrix<f64>, v: &DVector<f64>) -> f64 {
    (u * v).norm_squared() - 1.0
}

/// `f_σ(U) = ½‖W − UZᵀAᵀ‖² + σ(‖Uv‖² − 1)`, evaluated from the residual.
pub fn f_sigma(
    u: &DMatrix<f64>,
    w: &DMatrix<f64>,
    z: &DMatrix<f64>,
    a: &DMatrix<f64>,
    sigma_u: f64,
    v: &DVector<f64>,
) -> f64 {
    let m = z.transpose() * a.transpose();
    0.5 * (w - u * m).norm_squared() + sigma_u * penalty_gap(u, v)
}

/// Euclidean gradient `−(W − UZᵀAᵀ)(ZᵀAᵀ)ᵀ + 2σ(Uv)vᵀ`.
pub fn euclidean_grad(
    u: &DMatrix<f64>,
    w: &DMatrix<f64>,
    z: &DMatrix<f64>,
    a: &DMatrix<f64>,
    sigma_u: f64,
    v: &DVector<f64>,
) -> DMatrix<f64> {
    let m = z.transpose() * a.transpose();
    -(w - u * &m) * m.transpose() + (u * v) * v.transpose() * (2.0 * sigma_u)
}

/// Riemannian gradient `∇f_σ(U) − U·Diag(Uᵀ∇f_σ(U))`.
pub fn grad_f_sigma(
    u: &DMatrix<f64>,
    w: &DMatrix<f64>,
    z: &DMatrix<f64>,
    a: &DMatrix<f64>,
    sigma_u: f64,
    v: &DVector<f64>,
) -> DMatrix<f64> {
    tangent(u, euclidean_grad(u, w, z, a, sigma_u, v))
}

fn tangent(u: &DMatrix<f64>, mut g: DMatrix<f64>) -> DMatrix<f64> {
    for j in 0..u.ncols() {
        let coef = u.column(j).dot(&g.column(j));
        g.column_mut(j).axpy(-coef, &u.column(j), 1.0);
    }
    g
}

/// `‖min(U, G)‖_F`, the projected-gradient stationarity measure.
pub fn stationarity(u: &DMatrix<f64>, g: &DMatrix<f64>) -> f64 {
    u.zip_map(g, f64::min).norm()
}

/// Maps a non-negative matrix onto the non-negative orthogonal set: each row
/// keeps only its largest entry, empty columns take the strongest row from a
/// column that owns several, and columns are renormalized.
pub fn round_orthogonal(u: &DMatrix<f64>) -> DMatrix<f64> {
    let (d, r) = u.shape();
    let mut owner: Vec<Option<usize>> = (0..d)
        .map(|i| {
            let (j, &best) = u
                .row(i)
                .iter()
                .enumerate()
                .fold((0, &f64::NEG_INFINITY), |acc, (j, v)| if *v > *acc.1 { (j, v) } else { acc });
            (best > 0.0).then_some(j)
        })
        .collect();
    for j in 0..r {
        if owner.iter().any(|&o| o == Some(j)) {
            continue;
        }
        let mut counts = vec![0usize; r];
        owner.iter().flatten().for_each(|&k| counts[k] += 1);
        let donor = (0..d)
            .filter(|&i| owner[i].map_or(true, |k| counts[k] >= 2))
            .max_by(|&a, &b| u[(a, j)].total_cmp(&u[(b, j)]).then(b.cmp(&a)));
        if let Some(i) = donor {
            owner[i] = Some(j);
        }
    }
    let mut out = DMatrix::zeros(d, r);
    for (i, o) in owner.iter().enumerate() {
        if let Some(j) = *o {
            // Rows recruited into an empty column may hold a zero there.
            out[(i, j)] = u[(i, j)].max(f64::MIN_POSITIVE.sqrt());
        }
    }
    normalize_columns(&mut out);
    out
}

/// Scales every non-zero column to unit norm. Returns false if a column is zero.
pub fn normalize_columns(u: &mut DMatrix<f64>) -> bool {
    let mut all_nonzero = true;
    for mut col in u.column_iter_mut() {
        let norm = col.norm();
        if norm > 0.0 {
            col /= norm;
        } else {
            all_nonzero = false;
        }
    }
    all_nonzero
}

/// Outcome of [`update_u`].
#[derive(Debug, Clone)]
pub struct UUpdate {
    pub u: DMatrix<f64>,
    pub status: UStatus,
    pub inner_iters: usize,
    pub stationarity: f64,
    pub penalty_gap: f64,
    /// Penalty weight in force at exit.
    pub penalty: f64,
}

/// Quadratic pieces of `f(U) = ½‖W‖² − ⟨U, WMᵀ⟩ + ½⟨UᵀU, MMᵀ⟩`.
struct Quadratic {
    wm: DMatrix<f64>,
    mm: DMatrix<f64>,
    w_sq: f64,
}

impl Quadratic {
    fn new(w: &DMatrix<f64>, z: &DMatrix<f64>, a: &DMatrix<f64>) -> Self {
        let m = z.transpose() * a.transpose();
        Quadratic {
            wm: w * m.transpose(),
            mm: &m * m.transpose(),
            w_sq: w.norm_squared(),
        }
    }

    fn f(&self, u: &DMatrix<f64>) -> f64 {
        let utu = u.transpose() * u;
        0.5 * self.w_sq - u.dot(&self.wm) + 0.5 * utu.dot(&self.mm)
    }

    fn f_sigma(&self, u: &DMatrix<f64>, sigma: f64, v: &DVector<f64>) -> f64 {
        self.f(u) + sigma * penalty_gap(u, v)
    }

    fn grad_sigma(&self, u: &DMatrix<f64>, sigma: f64, v: &DVector<f64>) -> DMatrix<f64> {
        let egrad = u * &self.mm - &self.wm + (u * v) * v.transpose() * (2.0 * sigma);
        tangent(u, egrad)
    }
}

enum InnerExit {
    Stationary,
    Cap,
    Stalled,
}

/// Feasible iterate with the lowest `f` seen so far.
struct Best {
    u: Option<DMatrix<f64>>,
    f: f64,
}

/// Finds `U^{k+1}` from `U^k` for the subproblem defined by `W`, `Z`, `A`.
///
/// The accepted U has `|‖Uv‖² − 1| ≤ eps2` and `f(U) ≤ f(U^k)`; when no such
/// point is found the previous U is returned with [`UStatus::Rejected`].
pub fn update_u(
    u_old: &DMatrix<f64>,
    w: &DMatrix<f64>,
    z: &DMatrix<f64>,
    a: &DMatrix<f64>,
    cfg: &USubsolverConfig,
) -> Result<UUpdate> {
    let (d, r) = u_old.shape();
    if w.nrows() != d || z.ncols() != r || a.ncols() != z.nrows() || w.ncols() != a.nrows() {
        return Err(Error::dim(
            "update_u",
            format!(
                "U {}x{}, W {}x{}, Z {}x{}, A {}x{}",
                d,
                r,
                w.nrows(),
                w.ncols(),
                z.nrows(),
                z.ncols(),
                a.nrows(),
                a.ncols()
            ),
        ));
    }
    let v = &cfg.v;
    let quad = Quadratic::new(w, z, a);
    let m = z.transpose() * a.transpose();
    let f_direct = |u: &DMatrix<f64>| 0.5 * (w - u * &m).norm_squared();
    let f_old = f_direct(u_old);

    let mut u = u_old.clone();
    let mut sigma = cfg.ortho_penalty;
    let mut step = 1.0;
    let mut inner_total = 0;
    let mut best = Best {
        u: None,
        f: f64::INFINITY,
    };
    let mut exit = InnerExit::Cap;
    for round in 0..cfg.max_penalty_rounds.max(1) {
        if round > 0 {
            sigma *= cfg.penalty_growth;
        }
        let (e, iters) = inner_solve(&quad, &mut u, sigma, v, cfg, &mut step, &mut best);
        exit = e;
        inner_total += iters;
        if penalty_gap(&u, v).abs() <= cfg.eps2 {
            break;
        }
    }

    let gap = penalty_gap(&u, v);
    let (candidate, mut status) = if gap.abs() <= cfg.eps2 {
        let status = match exit {
            InnerExit::Stationary => UStatus::Converged,
            InnerExit::Cap | InnerExit::Stalled => UStatus::IterationCap,
        };
        (u, status)
    } else if let Some(b) = best.u.take() {
        (b, UStatus::IterationCap)
    } else {
        (round_orthogonal(&u), UStatus::Rounded)
    };

    let feasible = penalty_gap(&candidate, v).abs() <= cfg.eps2;
    let chosen = if feasible && f_direct(&candidate) <= f_old {
        candidate
    } else {
        status = UStatus::Rejected;
        u_old.clone()
    };
    let g = quad.grad_sigma(&chosen, sigma, v);
    Ok(UUpdate {
        stationarity: stationarity(&chosen, &g),
        penalty_gap: penalty_gap(&chosen, v),
        penalty: sigma,
        inner_iters: inner_total,
        status,
        u: chosen,
    })
}

fn inner_solve(
    quad: &Quadratic,
    u: &mut DMatrix<f64>,
    sigma: f64,
    v: &DVector<f64>,
    cfg: &USubsolverConfig,
    step: &mut f64,
    best: &mut Best,
) -> (InnerExit, usize) {
    for t in 0..cfg.max_inner_iters {
        let g = quad.grad_sigma(u, sigma, v);
        if stationarity(u, &g) <= cfg.eps1 {
            return (InnerExit::Stationary, t);
        }
        let f0 = quad.f_sigma(u, sigma, v);
        let mut s = if t == 0 { *step } else { *step * 2.0 };
        let mut accepted = None;
        for _ in 0..60 {
            let mut cand = (&*u - &g * s).map(|x| x.max(0.0));
            if normalize_columns(&mut cand) {
                let fc = quad.f_sigma(&cand, sigma, v);
                if fc <= f0 - cfg.armijo_c * (&cand - &*u).norm_squared() / s {
                    accepted = Some(cand);
                    break;
                }
            }
            s *= cfg.backtrack_ratio;
        }
        let Some(next) = accepted else {
            return (InnerExit::Stalled, t);
        };
        *step = s;
        *u = next;
        if penalty_gap(u, v).abs() <= cfg.eps2 {
            let f = quad.f(u);
            if f < best.f {
                best.f = f;
                best.u = Some(u.clone());
            }
        }
    }
    (InnerExit::Cap, cfg.max_inner_iters)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        DMatrix::from_fn(rows, cols, |_, _| rng.random::<f64>())
    }

    #[test]
    fn v_has_unit_norm() {
        for r in 1..8 {
            assert!((unit_mean_vector(r).norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn tangent_annihilates_column_scaling() {
        // Orthonormal U with ∇f = U·D gives a zero Riemannian gradient.
        let u = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 0.6, 0.0, 0.8]);
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![2.5, -1.0]));
        let g = tangent(&u, &u * d);
        assert!(g.norm() < 1e-15);
    }

    #[test]
    fn zero_gradient_at_exact_fit_without_penalty() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = random(4, 2, &mut rng);
        let z = random(3, 2, &mut rng);
        let a = random(5, 3, &mut rng);
        let w = &u * z.transpose() * a.transpose();
        let g = grad_f_sigma(&u, &w, &z, &a, 0.0, &unit_mean_vector(2));
        assert!(g.norm() < 1e-12);
    }

    #[test]
    fn euclidean_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (u, w, z, a) = (
            random(5, 3, &mut rng),
            random(5, 6, &mut rng),
            random(2, 3, &mut rng),
            random(6, 2, &mut rng),
        );
        let v = unit_mean_vector(3);
        let g = euclidean_grad(&u, &w, &z, &a, 0.7, &v);
        let h = 1e-6;
        for _ in 0..20 {
            let dir = random(5, 3, &mut rng).map(|x| x - 0.5);
            let fd = (f_sigma(&(&u + &dir * h), &w, &z, &a, 0.7, &v)
                - f_sigma(&(&u - &dir * h), &w, &z, &a, 0.7, &v))
                / (2.0 * h);
            let an = g.dot(&dir);
            assert!((fd - an).abs() <= 1e-5 * an.abs().max(1.0), "{fd} vs {an}");
        }
    }

    #[test]
    fn exact_minimizer_is_a_fixed_point() {
        // Column-orthonormal non-negative U* with disjoint supports.
        let u = DMatrix::from_row_slice(4, 2, &[0.6, 0.0, 0.8, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let z = DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.3, 1.0]);
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.5, 0.5, 0.0, 1.0]);
        let w = &u * z.transpose() * a.transpose();
        let cfg = USubsolverConfig::new(2, 1.0, 1e-4, 1e-4, 100);
        assert!(penalty_gap(&u, cfg.v()).abs() < 1e-15);
        let out = update_u(&u, &w, &z, &a, &cfg).unwrap();
        assert_eq!(out.status, UStatus::Converged);
        assert_eq!(out.inner_iters, 0);
        assert_eq!(out.u, u);
    }

    #[test]
    fn zero_z_accepts_feasible_point() {
        let u = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let z = DMatrix::zeros(2, 2);
        let a = DMatrix::from_element(4, 2, 1.0);
        let w = DMatrix::from_element(3, 4, 2.0);
        let cfg = USubsolverConfig::new(2, 1.0, 1e-4, 1e-4, 100);
        let out = update_u(&u, &w, &z, &a, &cfg).unwrap();
        assert!(out.penalty_gap.abs() <= 1e-4);
        assert!(out.stationarity <= 1e-4 || out.status != UStatus::Converged);
    }

    #[test]
    fn rank_one_matches_sphere_grid_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let z = DMatrix::from_element(1, 1, 1.0);
        let a = random(6, 1, &mut rng);
        let w = random(3, 6, &mut rng).map(|x| x - 0.2);
        let start = DMatrix::from_element(3, 1, 1.0 / 3f64.sqrt());
        let cfg = USubsolverConfig::new(1, 1.0, 1e-8, 1e-4, 2000);
        let out = update_u(&start, &w, &z, &a, &cfg).unwrap();
        let f = |u: &DMatrix<f64>| 0.5 * (&w - u * z.transpose() * a.transpose()).norm_squared();

        // Non-negative octant of the unit sphere at 1e-3 angular resolution.
        let steps = (std::f64::consts::FRAC_PI_2 / 1e-3).ceil() as usize;
        let mut best = f64::INFINITY;
        for i in 0..=steps {
            let theta = i as f64 * std::f64::consts::FRAC_PI_2 / steps as f64;
            for j in 0..=steps {
                let phi = j as f64 * std::f64::consts::FRAC_PI_2 / steps as f64;
                let u = DMatrix::from_column_slice(
                    3,
                    1,
                    &[theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()],
                );
                best = best.min(f(&u));
            }
        }
        assert!(f(&out.u) <= best + 1e-4, "{} vs {}", f(&out.u), best);
        assert!(out.u.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn never_increases_the_subproblem_objective() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let u = round_orthogonal(&random(8, 3, &mut rng));
            let z = random(3, 3, &mut rng);
            let a = random(10, 3, &mut rng);
            let w = random(8, 10, &mut rng);
            let cfg = USubsolverConfig::new(3, 0.1, 1e-4, 1e-4, 100);
            let out = update_u(&u, &w, &z, &a, &cfg).unwrap();
            let f = |u: &DMatrix<f64>| f_sigma(u, &w, &z, &a, 0.0, cfg.v());
            assert!(f(&out.u) <= f(&u));
            assert!(out.penalty_gap.abs() <= 1e-4);
            assert!(out.u.iter().all(|&x| x >= 0.0));
        }
    }

    #[test]
    fn rounding_yields_orthonormal_columns() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let u = round_orthogonal(&random(7, 4, &mut rng));
            let utu = u.transpose() * &u;
            assert!((utu - DMatrix::identity(4, 4)).norm() < 1e-12);
        }
        // Every row prefers column 0: the other columns still get a row.
        let skewed = DMatrix::from_fn(5, 3, |i, j| if j == 0 { 10.0 } else { 0.1 * i as f64 });
        let u = round_orthogonal(&skewed);
        assert!((u.transpose() * &u - DMatrix::identity(3, 3)).norm() < 1e-12);
    }
}
