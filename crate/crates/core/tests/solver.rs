use ronmf::state::{BlockStep, UStatus};
use ronmf::*;

fn blobs(seed: u64) -> (DataMatrix, GraphContext, Hyperparams) {
    let data = generate_synthetic(3, 20, 15, 2.0, seed).unwrap();
    let hp = Hyperparams {
        seed,
        max_outer_iters: 40,
        ..Hyperparams::default()
    };
    let ctx = GraphContext::build(&data, hp.knn, WeightScheme::Binary, hp.labeled_fraction, seed).unwrap();
    (data, ctx, hp)
}

fn spec(kind: PenaltyKind) -> PenaltySpec {
    PenaltySpec::default_for(kind, 1.0).unwrap()
}

#[test]
fn iterates_stay_nonnegative_and_blocks_solve_their_equations() {
    for kind in [PenaltyKind::Mcp, PenaltyKind::Scad, PenaltyKind::Etp] {
        let (data, ctx, hp) = blobs(3);
        let state = init_state(&data, &ctx, &hp, InitStrategy::Random).unwrap();
        let spec = spec(kind);
        let mut solver = Solver::new(&data, &ctx, &hp, &spec, state).unwrap();
        for _ in 0..30 {
            let rec = solver.step().unwrap();
            let s = solver.state();
            assert!(s.u.min() >= 0.0 && s.a.min() >= 0.0 && s.z.min() >= 0.0);
            assert!(rec.a_residual <= 1e-8, "A residual {}", rec.a_residual);
            assert!(rec.z_residual <= 1e-10 || rec.z_pseudo_inverse, "Z residual {}", rec.z_residual);
            if rec.u_status != UStatus::Rejected {
                assert!(rec.penalty_gap.abs() <= hp.eps2);
                assert!(rec.u_stationarity <= hp.eps1 || rec.u_status != UStatus::Converged);
            }
        }
    }
}

#[test]
fn fit_is_deterministic() {
    let (data, ctx, hp) = blobs(5);
    let a = fit(&data, &ctx, &hp, &spec(PenaltyKind::Mcp), InitStrategy::Random).unwrap();
    let b = fit(&data, &ctx, &hp, &spec(PenaltyKind::Mcp), InitStrategy::Random).unwrap();
    assert_eq!(a.labels(), b.labels());
    assert_eq!(a.trace(), b.trace());
    assert_eq!(a.state, b.state);
}

#[test]
fn zero_iterations_returns_the_initial_state() {
    let (data, ctx, mut hp) = blobs(1);
    hp.max_outer_iters = 0;
    let init = init_state(&data, &ctx, &hp, InitStrategy::Random).unwrap();
    let res = fit(&data, &ctx, &hp, &spec(PenaltyKind::Etp), InitStrategy::Random).unwrap();
    assert!(res.trace().is_empty());
    assert_eq!(res.state, init);
    assert!(!res.converged);
}

#[test]
fn separated_blobs_cluster_well() {
    for init in [InitStrategy::Random, InitStrategy::Kmeans] {
        let (data, ctx, hp) = blobs(7);
        let res = fit(&data, &ctx, &hp, &spec(PenaltyKind::Etp), init).unwrap();
        let truth: Vec<usize> = (0..data.samples()).map(|i| data.class_of(i).unwrap()).collect();
        let report = evaluate(res.labels(), &truth).unwrap();
        assert!(report.acc >= 0.9, "{init}: ACC {}", report.acc);
        assert!(res.state.orthogonality_residual() <= 0.1);
    }
}

#[test]
fn records_are_well_formed() {
    let (data, ctx, hp) = blobs(2);
    let res = fit(&data, &ctx, &hp, &spec(PenaltyKind::Scad), InitStrategy::Random).unwrap();
    for (i, rec) in res.trace().iter().enumerate() {
        assert_eq!(rec.iter, i + 1);
        assert!(rec.lagrangian.is_finite() && rec.feasibility >= 0.0);
        assert!(rec.block_deltas[..4].iter().all(|d| *d <= 1e-8));
        assert!(matches!(rec.a_step, BlockStep::Projected | BlockStep::LineSearch | BlockStep::Kept));
    }
    let last = res.trace().last().unwrap();
    assert_eq!(res.converged, last.feasibility <= hp.outer_tol && last.dual_residual <= hp.outer_tol);
}

#[test]
fn mismatched_shapes_are_rejected() {
    let (data, ctx, hp) = blobs(4);
    let mut state = init_state(&data, &ctx, &hp, InitStrategy::Random).unwrap();
    state.a = state.a.remove_row(0);
    let err = Solver::new(&data, &ctx, &hp, &spec(PenaltyKind::Mcp), state).err().unwrap();
    assert_eq!(err.exit_code(), 3);

    let bad = Hyperparams { beta: -1.0, ..hp };
    let state = init_state(&data, &ctx, &hp, InitStrategy::Random).unwrap();
    let err = Solver::new(&data, &ctx, &bad, &spec(PenaltyKind::Mcp), state).err().unwrap();
    assert_eq!(err.code(), "E_CONFIG");
}
