use proptest::prelude::*;

use lagrangian_pc::algorithms::{build_method, MethodConfig};
use lagrangian_pc::bench::fit_power_law;
use lagrangian_pc::framework::{check_cc1, check_cc2, lemma2_identity_check, PenaltyWindow};
use lagrangian_pc::linalg::{
    spectral_norm_sq, symmetric_eigenvalues, Cholesky, DenseMatrix, DenseVector,
};
use lagrangian_pc::problems::{
    generate_instance, kkt_oracle, prox_subproblem, subproblem_residual, BlockOracle, InstanceSpec,
    Metric, Template,
};
use lagrangian_pc::schedules::{validate_sequence, Condition, PenaltySchedule, ScheduleParams};
use lagrangian_pc::{Matrix, Vector};

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-2.0f64..2.0, rows * cols)
        .prop_map(move |d| DenseMatrix::new(rows, cols, d).unwrap())
}

fn vector(n: usize) -> impl Strategy<Value = Vector> {
    prop::collection::vec(-3.0f64..3.0, n).prop_map(dv)
}

fn dv(v: Vec<f64>) -> Vector {
    DenseVector::new(v).unwrap()
}

fn matrix_and_vector() -> impl Strategy<Value = (Matrix, Vector)> {
    (1usize..7, 1usize..7).prop_flat_map(|(r, c)| (matrix(r, c), vector(c)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cholesky_solves_shifted_gram((a, x) in matrix_and_vector()) {
        let s = a.gram().add_identity(0.5);
        let rhs = s.apply(&x);
        let sol = Cholesky::factor(&s).unwrap().solve(&rhs).unwrap();
        prop_assert!((&sol - &x).norm() <= 1e-9 * (1.0 + x.norm()));
    }

    #[test]
    fn eigenvalues_sum_to_trace_and_bound_rayleigh((a, x) in matrix_and_vector()) {
        let g = a.gram();
        let eig = symmetric_eigenvalues(&g).unwrap();
        let trace: f64 = (0..g.rows()).map(|i| g[(i, i)]).sum();
        prop_assert!((eig.iter().sum::<f64>() - trace).abs() <= 1e-9 * (1.0 + trace.abs()));
        prop_assert!(eig.iter().all(|&e| e >= -1e-9 * (1.0 + trace)));
        let top = spectral_norm_sq(&a).unwrap();
        prop_assert!(a.apply(&x).norm_sq() <= top * x.norm_sq() * (1.0 + 1e-9) + 1e-12);
    }

    #[test]
    fn l1_prox_meets_subgradient_condition(
        p in prop::collection::vec(0.5f64..3.0, 1..8),
        mu in 0.0f64..2.0,
        t in 0.1f64..5.0,
        seed in prop::collection::vec(-4.0f64..4.0, 16),
    ) {
        let n = p.len();
        let q = dv(seed[..n].to_vec());
        let lin = dv(seed[8..8 + n].to_vec());
        let oracle = BlockOracle::quadratic_l1(dv(p.clone()), q, mu, 0.5).unwrap();
        let metric = Metric::ScaledIdentity(t);
        let z = prox_subproblem(&oracle, &metric, &lin).unwrap();
        prop_assert!(subproblem_residual(&oracle, &metric, &lin, &z).unwrap() <= 1e-9);
    }

    #[test]
    fn quadratic_prox_meets_stationarity((a, lin) in matrix_and_vector(), t in 0.1f64..5.0) {
        let n = a.cols();
        let oracle = BlockOracle::quadratic(a.gram().add_identity(1.0), DenseVector::zeros(n), 1.0, None).unwrap();
        let metric = Metric::Matrix(a.gram().scale(t));
        let z = prox_subproblem(&oracle, &metric, &lin).unwrap();
        prop_assert!(subproblem_residual(&oracle, &metric, &lin, &z).unwrap() <= 1e-9 * (1.0 + lin.norm()));
    }

    #[test]
    fn lemma2_identity_holds_for_random_triples(
        which in 0usize..5,
        beta in 0.05f64..20.0,
        seed in 0u64..1000,
        scale in 0.1f64..10.0,
    ) {
        let (problem, cfg) = small_method(which, seed);
        let method = build_method(&problem, &cfg).unwrap();
        let m = method.matrices(beta).unwrap();
        prop_assert!(check_cc1(&m) <= 1e-10 * (1.0 + m.q.frobenius_norm()));
        if which != 4 {
            prop_assert!(check_cc2(&m) <= 1e-9 * (1.0 + m.g.frobenius_norm()));
        }
        let d = m.dim();
        let pseudo = |k: u64| {
            dv(
                (0..d)
                    .map(|i| scale * (((i as u64 * 7919 + k * 104_729 + seed) % 2003) as f64 / 1001.5 - 1.0))
                    .collect(),
            )
        };
        let (vk, vt, vr) = (pseudo(1), pseudo(2), pseudo(3));
        let s = 1.0 + m.h.quad_form(&(&vk - &vr)).abs() + (&vk - &vt).norm_sq();
        prop_assert!(lemma2_identity_check(&m, &vk, &vt, &vr) <= 1e-9 * s);
    }

    #[test]
    fn maximal_schedules_satisfy_their_condition(
        beta0 in 0.01f64..10.0,
        tau in 0.3f64..1.0,
        r in 0.5f64..5.0,
        sigma in 0.1f64..5.0,
        smax in 0.5f64..10.0,
        smin in 0.1f64..5.0,
        l in 1.0f64..20.0,
        gamma in 0.2f64..1.0,
        which in 0usize..4,
    ) {
        let cond = [Condition::V25, Condition::C14, Condition::A16, Condition::D10][which];
        let params = ScheduleParams {
            tau: Some(tau),
            r_prox: Some(r),
            sigma: Some(sigma),
            sigma_max_a2: Some(smax),
            sigma_min_am: Some(smin),
            lipschitz: Some(l),
            gamma: Some(gamma),
        };
        let betas = PenaltySchedule::maximal(beta0, cond, params).betas(60).unwrap();
        prop_assert!(betas.iter().all(|b| b.is_finite() && *b > 0.0));
        prop_assert!(validate_sequence(&betas, cond, &params).unwrap().is_empty());
        let constant = vec![beta0; 60];
        if cond != Condition::D10 {
            prop_assert!(validate_sequence(&constant, cond, &params).unwrap().is_empty());
        }
    }

    #[test]
    fn power_law_fit_recovers_exponent(p in -4.0f64..-0.2, c in 0.01f64..100.0, lo in 1usize..50) {
        let pts: Vec<(f64, f64)> = (lo..lo + 200).map(|k| (k as f64, c * (k as f64).powf(p))).collect();
        let fit = fit_power_law(&pts).unwrap();
        prop_assert!((fit.slope - p).abs() <= 1e-9);
        prop_assert!((fit.r_squared - 1.0).abs() <= 1e-9);
    }
}

fn small_method(which: usize, seed: u64) -> (lagrangian_pc::Problem, MethodConfig<f64>) {
    let (template, dims, l) = match which {
        0 => (Template::P1Qp, vec![6], 4),
        1 => (Template::P2StronglyConvex, vec![4, 5], 3),
        2 => (Template::P2LassoLike, vec![4, 5], 3),
        3 => (Template::P3Multiblock, vec![3, 3, 4], 3),
        _ => (Template::P2LinearFirst, vec![3, 5], 4),
    };
    let mut spec = InstanceSpec::new(template, seed).with_dims(dims, l);
    if which == 1 || which == 3 {
        spec = spec.with_lipschitz(10.0);
    }
    let p = generate_instance(&spec).unwrap();
    let cfg = match which {
        0 => MethodConfig::gpalm_indefinite(
            1.0,
            0.9,
            1.05 * spectral_norm_sq(&p.block(0).a).unwrap(),
        ),
        1 => MethodConfig::admm(1.6),
        2 => MethodConfig::ladmm(0.75, 1.05 * spectral_norm_sq(&p.block(1).a).unwrap()),
        3 => MethodConfig::multiblock(0.8),
        _ => MethodConfig::padmm(lagrangian_pc::algorithms::BetaScaling::Beta),
    };
    (p, cfg)
}

#[test]
fn single_precision_solver_converges() {
    let spec = InstanceSpec::new(Template::P1Qp, 2).with_dims(vec![6], 3);
    let p = generate_instance::<f32>(&spec).unwrap();
    let saddle = kkt_oracle(&p).unwrap();
    let m = build_method(&p, &MethodConfig::gpalm_definite(1.0, None)).unwrap();
    let mut s = m.zero_state();
    for _ in 0..300 {
        s = m
            .step(&s, PenaltyWindow::constant(1.0f32), &saddle, false)
            .unwrap()
            .next_state;
    }
    assert!((&s.x() - &saddle.x_star).norm() < 1e-3);
}
