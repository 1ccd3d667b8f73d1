use fipm_core::{
    reconstruct_moments, solve_dual, DualMatrix, DualProblem, DualSolverConfig, EntropyModel, EulerEntropy,
    LogEntropy, MomentMatrix, StochasticSpace,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_duals(rng: &mut ChaCha8Rng, model: &dyn EntropyModel, degree: usize) -> DualMatrix {
    let m = model.dim();
    let mut d = DualMatrix::zeros(degree + 1, m);
    let mut v = vec![0.0; m];
    if m == 3 {
        let rho = rng.gen_range(0.2..2.0);
        let vel = rng.gen_range(-1.0..1.0);
        let p = rng.gen_range(0.2..2.0);
        let u = [rho, rho * vel, p / 0.4 + 0.5 * rho * vel * vel];
        model.entropy_variables(&u, &mut v).unwrap();
    } else {
        v[0] = rng.gen_range(-1.0..1.0);
    }
    d.row_mut(0).copy_from_slice(&v);
    // small higher-order perturbations keep v3 < 0 at every node
    for i in 1..=degree {
        for k in 0..m {
            let scale = 0.1 * v[k].abs().max(0.5) / (degree as f64);
            d[(i, k)] = rng.gen_range(-scale..scale);
        }
    }
    d
}

fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

fn finite_difference_check(model: &dyn EntropyModel, seed: u64) {
    let degree = 3;
    let space = StochasticSpace::legendre(degree, 12).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..100 {
        let target = reconstruct_moments(&random_duals(&mut rng, model, degree), &space, model).unwrap();
        let point = random_duals(&mut rng, model, degree);
        let problem = DualProblem::new(&space, model, &target, 1e-3);
        let g = problem.gradient(&point).unwrap();
        let h = problem.hessian(&point).unwrap();
        let n = point.as_slice().len();
        for a in 0..n {
            let step = 1e-4 * point.as_slice()[a].abs().max(1.0);
            let shifted = |t: f64| {
                let mut p = point.clone();
                p.as_mut_slice()[a] += t * step;
                p
            };
            // fourth-order central stencil
            let stencil = |f: &dyn Fn(&DualMatrix) -> Vec<f64>| -> Vec<f64> {
                let (p2, p1, m1, m2) = (f(&shifted(2.0)), f(&shifted(1.0)), f(&shifted(-1.0)), f(&shifted(-2.0)));
                (0..p1.len())
                    .map(|b| (-p2[b] + 8.0 * p1[b] - 8.0 * m1[b] + m2[b]) / (12.0 * step))
                    .collect()
            };
            let fd = stencil(&|p| vec![problem.objective(p).unwrap()])[0];
            assert!(relative(fd, g.as_slice()[a]) < 1e-6, "gradient {a}: {fd} vs {}", g.as_slice()[a]);
            let fd_h = stencil(&|p| problem.gradient(p).unwrap().as_slice().to_vec());
            for b in 0..n {
                assert!(relative(fd_h[b], h[(b, a)]) < 1e-5, "hessian ({b},{a}): {} vs {}", fd_h[b], h[(b, a)]);
            }
        }
    }
}

#[test]
fn scalar_gradient_and_hessian_match_finite_differences() {
    finite_difference_check(&LogEntropy, 1);
}

#[test]
fn euler_gradient_and_hessian_match_finite_differences() {
    finite_difference_check(&EulerEntropy::default(), 2);
}

fn round_trip(model: &dyn EntropyModel, degree: usize, seed: u64) {
    let tau = 1e-7;
    let space = StochasticSpace::legendre(degree, 2 * degree + 6).unwrap();
    let config = DualSolverConfig::default().with_tolerance(tau);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..20 {
        let u = reconstruct_moments(&random_duals(&mut rng, model, degree), &space, model).unwrap();
        let start = fipm_core::cold_start(&u, model);
        let sol = solve_dual(&u, &start, &config, &space, model).unwrap();
        let mut back = reconstruct_moments(&sol.duals, &space, model).unwrap();
        back.axpy(-1.0, &u);
        assert!(back.norm() <= 10.0 * tau, "degree {degree}: {}", back.norm());
    }
}

#[test]
fn moments_dual_moments_round_trip() {
    for degree in 0..=5 {
        round_trip(&LogEntropy, degree, degree as u64);
        round_trip(&EulerEntropy::default(), degree, 100 + degree as u64);
    }
}

fn regularized_residual(u: &MomentMatrix, eta: f64, space: &StochasticSpace) -> (f64, f64) {
    let model = EulerEntropy::default();
    let config = DualSolverConfig::default().with_regularization(eta).with_tolerance(1e-12);
    let start = fipm_core::cold_start(u, &model);
    let sol = solve_dual(u, &start, &config, space, &model).unwrap();
    let mut r = reconstruct_moments(&sol.duals, space, &model).unwrap();
    r.axpy(-1.0, u);
    (r.norm(), sol.duals.norm())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    /// `‖ũ_η − û‖ = η‖v̂_η‖` shrinks and `‖v̂_η‖` grows as `η → 0`.
    #[test]
    fn regularization_limit_is_monotone(seed in any::<u64>()) {
        let space = StochasticSpace::legendre(3, 10).unwrap();
        let model = EulerEntropy::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = reconstruct_moments(&random_duals(&mut rng, &model, 3), &space, &model).unwrap();
        let mut last: Option<(f64, f64)> = None;
        for eta in [1e-1, 1e-2, 1e-3, 1e-5] {
            let (res, dual) = regularized_residual(&u, eta, &space);
            if let Some((r0, d0)) = last {
                prop_assert!(res <= r0 * (1.0 + 1e-9) + 1e-12);
                prop_assert!(dual >= d0 * (1.0 - 1e-9));
            }
            last = Some((res, dual));
        }
    }
}
