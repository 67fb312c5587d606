mod oracles;

use nalgebra::{DMatrix, DVector};
use oracles::{random_invertible, random_matrix, SemiExplicit};
use pdae_core::modal_dae::expm::matrix_exponential;
use pdae_core::modal_dae::signal::{Signal, SignalTerm};
use pdae_core::modal_dae::{consistent_initial_condition, modal_residual, solve_mode, ModalSystem};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn input(m: usize, rng: &mut ChaCha8Rng) -> Signal {
    Signal::new(
        m,
        vec![
            SignalTerm::sin(0, 0.0, 1.3, random_matrix(rng, m, 1).column(0).into_owned()),
            SignalTerm::cos(1, -0.5, 0.0, random_matrix(rng, m, 1).column(0).into_owned()),
        ],
    )
}

fn system(sys: &SemiExplicit, u: Signal) -> ModalSystem {
    let n = sys.e.nrows();
    ModalSystem::from_matrices(1, 0.0, sys.e.clone(), sys.a.clone(), sys.b.clone(), DMatrix::identity(n, n), u).unwrap()
}

#[test]
fn index_one_systems_match_adaptive_integration() {
    let times: Vec<f64> = (1..=50).map(|k| 0.1 * k as f64).collect();
    let mut worst = 0.0_f64;
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let n = rng.random_range(2..=5);
        let r = rng.random_range(1..n);
        let m = rng.random_range(1..=2);
        let sys = SemiExplicit::random(&mut rng, n, r, m);
        let u = input(m, &mut rng);
        let y1 = random_matrix(&mut rng, r, 1).column(0).into_owned();
        let x0 = sys.consistent(&y1, &u.value(0.0));
        let ms = system(&sys, u.clone());
        assert_eq!(ms.weierstrass.nu, 1, "seed {seed}");
        let got = solve_mode(&ms, &x0, &u, &times).unwrap();
        let want = sys.reference(&x0, |t| u.value(t), &times);
        for (g, w) in got.states.iter().zip(&want) {
            worst = worst.max((g - w).amax() / w.amax().max(1.0));
        }
    }
    assert!(worst <= 1e-6, "max error {worst:e}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn free_response_is_a_semigroup(seed in 0u64..10_000, t1 in 0.05f64..2.0, t2 in 0.05f64..2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(2..=5);
        let r = rng.random_range(1..n);
        let sys = SemiExplicit::random(&mut rng, n, r, 1);
        let zero = Signal::zero(1);
        let x0 = sys.consistent(&random_matrix(&mut rng, r, 1).column(0).into_owned(), &DVector::zeros(1));
        let ms = system(&sys, zero.clone());
        let direct = solve_mode(&ms, &x0, &zero, &[t1 + t2]).unwrap();
        let mid = solve_mode(&ms, &x0, &zero, &[t1]).unwrap();
        let split = solve_mode(&ms, &mid.states[0], &zero, &[t2]).unwrap();
        let gap = (&direct.states[0] - &split.states[0]).amax();
        prop_assert!(gap <= 1e-10 * x0.amax().max(1.0), "gap {:e}", gap);
    }

    #[test]
    fn response_is_linear_in_state_and_input(seed in 0u64..10_000, alpha in -2.0f64..2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(2..=5);
        let r = rng.random_range(1..n);
        let sys = SemiExplicit::random(&mut rng, n, r, 1);
        let ua = input(1, &mut rng);
        let ub = input(1, &mut rng);
        let xa = sys.consistent(&random_matrix(&mut rng, r, 1).column(0).into_owned(), &ua.value(0.0));
        let xb = sys.consistent(&random_matrix(&mut rng, r, 1).column(0).into_owned(), &ub.value(0.0));
        let times = [0.5, 1.0, 2.5];
        let ra = solve_mode(&system(&sys, ua.clone()), &xa, &ua, &times).unwrap();
        let rb = solve_mode(&system(&sys, ub.clone()), &xb, &ub, &times).unwrap();
        let uc = ua.scaled(alpha).add(&ub);
        let xc = &xa * alpha + &xb;
        let rc = solve_mode(&system(&sys, uc.clone()), &xc, &uc, &times).unwrap();
        for k in 0..times.len() {
            let want = &ra.states[k] * alpha + &rb.states[k];
            prop_assert!((&rc.states[k] - &want).amax() <= 1e-9 * want.amax().max(1.0));
        }
    }

    #[test]
    fn trajectories_satisfy_the_mode_equation(seed in 0u64..10_000, t in 0.2f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(2..=5);
        let r = rng.random_range(1..n);
        let sys = SemiExplicit::random(&mut rng, n, r, 1);
        let u = input(1, &mut rng);
        let ms = system(&sys, u.clone());
        let raw = random_matrix(&mut rng, n, 1).column(0).into_owned();
        let (x0, _) = consistent_initial_condition(&ms, &raw, &u).unwrap();
        // fourth-order central difference
        let h = 1e-3;
        let tr = solve_mode(&ms, &x0, &u, &[t - 2.0 * h, t - h, t, t + h, t + 2.0 * h]).unwrap();
        let s = &tr.states;
        let xdot = ((&s[3] - &s[1]) * 8.0 - (&s[4] - &s[0])) / (12.0 * h);
        let res = modal_residual(&ms, &s[2], &xdot, t);
        prop_assert!(res.amax() <= 1e-6 * s[2].amax().max(1.0), "residual {:e}", res.amax());
    }

    #[test]
    fn expm_matches_eigendecomposition(seed in 0u64..10_000, t in 0.0f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(1..=6);
        let v = random_invertible(&mut rng, n);
        let lambdas: Vec<f64> = (0..n).map(|_| rng.random_range(-4.0..2.0)).collect();
        let v_inv = v.clone().try_inverse().unwrap();
        let m = &v * DMatrix::from_diagonal(&DVector::from_vec(lambdas.clone())) * &v_inv;
        let want = &v * DMatrix::from_diagonal(&DVector::from_iterator(n, lambdas.iter().map(|l| (l * t).exp()))) * &v_inv;
        let got = matrix_exponential(&m, t).unwrap();
        prop_assert!((&got - &want).amax() <= 1e-10 * want.amax().max(1.0));
    }
}
