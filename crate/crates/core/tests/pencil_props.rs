mod oracles;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use oracles::{det_interpolation_spectrum, random_invertible, random_matrix, spectrum_distance};
use pdae_core::linalg::{condition_number, spectral_norm};
use pdae_core::pencil::{generalized_eigenvalues, is_regular, nilpotency_index, verdict, weierstrass, MatrixPencil};
use pdae_core::stability::sign_reversal_check;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_pencil(seed: u64) -> MatrixPencil {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..=6);
    let rank = rng.random_range(1..=n);
    let mut mask = DMatrix::zeros(n, n);
    for i in 0..rank {
        mask[(i, i)] = 1.0;
    }
    let e = random_invertible(&mut rng, n) * mask * random_invertible(&mut rng, n);
    let a = random_matrix(&mut rng, n, n) * 2.0;
    MatrixPencil::new(e, a).unwrap()
}

fn block_diag(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (r, s) = (a.nrows(), b.nrows());
    let mut m = DMatrix::zeros(r + s, r + s);
    m.view_mut((0, 0), (r, r)).copy_from(a);
    m.view_mut((r, r), (s, s)).copy_from(b);
    m
}

#[test]
fn weierstrass_reconstruction_on_random_pencils() {
    for seed in 0..50 {
        let p = random_pencil(seed);
        let (regular, c) = is_regular(&p);
        assert!(regular, "seed {seed}");
        let w = weierstrass(&p, c).unwrap();
        let n = p.dim();
        let id = DMatrix::identity(n - w.r, n - w.r);
        let e_res = spectral_norm(&(&w.left * &p.e * &w.m - block_diag(&w.e1, &w.j)));
        let a_res = spectral_norm(&(&w.left * &p.a * &w.m - block_diag(&w.a1, &id)));
        let scale = spectral_norm(&p.e);
        assert!(e_res <= 1e-8 * scale, "seed {seed}: E residual {e_res:e}");
        assert!(a_res <= 1e-8 * spectral_norm(&p.a).max(1.0), "seed {seed}: A residual {a_res:e}");

        let oracle = det_interpolation_spectrum(&p.e, &p.a);
        let got = generalized_eigenvalues(&p, c).unwrap();
        let dist = spectrum_distance(&got, &oracle);
        let size = oracle.iter().map(|z| z.norm()).fold(1.0, f64::max);
        assert!(dist <= 1e-6 * size, "seed {seed}: spectrum gap {dist:e}");
    }
}

#[test]
fn chain_pencils_have_their_block_index() {
    for k in 1..=4 {
        let mut e = DMatrix::<f64>::zeros(k, k);
        for i in 0..k - 1 {
            e[(i, i + 1)] = 1.0;
        }
        assert_eq!(nilpotency_index(&e).unwrap(), k);
        let v = verdict(&MatrixPencil::new(e, DMatrix::identity(k, k)).unwrap()).unwrap();
        assert!(v.regular && v.r == 0 && v.nu == k);
        assert_eq!(v.impulse_free, k == 1);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn spectrum_is_independent_of_the_shift(seed in 0u64..10_000, c1 in 0.3f64..4.0, c2 in -4.0f64..-0.3) {
        let p = random_pencil(seed);
        prop_assume!(p.shifted(c1).determinant().abs() > 1e-6 && p.shifted(c2).determinant().abs() > 1e-6);
        let s1 = generalized_eigenvalues(&p, c1);
        let s2 = generalized_eigenvalues(&p, c2);
        prop_assume!(s1.is_ok() && s2.is_ok());
        let (s1, s2) = (s1.unwrap(), s2.unwrap());
        prop_assert_eq!(s1.len(), s2.len());
        let size = s1.iter().map(|z| z.norm()).fold(1.0, f64::max);
        prop_assert!(spectrum_distance(&s1, &s2) <= 1e-7 * size);
    }

    #[test]
    fn scalar_pencil_signs_follow_lambda_over_e(
        eigs in prop::collection::vec(prop_oneof![Just(0.0), 0.2f64..3.0, -3.0f64..-0.2], 1..6),
        lambda in prop_oneof![0.1f64..5.0, -5.0f64..-0.1],
        seed in 0u64..1000,
    ) {
        prop_assume!(eigs.iter().any(|&v| v != 0.0));
        let n = eigs.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = random_matrix(&mut rng, n, n).qr().q();
        let e = &q * DMatrix::from_diagonal(&DVector::from_vec(eigs.clone())) * q.transpose();
        let report = sign_reversal_check(&e, &[lambda]).unwrap();
        prop_assert!(report.all_consistent);
        prop_assert!(report.max_relation_error < 1e-8);
        for entry in &report.entries {
            prop_assert_eq!(entry.reversed, entry.e.re < 0.0);
        }
        prop_assert_eq!(report.e_nonnegative, eigs.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn bauer_fike_bound_holds(seed in 0u64..10_000, size in 1e-6f64..1e-2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(2..=5);
        let v = random_invertible(&mut rng, n);
        let lambdas: Vec<f64> = (0..n).map(|i| -1.0 - 1.3 * i as f64).collect();
        let a = &v * DMatrix::from_diagonal(&DVector::from_vec(lambdas.clone())) * v.clone().try_inverse().unwrap();
        let e = random_invertible(&mut rng, n);
        let ea = &e * &a;
        let delta = random_matrix(&mut rng, n, n) * size;
        let p = MatrixPencil::new(e.clone(), &ea + &delta).unwrap();
        let (_, c) = is_regular(&p);
        let perturbed = generalized_eigenvalues(&p, c).unwrap();
        // E⁻¹(EA + Δ) = A + E⁻¹Δ
        let bound = condition_number(&v) * spectral_norm(&(e.try_inverse().unwrap() * delta));
        for s in perturbed {
            let gap = lambdas
                .iter()
                .map(|&l| (s - Complex64::new(l, 0.0)).norm())
                .fold(f64::INFINITY, f64::min);
            prop_assert!(gap <= bound * (1.0 + 1e-6) + 1e-12, "gap {} bound {}", gap, bound);
        }
    }
}
