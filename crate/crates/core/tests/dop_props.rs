mod common;

use common::*;
use kmsbound::dop::{dop_exact, dop_m_exact, dop_m_scalar, dop_scalar, h_m_scalar, herm_apply, max_eigenvalue};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FLOOR: f64 = 1e-12;

fn pair(seed: u64, n: usize) -> (CMatrix, CMatrix, ChaCha8Rng) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = random_pd(&mut rng, n, 0.05);
    let b = random_pd(&mut rng, n, 0.05);
    (a, b, rng)
}

fn sqrt_and_inv(a: &CMatrix) -> (CMatrix, CMatrix) {
    (herm_apply(a, f64::sqrt), herm_apply(a, |l| 1.0 / l.sqrt()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn joint_convexity(seed in any::<u64>(), n in 1usize..=4) {
        let (a1, b1, mut rng) = pair(seed, n);
        let a2 = random_pd(&mut rng, n, 0.05);
        let b2 = random_pd(&mut rng, n, 0.05);
        let s: f64 = rng.gen_range(0.05..0.95);
        let (s1, s2) = (c(s, 0.0), c(1.0 - s, 0.0));
        let mid = dop_exact(&(&a1 * s1 + &a2 * s2), &(&b1 * s1 + &b2 * s2), FLOOR).unwrap();
        let avg = dop_exact(&a1, &b1, FLOOR).unwrap() * s1 + dop_exact(&a2, &b2, FLOOR).unwrap() * s2;
        prop_assert!(min_eig(&(avg - mid)) >= -1e-9);
    }

    #[test]
    fn transformer_inequality(seed in any::<u64>(), n in 2usize..=4, k in 1usize..=3) {
        let (a, b, mut rng) = pair(seed, n);
        let kk = random_matrix(&mut rng, n, k);
        let lhs = dop_exact(&(kk.adjoint() * &a * &kk), &(kk.adjoint() * &b * &kk), FLOOR).unwrap();
        let rhs = kk.adjoint() * dop_exact(&a, &b, FLOOR).unwrap() * &kk;
        let scale = 1.0 + rhs.norm();
        prop_assert!(min_eig(&(rhs - lhs)) >= -1e-9 * scale);
    }

    #[test]
    fn homogeneity(seed in any::<u64>(), lambda in 0.1f64..10.0) {
        let (a, b, _) = pair(seed, 3);
        let l = c(lambda, 0.0);
        let lhs = dop_exact(&(&a * l), &(&b * l), FLOOR).unwrap();
        let rhs = dop_exact(&a, &b, FLOOR).unwrap() * l;
        prop_assert!((lhs - &rhs).norm() <= 1e-10 * (1.0 + rhs.norm()));
    }

    #[test]
    fn ladder_increases_towards_dop(seed in any::<u64>()) {
        let (x, y, _) = pair(seed, 4);
        let d = dop_exact(&x, &y, FLOOR).unwrap();
        let (xs, xsi) = sqrt_and_inv(&x);
        let k = &xsi * &y * &xsi;
        let mut prev = dop_m_exact(&x, &y, 0, FLOOR);
        prop_assert!((&prev - (&x - &y)).norm() < 1e-12);
        for m in 0..=5u32 {
            let dm = dop_m_exact(&x, &y, m, FLOOR);
            let scale = 1.0 + d.norm();
            if m > 0 {
                prop_assert!(min_eig(&(&dm - &prev)) >= -1e-9 * scale, "m={m}");
            }
            prop_assert!(min_eig(&(&d - &dm)) >= -1e-9 * scale, "m={m}");
            // D_op - D^[m] = X^{1/2} (h_m(K) - log K) X^{1/2} <= X^{1/2} e_m(K) X^{1/2}
            let p = 2f64.powi(-(m as i32));
            let bound = &xs * herm_apply(&k, |t| p * ((t - 1.0).powi(2) + (1.0 / t - 1.0).powi(2))) * &xs;
            prop_assert!(min_eig(&(bound - (&d - &dm))) >= -1e-9 * scale, "m={m}");
            prev = dm;
        }
    }

    #[test]
    fn scalar_ladder(x in 1e-3f64..1e3, m in 0u32..8) {
        let h = h_m_scalar(x, m).unwrap();
        let h1 = h_m_scalar(x, m + 1).unwrap();
        let err = 2f64.powi(-(m as i32)) * ((x - 1.0).powi(2) + (1.0 / x - 1.0).powi(2));
        let tol = 1e-12 * (1.0 + h.abs());
        prop_assert!(x.ln() <= h1 + tol && h1 <= h + tol);
        prop_assert!(h - x.ln() >= -tol && h - x.ln() <= err + tol);
    }

    #[test]
    fn scalar_perspective(x in 1e-3f64..10.0, y in 1e-3f64..10.0, m in 0u32..6) {
        // x (-h_m)(y/x) is the 1x1 matrix ladder
        let expect = -x * h_m_scalar(y / x, m).unwrap();
        prop_assert!((dop_m_scalar(x, y, m) - expect).abs() < 1e-9 * (1.0 + expect.abs()));
        prop_assert!(dop_m_scalar(x, y, m) <= dop_scalar(x, y) + 1e-12);
    }
}

#[test]
fn emission_matches_exact_extremal_t() {
    for seed in 0..6u64 {
        let (x, y, _) = pair(seed, 3);
        for m in [1u32, 2, 4] {
            let r = emitted_min_t(&x, &y, m);
            assert!(r.status.is_success(), "{r:?}");
            let exact = max_eigenvalue(&dop_m_exact(&x, &y, m, FLOOR));
            assert!((r.objective - exact).abs() < 1e-6, "seed {seed} m {m}: {} vs {exact}", r.objective);
        }
    }
}

#[test]
fn exact_dop_examples() {
    let i3 = CMatrix::identity(3, 3);
    assert!(dop_exact(&i3, &i3, FLOOR).unwrap().norm() < 1e-14);
    let (a, _, _) = pair(11, 3);
    assert!(dop_exact(&a, &a, FLOOR).unwrap().norm() < 1e-10);
}
