mod common;

use common::*;
use markov_adiabatic::families::shift_reset_family;
use markov_adiabatic::spectral::{singular_values, svd_factors};
use markov_adiabatic::{
    check_prop2, largest_mixing_time, mixing_time, sigma_at, spectral_scan, stationary_distribution,
    worst_case_tv, Mode, ProbabilityVector, StochasticMatrix,
};
use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Second-smallest singular value of `I - P` via the eigenvalues of
/// `(I - P)(I - P)^T`.
fn sigma_by_gram(p: &StochasticMatrix) -> f64 {
    let a = p.identity_minus();
    let gram = &a * a.transpose();
    let mut ev: Vec<f64> = SymmetricEigen::new(gram).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev[1].max(0.0).sqrt()
}

fn two_norm(m: &DMatrix<f64>) -> f64 {
    let gram = m.transpose() * m;
    SymmetricEigen::new(gram).eigenvalues.max().max(0.0).sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn svd_reconstructs_i_minus_p(p in sparse_matrix(2..=7)) {
        let (u, s, v) = svd_factors(&p);
        let back = &u * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(s)) * v.transpose();
        prop_assert!((back - p.identity_minus()).amax() <= 1e-9);
    }

    #[test]
    fn sigma_within_bounds_and_matches_gram(n in 2usize..=7, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_matrix(&mut rng, n, 0.4);
        let sigma = sigma_at(&p).unwrap();
        prop_assert!(sigma > 0.0);
        prop_assert!(sigma <= two_norm(&p.identity_minus()) + 1e-12);
        prop_assert!(sigma <= 2.0 * (n as f64).sqrt());
        prop_assert!((sigma - sigma_by_gram(&p)).abs() <= 1e-7);
    }

    #[test]
    fn d_is_nonincreasing_and_dominates_every_start(n in 2usize..=6, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_matrix(&mut rng, n, 0.3);
        let pi = stationary_distribution(&p, Mode::Relaxed).unwrap();
        let d: Vec<f64> = (1..=30).map(|t| worst_case_tv(&p, &pi, t)).collect();
        for w in d.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12);
        }
        // vertex sufficiency, P^T stepped directly
        let t = rng.gen_range(1..=5u64);
        for _ in 0..1000 {
            let mut nu = random_simplex(&mut rng, n);
            for _ in 0..t {
                nu = vec_times(&nu, &p);
            }
            let tv = 0.5 * l1(&nu, pi.as_slice());
            prop_assert!(tv <= d[t as usize - 1] + 1e-12);
        }
    }

    #[test]
    fn mixing_time_sits_on_the_boundary(n in 2usize..=6, seed in any::<u64>(), eps in 0.01f64..0.4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_matrix(&mut rng, n, 0.2);
        let r = mixing_time(&p, eps, 1_000_000).unwrap();
        let pi = stationary_distribution(&p, Mode::Relaxed).unwrap();
        prop_assert!(worst_case_tv(&p, &pi, r.tmix) <= eps);
        if r.tmix > 1 {
            prop_assert!(worst_case_tv(&p, &pi, r.tmix - 1) > eps);
        }
    }
}

#[test]
fn sigma_is_continuous_along_exact_paths() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        let n = rng.gen_range(3..=6);
        let e = random_strict_evolution(&mut rng, n);
        let scan = spectral_scan(&e, 201).unwrap();
        for (i, w) in scan.grid.windows(2).enumerate() {
            let dist = e.sample(w[0]).unwrap().distance(&e.sample(w[1]).unwrap()).unwrap();
            let jump = (scan.sigma_at[i + 1] - scan.sigma_at[i]).abs();
            assert!(jump <= dist * (n as f64).sqrt() + 1e-12);
        }
    }
}

#[test]
fn prop2_on_random_strict_paths() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let n = rng.gen_range(3..=8);
        let e = random_strict_evolution(&mut rng, n);
        let eps = 0.9 / (2.0 * (n as f64).sqrt()) * rng.gen_range(0.2..1.0);
        let scan = spectral_scan(&e, 101).unwrap();
        let mix = largest_mixing_time(&e, eps, 101, 1_000_000, Mode::Strict).unwrap();
        let v = check_prop2(&e, eps, mix.tmix_sup, &scan);
        assert!(!v.vacuous);
        assert!(v.holds, "{v:?}");
        for ((s, sigma), tmix) in scan.grid.iter().zip(&scan.sigma_at).zip(&mix.tmix_at) {
            let lhs = (1.0 - 2.0 * (n as f64).sqrt() * eps) / sigma;
            assert!(lhs <= *tmix as f64, "s={s} lhs={lhs} tmix={tmix}");
        }
    }
}

#[test]
fn reset_shift_family_oracles() {
    // pi(s)_j = (1 - s) s^(j-1) for j < n, pi(s)_n = s^(n-1)
    for n in 3..8 {
        let e = shift_reset_family(n);
        for s in [0.1, 0.25, 0.5, 0.8] {
            let pi = stationary_distribution(&e.sample(s).unwrap(), Mode::Strict).unwrap();
            for (j, &x) in pi.as_slice().iter().enumerate() {
                let want = if j + 1 < n { (1.0 - s) * s.powi(j as i32) } else { s.powi(n as i32 - 1) };
                assert!((x - want).abs() <= 1e-12, "n={n} s={s} j={j}");
            }
        }
    }
    let pi = stationary_distribution(&shift_reset_family(3).sample(0.5).unwrap(), Mode::Relaxed).unwrap();
    assert_eq!(pi.as_slice().len(), 3);
    for (x, want) in pi.as_slice().iter().zip([0.5, 0.25, 0.25]) {
        assert!((x - want).abs() <= 1e-12);
    }
    for n in 3..8 {
        let e = shift_reset_family(n);
        for s in [0.2, 0.5, 0.9] {
            let p = e.sample(s).unwrap();
            assert!((sigma_at(&p).unwrap() - sigma_by_gram(&p)).abs() <= 1e-9);
        }
    }
}

#[test]
fn two_state_sigma_matches_gram_oracle() {
    let p = StochasticMatrix::from_rows(&[vec![0.75, 0.25], vec![0.25, 0.75]]).unwrap();
    let oracle = sigma_by_gram(&p);
    assert!((oracle - 0.5).abs() <= 1e-12);
    assert!((sigma_at(&p).unwrap() - oracle).abs() <= 1e-12);
    let sv = singular_values(&p);
    assert!((sv[0] - 0.5).abs() <= 1e-12 && sv[1].abs() <= 1e-12);
}

#[test]
fn point_masses_attain_the_worst_case() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let p = random_matrix(&mut rng, 5, 0.3);
    let pi = stationary_distribution(&p, Mode::Relaxed).unwrap();
    for t in 1..6 {
        let d = worst_case_tv(&p, &pi, t);
        let best = (0..5)
            .map(|i| {
                let mut nu = ProbabilityVector::point_mass(5, i).into_inner();
                for _ in 0..t {
                    nu = vec_times(&nu, &p);
                }
                0.5 * l1(&nu, pi.as_slice())
            })
            .fold(0.0, f64::max);
        assert!((best - d).abs() <= 1e-12);
    }
}
