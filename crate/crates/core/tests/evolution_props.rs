mod common;

use common::*;
use markov_adiabatic::{classify_structure, Evolution, Mode, StochasticMatrix};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Piecewise-linear paths over sparse keyframes, structure unconstrained.
fn sparse_path() -> impl Strategy<Value = Evolution> {
    (2usize..=5, 2usize..=4).prop_flat_map(|(n, frames)| {
        (
            prop::collection::vec(sparse_matrix(n..=n), frames),
            prop::collection::vec(0.05f64..0.95, frames - 2),
        )
            .prop_filter_map("breakpoints too close", |(mats, mut cuts)| {
                cuts.sort_by(f64::total_cmp);
                let mut bps = vec![0.0];
                bps.extend(cuts);
                bps.push(1.0);
                if bps.windows(2).any(|w| w[1] - w[0] < 1e-3) {
                    return None;
                }
                Evolution::piecewise_linear(bps.into_iter().zip(mats).collect()).ok()
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn adjacent_samples_respect_lipschitz(e in sparse_path()) {
        let l = e.lipschitz_constant();
        prop_assert!(l.exact);
        let grid = e.grid(201);
        for w in grid.windows(2) {
            let d = e.sample(w[0]).unwrap().distance(&e.sample(w[1]).unwrap()).unwrap();
            prop_assert!(d <= l.value * (w[1] - w[0]) + 1e-12, "{d} over [{}, {}]", w[0], w[1]);
        }
    }

    #[test]
    fn keyframes_are_reproduced_exactly(e in sparse_path()) {
        for (s, m) in e.keyframes() {
            prop_assert_eq!(&e.sample(s).unwrap(), m);
        }
    }

    #[test]
    fn samples_are_stochastic_to_tight_tolerance(e in sparse_path(), s in 0.0f64..=1.0) {
        let p = e.sample(s).unwrap();
        let again = StochasticMatrix::ingest(&p.to_rows(), 1e-12);
        prop_assert!(again.is_ok(), "{again:?}");
        prop_assert!(p.as_slice().iter().all(|x| (0.0..=1.0).contains(x)));
    }

    #[test]
    fn structure_is_constant_on_open_segments(e in sparse_path(), seed in any::<u64>()) {
        let cert = e.structural_certificate(Mode::Strict);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for seg in &cert.segments {
            for _ in 0..100 {
                let s = rng.gen_range(seg.start..seg.end);
                if s == seg.start {
                    continue;
                }
                let st = classify_structure(&e.sample(s).unwrap());
                prop_assert_eq!(st.irreducible, seg.irreducible);
                prop_assert_eq!(st.aperiodic, seg.aperiodic);
            }
        }
    }
}

#[test]
fn convex_samples_match_the_definition() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for n in 2..7 {
        let p0 = random_matrix(&mut rng, n, 0.3);
        let p1 = random_matrix(&mut rng, n, 0.3);
        let e = Evolution::convex(p0.clone(), p1.clone()).unwrap();
        for _ in 0..20 {
            let s: f64 = rng.gen();
            let got = e.sample(s).unwrap();
            for i in 0..n {
                for j in 0..n {
                    let want = (1.0 - s) * p0.get(i, j) + s * p1.get(i, j);
                    assert!((got.get(i, j) - want).abs() <= 1e-15);
                }
            }
        }
    }
}

#[test]
fn random_strict_paths_pass_their_certificate() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let n = rng.gen_range(3..=6);
        let e = random_strict_evolution(&mut rng, n);
        assert!(e.require(Mode::Strict).is_ok());
        for s in e.grid(51) {
            assert!(e.sample(s).unwrap().structure().is_ergodic());
        }
    }
}
