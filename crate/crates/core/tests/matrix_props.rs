mod common;

use common::*;
use markov_adiabatic::{
    classify_structure, operator_norm, propagate, stationary_distribution, tv_distance, Mode,
    ProbabilityVector, SignedVector, StochasticMatrix,
};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Transitive closure by Warshall.
fn reachability(p: &StochasticMatrix) -> Vec<Vec<bool>> {
    let n = p.n();
    let mut r: Vec<Vec<bool>> = (0..n).map(|i| (0..n).map(|j| p.get(i, j) > 0.0).collect()).collect();
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if r[i][k] && r[k][j] {
                    r[i][j] = true;
                }
            }
        }
    }
    r
}

/// Lengths of every simple cycle whose smallest vertex is `start`, staying
/// inside `class`.
fn cycle_lengths(p: &StochasticMatrix, class: &[usize], start: usize, out: &mut Vec<usize>) {
    fn dfs(p: &StochasticMatrix, class: &[usize], start: usize, v: usize, depth: usize, seen: &mut Vec<bool>, out: &mut Vec<usize>) {
        for &w in class {
            if p.get(v, w) == 0.0 {
                continue;
            }
            if w == start {
                out.push(depth);
            } else if w > start && !seen[w] {
                seen[w] = true;
                dfs(p, class, start, w, depth + 1, seen, out);
                seen[w] = false;
            }
        }
    }
    let mut seen = vec![false; p.n()];
    seen[start] = true;
    dfs(p, class, start, start, 1, &mut seen, out);
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 { a } else { gcd(b, a % b) }
}

/// (recurrent classes, their periods, irreducible) by exhaustive search.
fn brute_force(p: &StochasticMatrix) -> (Vec<(Vec<usize>, usize)>, bool) {
    let n = p.n();
    let r = reachability(p);
    let same = |i: usize, j: usize| i == j || (r[i][j] && r[j][i]);
    let irreducible = (0..n).all(|i| (0..n).all(|j| same(i, j)));
    let mut classes = Vec::new();
    for i in 0..n {
        if (0..i).any(|k| same(k, i)) {
            continue;
        }
        let class: Vec<usize> = (0..n).filter(|&j| same(i, j)).collect();
        let closed = class.iter().all(|&u| (0..n).all(|v| !r[u][v] || class.contains(&v)));
        if !closed {
            continue;
        }
        let mut lengths = Vec::new();
        for &v in &class {
            cycle_lengths(p, &class, v, &mut lengths);
        }
        let period = lengths.into_iter().fold(0, gcd);
        classes.push((class, period));
    }
    (classes, irreducible)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn tv_is_half_l1(n in 2usize..8, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_simplex(&mut rng, n);
        let b = random_simplex(&mut rng, n);
        let tv = tv_distance(&ProbabilityVector::new(a.clone()).unwrap(), &ProbabilityVector::new(b.clone()).unwrap()).unwrap();
        prop_assert!((tv - 0.5 * l1(&a, &b)).abs() <= 1e-15);
        prop_assert!((0.0..=1.0).contains(&tv));
    }

    #[test]
    fn stochastic_maps_contract_l1(p in sparse_matrix(2..=7), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = p.n();
        let a = random_simplex(&mut rng, n);
        let b = random_simplex(&mut rng, n);
        let diff = SignedVector::new(a.iter().zip(&b).map(|(x, y)| x - y).collect()).unwrap();
        let stepped = propagate(&diff, &p).unwrap();
        prop_assert!(stepped.l1_norm() <= diff.l1_norm() + 1e-12);
        // agrees with the definition
        let direct: Vec<f64> = vec_times(&a, &p).iter().zip(vec_times(&b, &p)).map(|(x, y)| x - y).collect();
        prop_assert!(l1(stepped.as_slice(), &direct) <= 1e-14);
    }

    #[test]
    fn operator_norm_is_max_over_simplex(n in 2usize..6, entries in prop::collection::vec(-1.0f64..1.0, 36), seed in any::<u64>()) {
        let m = DMatrix::from_row_slice(n, n, &entries[..n * n]);
        let norm = operator_norm(&m);
        let image = |v: &[f64]| -> f64 {
            (0..n).map(|j| (0..n).map(|i| v[i] * m[(i, j)]).sum::<f64>().abs()).sum()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..1000 {
            let v = random_simplex(&mut rng, n);
            prop_assert!(image(&v) <= norm + 1e-12);
        }
        let best = (0..n)
            .map(|i| image(ProbabilityVector::point_mass(n, i).as_slice()))
            .fold(0.0, f64::max);
        prop_assert!((best - norm).abs() <= 1e-12);
    }

    #[test]
    fn stationary_residual_is_small(p in sparse_matrix(2..=7)) {
        match stationary_distribution(&p, Mode::Relaxed) {
            Ok(pi) => {
                prop_assert!(p.structure().satisfies(Mode::Relaxed));
                let r = l1(&vec_times(pi.as_slice(), &p), pi.as_slice());
                prop_assert!(r <= 1e-10, "residual {r}");
                prop_assert!((pi.as_slice().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            }
            Err(_) => prop_assert!(!p.structure().satisfies(Mode::Relaxed)),
        }
    }

    #[test]
    fn classification_matches_brute_force(p in sparse_matrix(1..=5)) {
        let s = classify_structure(&p);
        let (classes, irreducible) = brute_force(&p);
        prop_assert_eq!(s.irreducible, irreducible);
        let got: Vec<(Vec<usize>, usize)> = s
            .recurrent_classes
            .iter()
            .cloned()
            .zip(s.class_periods.iter().copied())
            .collect();
        prop_assert_eq!(&got, &classes);
        let aperiodic = classes.iter().all(|(_, d)| *d == 1);
        prop_assert_eq!(s.aperiodic, aperiodic);
    }
}

#[test]
fn classification_examples_against_brute_force() {
    let m = |rows: Vec<Vec<f64>>| StochasticMatrix::from_rows(&rows).unwrap();
    let three_cycle = m(vec![vec![0., 1., 0.], vec![0., 0., 1.], vec![1., 0., 0.]]);
    let (classes, irreducible) = brute_force(&three_cycle);
    assert!(irreducible);
    assert_eq!(classes, vec![(vec![0, 1, 2], 3)]);
    assert_eq!(three_cycle.structure().period, Some(3));

    // cycles of length 2 and 3 through state 0
    let mixed = m(vec![vec![0., 0.5, 0.5], vec![1., 0., 0.], vec![0., 1., 0.]]);
    assert_eq!(brute_force(&mixed).0, vec![(vec![0, 1, 2], 1)]);
    assert!(mixed.structure().aperiodic);
}
