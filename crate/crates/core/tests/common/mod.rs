#![allow(dead_code)]

use markov_adiabatic::{Evolution, Mode, StochasticMatrix};
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Row-normalize a nonnegative array, forcing a self-loop on empty rows.
pub fn normalized(n: usize, mut raw: Vec<f64>) -> Vec<Vec<f64>> {
    raw.chunks_mut(n)
        .enumerate()
        .map(|(i, row)| {
            let sum: f64 = row.iter().sum();
            if sum == 0.0 {
                row[i] = 1.0;
                row.to_vec()
            } else {
                row.iter().map(|x| x / sum).collect()
            }
        })
        .collect()
}

/// Stochastic matrices with roughly 40% zero entries.
pub fn sparse_matrix(sizes: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = StochasticMatrix> {
    sizes.prop_flat_map(|n| {
        prop::collection::vec(prop_oneof![2 => Just(0.0), 3 => 0.01f64..1.0], n * n)
            .prop_map(move |raw| StochasticMatrix::from_rows(&normalized(n, raw)).unwrap())
    })
}

/// Strictly positive stochastic matrices of size `n`.
pub fn positive_matrix(n: usize) -> impl Strategy<Value = StochasticMatrix> {
    prop::collection::vec(0.05f64..1.0, n * n)
        .prop_map(move |raw| StochasticMatrix::from_rows(&normalized(n, raw)).unwrap())
}

/// Points of the simplex of dimension `n`.
pub fn simplex(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, n).prop_map(|mut v| {
        let sum: f64 = v.iter().sum();
        if sum == 0.0 {
            v[0] = 1.0;
            return v;
        }
        v.iter_mut().for_each(|x| *x /= sum);
        v
    })
}

pub fn random_simplex(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..n).map(|_| -rng.gen::<f64>().max(1e-300).ln()).collect();
    let sum: f64 = v.iter().sum();
    v.into_iter().map(|x| x / sum).collect()
}

/// Random matrix with a sparse support that keeps a self-loop on every
/// state; strictly positive on the first row to keep things connected.
pub fn random_matrix(rng: &mut ChaCha8Rng, n: usize, density: f64) -> StochasticMatrix {
    let raw: Vec<f64> = (0..n * n)
        .map(|k| {
            let (i, j) = (k / n, k % n);
            if i == j || i == 0 || j == 0 || rng.gen_bool(density) {
                rng.gen_range(0.05..1.0)
            } else {
                0.0
            }
        })
        .collect();
    StochasticMatrix::from_rows(&normalized(n, raw)).unwrap()
}

/// Piecewise-linear path with 2-4 keyframes that passes the strict
/// certificate.
pub fn random_strict_evolution(rng: &mut ChaCha8Rng, n: usize) -> Evolution {
    loop {
        let frames = rng.gen_range(2..=4);
        let mut cuts: Vec<f64> = (0..frames - 2).map(|_| rng.gen_range(0.1..0.9)).collect();
        cuts.sort_by(f64::total_cmp);
        let mut bps = vec![0.0];
        bps.extend(cuts);
        bps.push(1.0);
        if bps.windows(2).any(|w| w[1] - w[0] < 0.05) {
            continue;
        }
        let keyframes = bps
            .into_iter()
            .map(|s| (s, random_matrix(rng, n, 0.5)))
            .collect();
        let e = Evolution::piecewise_linear(keyframes).unwrap();
        if e.structural_certificate(Mode::Strict).overall {
            return e;
        }
    }
}

pub fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Row vector times matrix, straight from the definition.
pub fn vec_times(v: &[f64], p: &StochasticMatrix) -> Vec<f64> {
    let n = p.n();
    (0..n).map(|j| (0..n).map(|i| v[i] * p.get(i, j)).sum()).collect()
}
