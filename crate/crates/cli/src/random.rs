//! Seeded random instances for the verification battery and the acceptance
//! experiments.

use markov_adiabatic::{Evolution, Mode, StochasticMatrix};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// A random stochastic matrix whose entries are positive with probability
/// `density`; empty rows get a self-loop.
pub fn random_matrix(rng: &mut ChaCha8Rng, n: usize, density: f64) -> StochasticMatrix {
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut row: Vec<f64> = (0..n)
                .map(|_| if rng.gen_bool(density) { rng.gen_range(0.05..1.0) } else { 0.0 })
                .collect();
            let sum: f64 = row.iter().sum();
            if sum == 0.0 {
                row[i] = 1.0;
                return row;
            }
            row.iter().map(|x| x / sum).collect()
        })
        .collect();
    StochasticMatrix::from_rows(&rows).expect("rows are normalized")
}

/// Uniform point of the probability simplex.
pub fn random_simplex(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let sum: f64 = v.iter().sum();
    v.into_iter().map(|x| x / sum).collect()
}

/// Breakpoints `0 = s_0 < ... < s_{k-1} = 1` with gaps of at least 0.05.
fn random_breakpoints(rng: &mut ChaCha8Rng, frames: usize) -> Vec<f64> {
    loop {
        let mut bps: Vec<f64> = (0..frames - 2).map(|_| rng.gen_range(0.05..0.95)).collect();
        bps.push(0.0);
        bps.push(1.0);
        bps.sort_by(f64::total_cmp);
        if bps.windows(2).all(|w| w[1] - w[0] >= 0.05) {
            return bps;
        }
    }
}

/// Piecewise-linear path on `n` states with 2-4 keyframes, resampled until
/// every keyframe and segment is irreducible and aperiodic.
pub fn random_strict_evolution(rng: &mut ChaCha8Rng, n: usize) -> Evolution {
    loop {
        let frames = rng.gen_range(2..=4);
        let keyframes = random_breakpoints(rng, frames)
            .into_iter()
            .map(|s| (s, random_matrix(rng, n, 0.6)))
            .collect();
        let e = Evolution::piecewise_linear(keyframes).expect("breakpoints are valid");
        if e.structural_certificate(Mode::Strict).overall {
            return e;
        }
    }
}

/// Constant path at a random strict matrix.
pub fn random_constant_evolution(rng: &mut ChaCha8Rng, n: usize) -> Evolution {
    loop {
        let p = random_matrix(rng, n, 0.6);
        if p.structure().is_ergodic() {
            return Evolution::constant(p);
        }
    }
}
