//! Worst-case mixing times.
//!
//! `d(T) = max_i TV(P^T(i, .), pi)`: the distance `TV(nu P^T, pi)` is convex in
//! `nu`, so its maximum over all initial distributions sits at a point mass.
//! `d` is non-increasing in `T`, which makes a doubling search followed by
//! bisection return the first crossing.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::Evolution;
use crate::matrix::{solve_stationary, ProbabilityVector, StochasticMatrix};
use crate::spectral::fmt17;
use crate::structure::Mode;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixingResult {
    pub tmix: u64,
    pub eps: f64,
    /// The search reached the cap (`tmix == cap`).
    pub cap_hit: bool,
    /// Every `(T, d(T))` evaluated by the search, in increasing `T`.
    pub tv_profile: Vec<(u64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LargestMixingResult {
    pub grid: Vec<f64>,
    pub tmix_at: Vec<u64>,
    pub tmix_sup: u64,
    pub argmax: f64,
    pub eps: f64,
}

impl LargestMixingResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,tmix\n");
        for (s, t) in self.grid.iter().zip(&self.tmix_at) {
            out.push_str(&format!("{},{}\n", fmt17(*s), t));
        }
        out
    }
}

/// `P^T` by binary powering over cached squarings `P, P^2, P^4, ...`.
pub struct PowerCache {
    squarings: Vec<DMatrix<f64>>,
}

impl PowerCache {
    pub fn new(p: &StochasticMatrix) -> Self {
        Self {
            squarings: vec![p.to_dmatrix()],
        }
    }

    pub fn power(&mut self, t: u64) -> DMatrix<f64> {
        assert!(t >= 1, "power needs t >= 1");
        let bits = 64 - t.leading_zeros() as usize;
        while self.squarings.len() < bits {
            let last = self.squarings.last().unwrap();
            let sq = last * last;
            self.squarings.push(sq);
        }
        let mut acc: Option<DMatrix<f64>> = None;
        for (i, sq) in self.squarings.iter().enumerate().take(bits) {
            if t >> i & 1 == 1 {
                acc = Some(match acc {
                    None => sq.clone(),
                    Some(a) => a * sq,
                });
            }
        }
        acc.expect("t >= 1 has a set bit")
    }
}

fn worst_row_tv(pt: &DMatrix<f64>, pi: &[f64]) -> f64 {
    let n = pi.len();
    (0..n)
        .map(|i| 0.5 * (0..n).map(|j| (pt[(i, j)] - pi[j]).abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `d(T)` for `P` with stationary distribution `pi`.
pub fn worst_case_tv(p: &StochasticMatrix, pi: &ProbabilityVector, t: u64) -> f64 {
    worst_row_tv(&PowerCache::new(p).power(t), pi.as_slice())
}

/// Mixing time of a chain with a unique aperiodic recurrent class.
pub fn mixing_time(p: &StochasticMatrix, eps: f64, cap: u64) -> Result<MixingResult> {
    p.require(Mode::Relaxed)?;
    let pi = solve_stationary(p)?;
    mixing_time_with(p, &pi, eps, cap)
}

/// Mixing time against a given `pi`, skipping structural validation.
pub fn mixing_time_with(
    p: &StochasticMatrix,
    pi: &ProbabilityVector,
    eps: f64,
    cap: u64,
) -> Result<MixingResult> {
    if !(eps > 0.0) {
        return Err(Error::NonpositiveArgument { name: "eps", value: eps });
    }
    if cap == 0 {
        return Err(Error::NonpositiveArgument { name: "cap", value: 0.0 });
    }
    let mut powers = PowerCache::new(p);
    let mut profile = BTreeMap::new();
    let mut d = |t: u64| -> f64 {
        let v = worst_row_tv(&powers.power(t), pi.as_slice());
        profile.insert(t, v);
        v
    };

    // invariant: d(lo) > eps (or lo == 0), d(hi) <= eps once found
    let mut lo = 0u64;
    let mut hi = 1u64;
    while d(hi) > eps {
        if hi == cap {
            return Err(Error::CapExceeded { cap, at: None });
        }
        lo = hi;
        hi = hi.saturating_mul(2).min(cap);
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if d(mid) <= eps {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(MixingResult {
        tmix: hi,
        eps,
        cap_hit: hi == cap,
        tv_profile: profile.into_iter().collect(),
    })
}

/// Largest mixing time over [`Evolution::grid`].
pub fn largest_mixing_time(
    e: &Evolution,
    eps: f64,
    grid_points: usize,
    cap: u64,
    mode: Mode,
) -> Result<LargestMixingResult> {
    e.require(mode)?;
    let grid = e.grid(grid_points);
    let tmix_at: Vec<u64> = grid
        .par_iter()
        .map(|&s| {
            let p = e.sample(s)?;
            let pi = solve_stationary(&p)?;
            mixing_time_with(&p, &pi, eps, cap)
                .map(|r| r.tmix)
                .map_err(|err| match err {
                    Error::CapExceeded { cap, .. } => Error::CapExceeded { cap, at: Some(s) },
                    other => other,
                })
        })
        .collect::<Result<_>>()?;
    let (imax, &tmix_sup) = tmix_at
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
        .expect("grid is nonempty");
    Ok(LargestMixingResult {
        argmax: grid[imax],
        grid,
        tmix_at,
        tmix_sup,
        eps,
    })
}
