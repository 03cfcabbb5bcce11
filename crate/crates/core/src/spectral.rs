//! Smallest nonzero singular value of `I - P(s)` along a path.
//!
//! For a matrix with a unique stationary distribution `rank(I - P) = n - 1`,
//! so `sigma(s)` is taken positionally as the second-smallest singular value
//! rather than by thresholding.

use faer::Mat;
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::Evolution;
use crate::matrix::StochasticMatrix;

/// Relative zero threshold on singular values.
pub const ZERO_THRESHOLD: f64 = 1e-10;
/// `sigma(s)` below this (relative) is recorded as a conditioning warning.
pub const WEAK_SIGMA_THRESHOLD: f64 = 1e-6;

fn i_minus(p: &StochasticMatrix) -> Mat<f64> {
    let n = p.n();
    Mat::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 } - p.get(i, j))
}

/// Singular values of `I - P`, descending.
pub fn singular_values(p: &StochasticMatrix) -> Vec<f64> {
    // nalgebra's bidiagonal SVD can return inaccurate values on sparse
    // inputs, so faer does the factorization
    let mut sv = i_minus(p)
        .singular_values()
        .expect("SVD of a finite matrix converges");
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Full SVD `I - P = U diag(S) V^T`.
pub fn svd_factors(p: &StochasticMatrix) -> (DMatrix<f64>, Vec<f64>, DMatrix<f64>) {
    let n = p.n();
    let svd = i_minus(p).svd().expect("SVD of a finite matrix converges");
    let (u, s, v) = (svd.U(), svd.S().column_vector(), svd.V());
    (
        DMatrix::from_fn(n, n, |i, j| u[(i, j)]),
        (0..n).map(|i| s[i]).collect(),
        DMatrix::from_fn(n, n, |i, j| v[(i, j)]),
    )
}

fn sigma_from_spectrum(sv: &[f64], at: Option<f64>) -> Result<f64> {
    let n = sv.len();
    if n < 2 {
        return Err(Error::DegenerateDimension);
    }
    let threshold = ZERO_THRESHOLD * sv[0].max(1.0);
    let (sigma_next, sigma_min) = (sv[n - 2], sv[n - 1]);
    if sigma_min > threshold || sigma_next <= threshold {
        return Err(Error::RankWarning {
            at,
            sigma_min,
            sigma_next,
            threshold,
        });
    }
    Ok(sigma_next)
}

/// `sigma_{n-1}` of `I - P`.
pub fn sigma_at(p: &StochasticMatrix) -> Result<f64> {
    sigma_from_spectrum(&singular_values(p), None)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralScan {
    pub grid: Vec<f64>,
    pub sigma_at: Vec<f64>,
    pub sigma_floor: f64,
    /// Grid point attaining the floor.
    pub argmin: f64,
    /// Grid points where `sigma(s)` is positive but below
    /// `WEAK_SIGMA_THRESHOLD * max(1, sigma_1)`.
    pub rank_warnings: Vec<f64>,
    /// For exact-kind paths: `sqrt(n) * L * h / 2` with `h` the widest grid
    /// gap. The true infimum lies within this distance below the floor.
    pub floor_uncertainty: Option<f64>,
}

impl SpectralScan {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,sigma\n");
        for (s, v) in self.grid.iter().zip(&self.sigma_at) {
            out.push_str(&format!("{},{}\n", fmt17(*s), fmt17(*v)));
        }
        out
    }
}

/// Float with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// `sigma(s)` on [`Evolution::grid`]; the floor is the grid minimum.
pub fn spectral_scan(e: &Evolution, grid_points: usize) -> Result<SpectralScan> {
    if e.n() < 2 {
        return Err(Error::DegenerateDimension);
    }
    let grid = e.grid(grid_points);
    let spectra: Vec<(f64, f64)> = grid
        .par_iter()
        .map(|&s| {
            let sv = singular_values(&e.sample(s)?);
            let sigma = sigma_from_spectrum(&sv, Some(s))?;
            Ok((sigma, sv[0]))
        })
        .collect::<Result<_>>()?;

    let sigma_at: Vec<f64> = spectra.iter().map(|(s, _)| *s).collect();
    let rank_warnings = grid
        .iter()
        .zip(&spectra)
        .filter(|(_, (sigma, top))| *sigma < WEAK_SIGMA_THRESHOLD * top.max(1.0))
        .map(|(s, _)| *s)
        .collect();
    let (imin, &sigma_floor) = sigma_at
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("grid is nonempty");
    let floor_uncertainty = e.kind().is_exact().then(|| {
        let gap = grid.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
        (e.n() as f64).sqrt() * e.lipschitz_constant().value * gap / 2.0
    });
    Ok(SpectralScan {
        argmin: grid[imin],
        grid,
        sigma_at,
        sigma_floor,
        rank_warnings,
        floor_uncertainty,
    })
}

/// Outcome of comparing `(1 - 2 sqrt(n) eps) / sigma` with the largest mixing time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prop2Verdict {
    pub n: usize,
    pub eps: f64,
    pub sigma_floor: f64,
    pub lhs: f64,
    pub rhs: u64,
    pub holds: bool,
    /// `eps >= 1 / (2 sqrt(n))`, so the left side is not positive.
    pub vacuous: bool,
}

pub fn check_prop2(e: &Evolution, eps: f64, tmix_sup: u64, scan: &SpectralScan) -> Prop2Verdict {
    prop2_verdict(e.n(), eps, tmix_sup, scan.sigma_floor)
}

/// Pointwise form: one chain's `sigma` against its own mixing time.
pub fn prop2_verdict(n: usize, eps: f64, tmix: u64, sigma: f64) -> Prop2Verdict {
    let numerator = 1.0 - 2.0 * (n as f64).sqrt() * eps;
    let lhs = numerator / sigma;
    Prop2Verdict {
        n,
        eps,
        sigma_floor: sigma,
        lhs,
        rhs: tmix,
        holds: lhs <= tmix as f64,
        vacuous: numerator <= 0.0,
    }
}
