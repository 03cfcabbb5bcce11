//! Stability analysis for Markov chains driven by a continuous path of
//! transition matrices.
//!
//! A path `s -> P(s)` on `[0, 1]` is run at horizon `T` by applying
//! `P(1/T), P(2/T), ..., P(1)` in turn, starting from the stationary
//! distribution of `P(0)`. The crate computes:
//!
//! * worst-case mixing times of single chains and their supremum along a path,
//! * the smallest nonzero singular value of `I - P(s)` and its floor,
//! * Lipschitz constants of piecewise-linear paths,
//! * the stable adiabatic time (first horizon that keeps every step within
//!   `eps` of the instantaneous stationary distribution),
//! * the upper bound `3 n^{3/2} L t_mix^2 / ((1 - 2 sqrt(n) eps) eps)` and the
//!   continuity radius `eps sigma / (3 L n^{3/2})`, with numerical checkers.

pub mod adiabatic;
pub mod error;
pub mod evolution;
pub mod families;
pub mod matrix;
pub mod mixing;
pub mod spectral;
pub mod structure;

pub use adiabatic::{
    adiabatic_trajectory, check_prop1, continuity_delta, is_feasible, stable_adiabatic_time,
    theorem2_bound, AdiabaticProblem, BoundReport, BoundVariant, ContinuityReport, SadResult,
    SearchStrategy, Trajectory,
};
pub use error::{Error, Result};
pub use evolution::{Evolution, EvolutionKind, EvolutionSpec, LipschitzEstimate, StructuralCertificate};
pub use matrix::{
    classify_structure, operator_norm, propagate, stationary_distribution, tv_distance,
    ProbabilityVector, SignedVector, StochasticMatrix,
};
pub use mixing::{
    largest_mixing_time, mixing_time, worst_case_tv, LargestMixingResult, MixingResult,
};
pub use spectral::{check_prop2, sigma_at, spectral_scan, Prop2Verdict, SpectralScan};
pub use structure::{Mode, Structure};

/// Default number of uniform grid points for path scans.
pub const DEFAULT_GRID_POINTS: usize = 1001;
/// Default search cap for mixing and adiabatic times.
pub const DEFAULT_CAP: u64 = 1_000_000;
