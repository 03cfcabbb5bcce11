//! Stable adiabatic times.
//!
//! At horizon `T` the chain starts from `pi(0)` and applies `P(1/T)`, ...,
//! `P(T/T)`. Horizon `T` is feasible when after every step `k` the distribution
//! is strictly within `eps` (total variation) of `pi(k/T)`. The stable
//! adiabatic time is the first feasible `T`; feasibility is not assumed to be
//! monotone in `T`.

use std::collections::HashMap;
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::Evolution;
use crate::matrix::{
    propagate, solve_stationary, tv_slices, ProbabilityVector, SignedVector, StochasticMatrix,
};
use crate::mixing::largest_mixing_time;
use crate::spectral::{fmt17, spectral_scan};
use crate::structure::Mode;

const CACHE_SHARDS: usize = 16;
const CACHE_SHARD_CAPACITY: usize = 1 << 16;

/// Stationary distributions keyed on the exact bits of `s`.
///
/// Shards are cleared wholesale when they fill up, which bounds memory on long
/// horizon scans.
struct StationaryCache {
    shards: Vec<Mutex<HashMap<u64, Vec<f64>>>>,
}

impl StationaryCache {
    fn new() -> Self {
        Self {
            shards: (0..CACHE_SHARDS).map(|_| Mutex::new(HashMap::new())).collect(),
        }
    }

    fn get_or_solve(&self, s: f64, p: &StochasticMatrix) -> Result<Vec<f64>> {
        let key = s.to_bits();
        let shard = &self.shards[(key.wrapping_mul(0x9E37_79B9_7F4A_7C15) >> 60) as usize];
        if let Some(v) = shard.lock().unwrap().get(&key) {
            return Ok(v.clone());
        }
        let pi = solve_stationary(p)?.into_inner();
        let mut guard = shard.lock().unwrap();
        if guard.len() >= CACHE_SHARD_CAPACITY {
            guard.clear();
        }
        guard.insert(key, pi.clone());
        Ok(pi)
    }
}

/// Deviations `TV(nu_k, pi(k/T))` for `k = 1..=T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub horizon: u64,
    pub deviations: Vec<f64>,
    pub max_deviation: f64,
    /// 1-based step attaining the maximum.
    pub argmax_k: u64,
}

impl Trajectory {
    /// Deviation after the last step, the only one the non-stable criterion checks.
    pub fn final_deviation(&self) -> f64 {
        *self.deviations.last().expect("horizon >= 1")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,s,deviation\n");
        for (i, d) in self.deviations.iter().enumerate() {
            let k = i as u64 + 1;
            out.push_str(&format!(
                "{},{},{}\n",
                k,
                fmt17(k as f64 / self.horizon as f64),
                fmt17(*d)
            ));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SearchStrategy {
    /// Every `T = 1, 2, 3, ...` in order.
    #[default]
    Exact,
    /// Geometric bracketing (ratio 1.1) followed by a linear scan of the bracket.
    Geometric,
}

impl std::str::FromStr for SearchStrategy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "exact" => Ok(Self::Exact),
            "geometric" => Ok(Self::Geometric),
            other => Err(format!("unknown strategy `{other}` (expected exact|geometric)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchEntry {
    pub horizon: u64,
    pub feasible: bool,
    /// Largest deviation seen before the scan stopped (at the first violation
    /// for infeasible horizons).
    pub max_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SadResult {
    /// First feasible horizon found; absent when none exists up to `cap`.
    pub tsad: Option<u64>,
    pub eps: f64,
    pub cap: u64,
    pub strategy: SearchStrategy,
    /// Tested horizons in increasing order.
    pub search_log: Vec<SearchEntry>,
    /// Smallest horizon that was not tested; every `T` below it was.
    pub exhaustive_below: u64,
    /// `tsad` is the infimum: every smaller horizon was tested and failed.
    pub minimal_verified: bool,
    /// `eps >= 1`, where the criterion is nearly void.
    pub degenerate: bool,
}

/// An evolution validated for adiabatic analysis, with its stationary cache.
pub struct AdiabaticProblem<'a> {
    evolution: &'a Evolution,
    pi0: Vec<f64>,
    cache: StationaryCache,
}

impl<'a> AdiabaticProblem<'a> {
    /// Validates `n >= 2` and the structural certificate in `mode`.
    pub fn new(evolution: &'a Evolution, mode: Mode) -> Result<Self> {
        if evolution.n() < 2 {
            return Err(Error::DegenerateDimension);
        }
        evolution.require(mode)?;
        let pi0 = solve_stationary(&evolution.sample(0.0)?)?.into_inner();
        Ok(Self {
            evolution,
            pi0,
            cache: StationaryCache::new(),
        })
    }

    pub fn evolution(&self) -> &Evolution {
        self.evolution
    }

    /// `pi(s)`, cached on `s`.
    pub fn stationary_at(&self, s: f64) -> Result<ProbabilityVector> {
        let p = self.evolution.sample(s)?;
        ProbabilityVector::new(self.cache.get_or_solve(s, &p)?)
    }

    /// Walk the horizon, feeding each deviation to `visit`; stop when it
    /// returns `false`.
    fn walk(&self, horizon: u64, mut visit: impl FnMut(u64, f64) -> bool) -> Result<()> {
        if horizon == 0 {
            return Err(Error::NonpositiveArgument { name: "T", value: 0.0 });
        }
        let mut nu = ProbabilityVector::new(self.pi0.clone())?;
        let t = horizon as f64;
        for k in 1..=horizon {
            let s = k as f64 / t;
            let p = self.evolution.sample(s)?;
            nu = nu.step(&p)?;
            let pi = self.cache.get_or_solve(s, &p)?;
            if !visit(k, tv_slices(nu.as_slice(), &pi)) {
                break;
            }
        }
        Ok(())
    }

    pub fn trajectory(&self, horizon: u64) -> Result<Trajectory> {
        let mut deviations = Vec::with_capacity(horizon as usize);
        self.walk(horizon, |_, d| {
            deviations.push(d);
            true
        })?;
        let (imax, &max_deviation) = deviations
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
            .expect("horizon >= 1");
        Ok(Trajectory {
            horizon,
            deviations,
            max_deviation,
            argmax_k: imax as u64 + 1,
        })
    }

    /// Feasibility of `horizon`, stopping at the first deviation `>= eps`.
    pub fn check(&self, horizon: u64, eps: f64) -> Result<SearchEntry> {
        let mut max_deviation = 0.0f64;
        let mut feasible = true;
        self.walk(horizon, |_, d| {
            max_deviation = max_deviation.max(d);
            feasible = d < eps;
            feasible
        })?;
        Ok(SearchEntry {
            horizon,
            feasible,
            max_deviation,
        })
    }

    pub fn is_feasible(&self, horizon: u64, eps: f64) -> Result<bool> {
        Ok(self.check(horizon, eps)?.feasible)
    }

    /// First feasible horizon up to `cap`. Returns `tsad = None` rather than an
    /// error when the cap is exhausted, so the search log survives.
    pub fn search(&self, eps: f64, cap: u64, strategy: SearchStrategy) -> Result<SadResult> {
        if !(eps > 0.0) {
            return Err(Error::NonpositiveArgument { name: "eps", value: eps });
        }
        if cap == 0 {
            return Err(Error::NonpositiveArgument { name: "cap", value: 0.0 });
        }
        let mut log: Vec<SearchEntry> = Vec::new();
        let tsad = match strategy {
            SearchStrategy::Exact => self.scan_range(1, cap, eps, &mut log)?,
            SearchStrategy::Geometric => self.geometric(eps, cap, &mut log)?,
        };
        log.sort_by_key(|e| e.horizon);
        let mut exhaustive_below = 1;
        for e in &log {
            if e.horizon == exhaustive_below {
                exhaustive_below += 1;
            } else if e.horizon > exhaustive_below {
                break;
            }
        }
        Ok(SadResult {
            tsad,
            eps,
            cap,
            strategy,
            minimal_verified: tsad.is_some_and(|t| t < exhaustive_below),
            exhaustive_below,
            search_log: log,
            degenerate: eps >= 1.0,
        })
    }

    /// Scan `from..=to` in order; parallel batches, results merged in order and
    /// truncated at the first feasible horizon.
    fn scan_range(&self, from: u64, to: u64, eps: f64, log: &mut Vec<SearchEntry>) -> Result<Option<u64>> {
        const BATCH: u64 = 16;
        let mut start = from;
        while start <= to {
            let end = (start + BATCH - 1).min(to);
            let batch: Vec<Result<SearchEntry>> = (start..=end)
                .into_par_iter()
                .map(|t| self.check(t, eps))
                .collect();
            for entry in batch {
                let entry = entry?;
                log.push(entry);
                if entry.feasible {
                    return Ok(Some(entry.horizon));
                }
            }
            start = end + 1;
        }
        Ok(None)
    }

    fn geometric(&self, eps: f64, cap: u64, log: &mut Vec<SearchEntry>) -> Result<Option<u64>> {
        let mut prev_infeasible = 0u64;
        let mut t = 1u64;
        loop {
            let entry = self.check(t, eps)?;
            log.push(entry);
            if entry.feasible {
                break;
            }
            prev_infeasible = t;
            if t == cap {
                return Ok(None);
            }
            t = ((t as f64 * 1.1).ceil() as u64).max(t + 1).min(cap);
        }
        let found = t;
        if prev_infeasible + 1 < found {
            if let Some(inner) = self.scan_range(prev_infeasible + 1, found - 1, eps, log)? {
                return Ok(Some(inner));
            }
        }
        Ok(Some(found))
    }
}

/// Trajectory of `e` at horizon `horizon` (relaxed validation).
pub fn adiabatic_trajectory(e: &Evolution, horizon: u64) -> Result<Trajectory> {
    AdiabaticProblem::new(e, Mode::Relaxed)?.trajectory(horizon)
}

pub fn is_feasible(e: &Evolution, horizon: u64, eps: f64) -> Result<bool> {
    AdiabaticProblem::new(e, Mode::Relaxed)?.is_feasible(horizon, eps)
}

/// Stable adiabatic time; `CapExceeded` when no horizon up to `cap` works.
///
/// With `cap = None` the cap is the ceiling of the proof-faithful bound when
/// that bound is defined, else [`crate::DEFAULT_CAP`].
pub fn stable_adiabatic_time(
    e: &Evolution,
    eps: f64,
    cap: Option<u64>,
    strategy: SearchStrategy,
) -> Result<SadResult> {
    let cap = match cap {
        Some(c) => c,
        None => default_cap(e, eps, crate::DEFAULT_GRID_POINTS, Mode::Relaxed),
    };
    let result = AdiabaticProblem::new(e, Mode::Relaxed)?.search(eps, cap, strategy)?;
    match result.tsad {
        Some(_) => Ok(result),
        None => Err(Error::CapExceeded { cap, at: None }),
    }
}

/// Ceiling of the proof-faithful bound, or [`crate::DEFAULT_CAP`] if it is not
/// computable. Never below 1.
pub fn default_cap(e: &Evolution, eps: f64, grid_points: usize, mode: Mode) -> u64 {
    let bound = || -> Result<u64> {
        let tmix = largest_mixing_time(e, eps / 2.0, grid_points, crate::DEFAULT_CAP, mode)?.tmix_sup;
        let l = e.lipschitz_constant().value;
        Ok(theorem2_bound(e.n(), l, tmix, eps, BoundVariant::ProofFaithful)?.bound_ceiling)
    };
    bound().map(|c| c.max(1)).unwrap_or(crate::DEFAULT_CAP)
}

/// `sum_j (pi((j-1)/T) - pi(j/T)) P(j/T) ... P(k/T)`.
///
/// Equals `nu_k - pi(k/T)` by telescoping (each `pi(j/T)` is fixed by
/// `P(j/T)`); computed here without forming `nu_k`.
pub fn telescoped_deviation(problem: &AdiabaticProblem<'_>, horizon: u64, k: u64) -> Result<SignedVector> {
    assert!(1 <= k && k <= horizon, "need 1 <= k <= T");
    let t = horizon as f64;
    let mats: Vec<StochasticMatrix> = (1..=k)
        .map(|j| problem.evolution.sample(j as f64 / t))
        .collect::<Result<_>>()?;
    let n = problem.evolution.n();
    let mut total = vec![0.0; n];
    let mut prev = problem.stationary_at(0.0)?.to_signed();
    for j in 1..=k {
        let cur = problem.stationary_at(j as f64 / t)?.to_signed();
        let mut diff = prev.sub(&cur)?;
        for m in &mats[(j - 1) as usize..] {
            diff = propagate(&diff, m)?;
        }
        for (acc, x) in total.iter_mut().zip(diff.as_slice()) {
            *acc += x;
        }
        prev = cur;
    }
    SignedVector::new(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BoundVariant {
    /// Mixing time taken at `eps`, as in the displayed inequality.
    TheoremLiteral,
    /// Mixing time taken at `eps / 2`, as in the horizon chosen by the argument.
    #[default]
    ProofFaithful,
}

impl BoundVariant {
    /// The accuracy at which the mixing time must be evaluated.
    pub fn tmix_eps(self, eps: f64) -> f64 {
        match self {
            Self::TheoremLiteral => eps,
            Self::ProofFaithful => eps / 2.0,
        }
    }
}

impl std::str::FromStr for BoundVariant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "literal" | "theorem_literal" => Ok(Self::TheoremLiteral),
            "proof" | "proof_faithful" => Ok(Self::ProofFaithful),
            other => Err(format!("unknown variant `{other}` (expected literal|proof)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub n: usize,
    pub lipschitz: f64,
    pub tmix_used: u64,
    pub eps: f64,
    pub variant: BoundVariant,
    pub bound_value: f64,
    pub bound_ceiling: u64,
    pub eps_condition_ok: bool,
}

/// `3 n^{3/2} L tmix^2 / ((1 - 2 sqrt(n) eps) eps)`, for `0 < eps < 1/(2 sqrt n)`.
///
/// The caller supplies `tmix` at the accuracy named by `variant`.
pub fn theorem2_bound(n: usize, lipschitz: f64, tmix: u64, eps: f64, variant: BoundVariant) -> Result<BoundReport> {
    if n < 2 {
        return Err(Error::DegenerateDimension);
    }
    if !(lipschitz >= 0.0) || !lipschitz.is_finite() {
        return Err(Error::NonpositiveArgument { name: "L", value: lipschitz });
    }
    if tmix == 0 {
        return Err(Error::NonpositiveArgument { name: "tmix", value: 0.0 });
    }
    let nf = n as f64;
    let limit = 1.0 / (2.0 * nf.sqrt());
    if !(eps > 0.0 && eps < limit) {
        return Err(Error::EpsOutOfRange { eps, limit });
    }
    let t = tmix as f64;
    let bound_value = 3.0 * nf.powf(1.5) * lipschitz * t * t / ((1.0 - 2.0 * nf.sqrt() * eps) * eps);
    Ok(BoundReport {
        n,
        lipschitz,
        tmix_used: tmix,
        eps,
        variant,
        bound_value,
        bound_ceiling: bound_value.ceil() as u64,
        eps_condition_ok: true,
    })
}

/// Continuity radius `eps sigma / (3 L n^{3/2})`.
pub fn continuity_delta(eps: f64, sigma_floor: f64, lipschitz: f64, n: usize) -> Result<f64> {
    for (name, value) in [
        ("eps", eps),
        ("sigma", sigma_floor),
        ("L", lipschitz),
        ("n", n as f64),
    ] {
        if !(value > 0.0) {
            return Err(Error::NonpositiveArgument { name, value });
        }
    }
    Ok(eps * sigma_floor / (3.0 * lipschitz * (n as f64).powf(1.5)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContinuityStatus {
    Holds,
    Fails,
    /// No pair of grid points lies within `delta`.
    GridTooCoarse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuityReport {
    pub eps: f64,
    pub sigma_floor: f64,
    pub lipschitz: f64,
    pub n: usize,
    /// Absent when `L = 0`: every pair is within range.
    pub delta: Option<f64>,
    pub pairs_tested: u64,
    pub max_tv_seen: f64,
    /// Grid pair attaining `max_tv_seen`.
    pub worst_pair: Option<(f64, f64)>,
    pub holds: bool,
    pub status: ContinuityStatus,
}

/// Check `TV(pi(t), pi(s)) <= eps` for every grid pair with `|t - s| <= delta`.
pub fn check_prop1(e: &Evolution, eps: f64, grid_points: usize, mode: Mode) -> Result<ContinuityReport> {
    e.require(mode)?;
    let scan = spectral_scan(e, grid_points)?;
    let lipschitz = e.lipschitz_constant().value;
    check_prop1_with(e, eps, &scan.grid, scan.sigma_floor, lipschitz)
}

/// [`check_prop1`] with a precomputed grid, floor and Lipschitz constant.
pub fn check_prop1_with(
    e: &Evolution,
    eps: f64,
    grid: &[f64],
    sigma_floor: f64,
    lipschitz: f64,
) -> Result<ContinuityReport> {
    let n = e.n();
    let delta = if lipschitz == 0.0 {
        None
    } else {
        Some(continuity_delta(eps, sigma_floor, lipschitz, n)?)
    };
    let pis: Vec<Vec<f64>> = grid
        .par_iter()
        .map(|&s| Ok(solve_stationary(&e.sample(s)?)?.into_inner()))
        .collect::<Result<_>>()?;
    let within = |a: f64, b: f64| delta.is_none_or(|d| b - a <= d);

    let per_start: Vec<(u64, f64, Option<(f64, f64)>)> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let mut count = 0u64;
            let mut worst = 0.0f64;
            let mut pair = None;
            for j in i + 1..grid.len() {
                if !within(grid[i], grid[j]) {
                    break;
                }
                count += 1;
                let tv = tv_slices(&pis[i], &pis[j]);
                if pair.is_none() || tv > worst {
                    worst = tv;
                    pair = Some((grid[i], grid[j]));
                }
            }
            (count, worst, pair)
        })
        .collect();

    let mut pairs_tested = 0u64;
    let mut max_tv_seen = 0.0f64;
    let mut worst_pair = None;
    for (count, worst, pair) in per_start {
        pairs_tested += count;
        if pair.is_some() && (worst_pair.is_none() || worst > max_tv_seen) {
            max_tv_seen = worst;
            worst_pair = pair;
        }
    }
    let status = if pairs_tested == 0 {
        ContinuityStatus::GridTooCoarse
    } else if max_tv_seen <= eps {
        ContinuityStatus::Holds
    } else {
        ContinuityStatus::Fails
    };
    Ok(ContinuityReport {
        eps,
        sigma_floor,
        lipschitz,
        n,
        delta,
        pairs_tested,
        max_tv_seen,
        worst_pair,
        holds: status != ContinuityStatus::Fails,
        status,
    })
}
