//! Invariant battery run by `adiabat verify`.
//!
//! Every check draws from its own ChaCha stream of the seed, so adding or
//! resizing one check never shifts the instances another one sees. Each
//! verdict keeps the first counterexample found.

use markov_adiabatic::adiabatic::{telescoped_deviation, ContinuityStatus};
use markov_adiabatic::spectral::prop2_verdict;
use markov_adiabatic::{
    check_prop1, largest_mixing_time, propagate, spectral_scan, stationary_distribution, theorem2_bound,
    tv_distance, worst_case_tv, AdiabaticProblem, BoundVariant, Evolution, Mode, ProbabilityVector,
    SearchStrategy, SignedVector, StochasticMatrix, DEFAULT_CAP,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::random::{random_constant_evolution, random_matrix, random_simplex, random_strict_evolution};

/// Test hooks for negative controls.
#[derive(Debug, Clone, Default)]
pub struct Hooks {
    /// Extra matrix fed to the contraction check, typically one built with
    /// [`StochasticMatrix::from_raw_unchecked`].
    pub contraction_matrix: Option<StochasticMatrix>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckVerdict {
    pub name: &'static str,
    pub passed: bool,
    pub cases: u64,
    pub counterexample: Option<Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Battery {
    pub seed: u64,
    pub grid_points: usize,
    pub passed: bool,
    pub checks: Vec<CheckVerdict>,
}

impl Battery {
    pub fn check(&self, name: &str) -> Option<&CheckVerdict> {
        self.checks.iter().find(|c| c.name == name)
    }
}

struct Check {
    name: &'static str,
    cases: u64,
    counterexample: Option<Value>,
}

impl Check {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            cases: 0,
            counterexample: None,
        }
    }

    fn case(&mut self, ok: bool, witness: impl FnOnce() -> Value) {
        self.cases += 1;
        if !ok && self.counterexample.is_none() {
            self.counterexample = Some(witness());
        }
    }

    fn error(&mut self, context: Value, err: impl std::fmt::Display) {
        self.case(false, || json!({ "context": context, "error": err.to_string() }));
    }

    fn finish(self) -> CheckVerdict {
        CheckVerdict {
            name: self.name,
            passed: self.counterexample.is_none(),
            cases: self.cases,
            counterexample: self.counterexample,
        }
    }
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn l1(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

/// Random matrix with a unique stationary distribution.
fn relaxed_matrix(rng: &mut ChaCha8Rng, n: usize) -> StochasticMatrix {
    loop {
        let p = random_matrix(rng, n, 0.4);
        if p.structure().satisfies(Mode::Relaxed) {
            return p;
        }
    }
}

struct Instance {
    evolution: Evolution,
    eps: f64,
}

fn instances(seed: u64) -> Vec<Instance> {
    let mut rng = stream(seed, 100);
    (0..6)
        .map(|i| {
            let n = rng.gen_range(3..=6);
            Instance {
                evolution: random_strict_evolution(&mut rng, n),
                eps: if i % 2 == 0 { 0.05 } else { 0.1 },
            }
        })
        .collect()
}

fn tv_l1_identity(seed: u64) -> CheckVerdict {
    let mut rng = stream(seed, 1);
    let mut check = Check::new("tv_l1_identity");
    for _ in 0..500 {
        let n = rng.gen_range(2..=8);
        let (a, b) = (random_simplex(&mut rng, n), random_simplex(&mut rng, n));
        let diff: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
        let tv = match (ProbabilityVector::new(a.clone()), ProbabilityVector::new(b.clone())) {
            (Ok(pa), Ok(pb)) => tv_distance(&pa, &pb),
            (Err(e), _) | (_, Err(e)) => Err(e),
        };
        match tv {
            Ok(tv) => check.case((2.0 * tv - l1(&diff)).abs() <= 1e-15 * n as f64, || {
                json!({ "mu": a, "nu": b, "tv": tv, "l1": l1(&diff) })
            }),
            Err(e) => check.error(json!({ "mu": a, "nu": b }), e),
        }
    }
    check.finish()
}

fn contraction_case(check: &mut Check, p: &StochasticMatrix, nu: Vec<f64>) {
    let v = match SignedVector::new(nu.clone()) {
        Ok(v) => v,
        Err(e) => return check.error(json!({ "nu": nu }), e),
    };
    match propagate(&v, p) {
        Ok(out) => {
            let (before, after) = (v.l1_norm(), out.l1_norm());
            check.case(after <= before + 1e-12, || {
                json!({ "matrix": p.to_rows(), "nu": nu, "l1_before": before, "l1_after": after })
            });
        }
        Err(e) => check.error(json!({ "matrix": p.to_rows(), "nu": nu }), e),
    }
}

fn l1_contraction(seed: u64, hooks: &Hooks) -> CheckVerdict {
    let mut rng = stream(seed, 2);
    let mut check = Check::new("l1_contraction");
    if let Some(p) = &hooks.contraction_matrix {
        for i in 0..p.n() {
            let mut nu = vec![0.0; p.n()];
            nu[i] = 1.0;
            contraction_case(&mut check, p, nu);
        }
    }
    for _ in 0..500 {
        let n = rng.gen_range(2..=8);
        let p = random_matrix(&mut rng, n, 0.5);
        let nu: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        contraction_case(&mut check, &p, nu);
    }
    check.finish()
}

fn d_monotonicity(seed: u64) -> CheckVerdict {
    let mut rng = stream(seed, 3);
    let mut check = Check::new("d_monotonicity");
    for _ in 0..50 {
        let n = rng.gen_range(2..=6);
        let p = relaxed_matrix(&mut rng, n);
        let pi = match stationary_distribution(&p, Mode::Relaxed) {
            Ok(pi) => pi,
            Err(e) => {
                check.error(json!({ "matrix": p.to_rows() }), e);
                continue;
            }
        };
        let d: Vec<f64> = (1..=40).map(|t| worst_case_tv(&p, &pi, t)).collect();
        for (t, w) in d.windows(2).enumerate() {
            check.case(w[1] <= w[0] + 1e-12, || {
                json!({ "matrix": p.to_rows(), "T": t + 1, "d_T": w[0], "d_T_plus_1": w[1] })
            });
        }
    }
    check.finish()
}

fn vertex_sufficiency(seed: u64) -> CheckVerdict {
    let mut rng = stream(seed, 4);
    let mut check = Check::new("vertex_sufficiency");
    for _ in 0..50 {
        let n = rng.gen_range(2..=6);
        let p = relaxed_matrix(&mut rng, n);
        let t = rng.gen_range(1..=8u64);
        let pi = match stationary_distribution(&p, Mode::Relaxed) {
            Ok(pi) => pi,
            Err(e) => {
                check.error(json!({ "matrix": p.to_rows() }), e);
                continue;
            }
        };
        let d = worst_case_tv(&p, &pi, t);
        for _ in 0..100 {
            let start = random_simplex(&mut rng, n);
            let tv = ProbabilityVector::new(start.clone()).and_then(|mut nu| {
                for _ in 0..t {
                    nu = nu.step(&p)?;
                }
                tv_distance(&nu, &pi)
            });
            match tv {
                Ok(tv) => check.case(tv <= d + 1e-12, || {
                    json!({ "matrix": p.to_rows(), "T": t, "nu": start, "tv": tv, "d_T": d })
                }),
                Err(e) => check.error(json!({ "matrix": p.to_rows(), "nu": start }), e),
            }
        }
    }
    check.finish()
}

fn prop1(instances: &[Instance], grid_points: usize) -> CheckVerdict {
    let mut check = Check::new("prop1_continuity");
    for inst in instances {
        for eps in [inst.eps, 0.2] {
            match check_prop1(&inst.evolution, eps, grid_points, Mode::Strict) {
                Ok(r) => check.case(r.status != ContinuityStatus::Fails, || {
                    json!({ "evolution": inst.evolution.to_spec(), "report": r })
                }),
                Err(e) => check.error(json!({ "evolution": inst.evolution.to_spec(), "eps": eps }), e),
            }
        }
    }
    check.finish()
}

fn prop2(instances: &[Instance], grid_points: usize) -> CheckVerdict {
    let mut check = Check::new("prop2_spectral");
    for inst in instances {
        let (e, eps) = (&inst.evolution, inst.eps);
        let scan = spectral_scan(e, grid_points);
        let mix = largest_mixing_time(e, eps, grid_points, DEFAULT_CAP, Mode::Strict);
        let (scan, mix) = match (scan, mix) {
            (Ok(s), Ok(m)) => (s, m),
            (Err(err), _) | (_, Err(err)) => {
                check.error(json!({ "evolution": e.to_spec(), "eps": eps }), err);
                continue;
            }
        };
        let v = prop2_verdict(e.n(), eps, mix.tmix_sup, scan.sigma_floor);
        check.case(v.holds && !v.vacuous, || json!({ "evolution": e.to_spec(), "verdict": v }));
        for ((&s, &sigma), &t) in scan.grid.iter().zip(&scan.sigma_at).zip(&mix.tmix_at) {
            let v = prop2_verdict(e.n(), eps, t, sigma);
            check.case(v.holds, || json!({ "evolution": e.to_spec(), "s": s, "verdict": v }));
        }
    }
    check.finish()
}

fn telescoping(seed: u64, instances: &[Instance]) -> CheckVerdict {
    let mut rng = stream(seed, 7);
    let mut check = Check::new("telescoping_identity");
    for inst in instances {
        let e = &inst.evolution;
        let horizon = rng.gen_range(1..=20u64);
        let result = (|| -> markov_adiabatic::Result<()> {
            let problem = AdiabaticProblem::new(e, Mode::Strict)?;
            let mut nu = problem.stationary_at(0.0)?;
            for k in 1..=horizon {
                let s = k as f64 / horizon as f64;
                nu = nu.step(&e.sample(s)?)?;
                let direct = nu.to_signed().sub(&problem.stationary_at(s)?.to_signed())?;
                let tele = telescoped_deviation(&problem, horizon, k)?;
                let gap = l1(tele.sub(&direct)?.as_slice());
                check.case(gap <= 1e-10, || {
                    json!({ "evolution": e.to_spec(), "T": horizon, "k": k, "l1_gap": gap })
                });
            }
            Ok(())
        })();
        if let Err(err) = result {
            check.error(json!({ "evolution": e.to_spec(), "T": horizon }), err);
        }
    }
    check.finish()
}

fn theorem2(instances: &[Instance], grid_points: usize) -> CheckVerdict {
    let mut check = Check::new("theorem2_desk_check");
    for inst in instances {
        let (e, eps) = (&inst.evolution, inst.eps);
        let result = (|| -> markov_adiabatic::Result<(u64, Option<u64>)> {
            let tmix = largest_mixing_time(e, eps / 2.0, grid_points, DEFAULT_CAP, Mode::Strict)?.tmix_sup;
            let bound = theorem2_bound(e.n(), e.lipschitz_constant().value, tmix, eps, BoundVariant::ProofFaithful)?;
            let cap = bound.bound_ceiling.max(1);
            let r = AdiabaticProblem::new(e, Mode::Strict)?.search(eps, cap, SearchStrategy::Exact)?;
            Ok((bound.bound_ceiling, r.tsad))
        })();
        match result {
            Ok((ceiling, tsad)) => check.case(tsad.is_some_and(|t| t <= ceiling), || {
                json!({ "evolution": e.to_spec(), "eps": eps, "bound_ceiling": ceiling, "tsad": tsad })
            }),
            Err(err) => check.error(json!({ "evolution": e.to_spec(), "eps": eps }), err),
        }
    }
    check.finish()
}

fn fixed_point(seed: u64) -> CheckVerdict {
    let mut rng = stream(seed, 9);
    let mut check = Check::new("fixed_point_trajectory");
    for _ in 0..10 {
        let n = rng.gen_range(2..=6);
        let e = random_constant_evolution(&mut rng, n);
        for horizon in [1, 5, 20] {
            match AdiabaticProblem::new(&e, Mode::Strict).and_then(|p| p.trajectory(horizon)) {
                Ok(tr) => check.case(tr.max_deviation <= 1e-12, || {
                    json!({ "evolution": e.to_spec(), "T": horizon, "max_deviation": tr.max_deviation })
                }),
                Err(err) => check.error(json!({ "evolution": e.to_spec(), "T": horizon }), err),
            }
        }
    }
    check.finish()
}

/// Everything the parallel scans produce for one instance, serialized.
fn fingerprint(inst: &Instance, grid_points: usize) -> markov_adiabatic::Result<String> {
    let e = &inst.evolution;
    let scan = spectral_scan(e, grid_points)?;
    let mix = largest_mixing_time(e, inst.eps, grid_points, DEFAULT_CAP, Mode::Strict)?;
    let prop1 = check_prop1(e, 0.2, grid_points, Mode::Strict)?;
    let sad = AdiabaticProblem::new(e, Mode::Strict)?.search(inst.eps, 500, SearchStrategy::Exact)?;
    Ok(serde_json::to_string(&json!([scan, mix, prop1, sad])).expect("results serialize"))
}

fn determinism(instances: &[Instance], grid_points: usize) -> CheckVerdict {
    let mut check = Check::new("worker_determinism");
    let inst = &instances[0];
    let mut reference: Option<String> = None;
    for workers in [1, 2, 4] {
        let pool = match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
            Ok(p) => p,
            Err(e) => {
                check.error(json!({ "workers": workers }), e);
                continue;
            }
        };
        match pool.install(|| fingerprint(inst, grid_points)) {
            Ok(fp) => match &reference {
                None => {
                    check.case(true, || Value::Null);
                    reference = Some(fp);
                }
                Some(r) => check.case(*r == fp, || {
                    json!({ "evolution": inst.evolution.to_spec(), "workers": workers })
                }),
            },
            Err(e) => check.error(json!({ "workers": workers }), e),
        }
    }
    check.finish()
}

/// Run every check. The verdict depends only on `seed`, `grid_points` and
/// `hooks`.
pub fn run_battery(seed: u64, grid_points: usize, hooks: &Hooks) -> Battery {
    let inst = instances(seed);
    let checks = vec![
        tv_l1_identity(seed),
        l1_contraction(seed, hooks),
        d_monotonicity(seed),
        vertex_sufficiency(seed),
        prop1(&inst, grid_points),
        prop2(&inst, grid_points),
        telescoping(seed, &inst),
        theorem2(&inst, grid_points),
        fixed_point(seed),
        determinism(&inst, grid_points),
    ];
    Battery {
        seed,
        grid_points,
        passed: checks.iter().all(|c| c.passed),
        checks,
    }
}
