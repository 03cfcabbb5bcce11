//! One function per subcommand. Each returns the JSON report, its CSV tables
//! and an exit code; nothing here prints.

use std::path::Path;

use markov_adiabatic::adiabatic::{check_prop1_with, ContinuityStatus};
use markov_adiabatic::families::shift_reset_family;
use markov_adiabatic::matrix::DEFAULT_ROW_TOL;
use markov_adiabatic::spectral::{fmt17, prop2_verdict};
use markov_adiabatic::{
    check_prop2, largest_mixing_time, spectral_scan, theorem2_bound, AdiabaticProblem, BoundReport,
    BoundVariant, ContinuityReport, Evolution, EvolutionKind, EvolutionSpec, LargestMixingResult,
    LipschitzEstimate, Mode, Prop2Verdict, SadResult, SpectralScan, StructuralCertificate, DEFAULT_CAP,
};
use serde::Serialize;
use serde_json::json;

use crate::{verify, CliError, Outcome, RunConfig, EXIT_CAP, EXIT_OK, EXIT_PROPERTY};

pub fn load_evolution(path: &Path) -> Result<Evolution, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let spec: EvolutionSpec = serde_json::from_str(&text)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    Ok(Evolution::from_spec(&spec, DEFAULT_ROW_TOL)?)
}

fn input(cfg: &RunConfig) -> Result<Evolution, CliError> {
    load_evolution(cfg.input.as_deref().expect("input is validated for this command"))
}

fn to_value<T: Serialize>(x: &T) -> serde_json::Value {
    serde_json::to_value(x).expect("reports serialize")
}

/// A bound, or the reason it is not defined for these arguments.
#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum BoundEntry {
    Report(BoundReport),
    Unavailable { variant: BoundVariant, error: String },
}

impl BoundEntry {
    pub fn ceiling(&self) -> Option<u64> {
        match self {
            Self::Report(r) => Some(r.bound_ceiling),
            Self::Unavailable { .. } => None,
        }
    }
}

/// The bound for `variant`, with the mixing time taken on the grid at the
/// accuracy the variant asks for.
pub fn bound_for(
    e: &Evolution,
    eps: f64,
    grid_points: usize,
    mode: Mode,
    variant: BoundVariant,
) -> Result<BoundEntry, CliError> {
    let mix = largest_mixing_time(e, variant.tmix_eps(eps), grid_points, DEFAULT_CAP, mode)?;
    Ok(bound_entry(e, &mix, eps, variant))
}

fn bound_entry(e: &Evolution, mix: &LargestMixingResult, eps: f64, variant: BoundVariant) -> BoundEntry {
    match theorem2_bound(e.n(), e.lipschitz_constant().value, mix.tmix_sup, eps, variant) {
        Ok(r) => BoundEntry::Report(r),
        Err(err) => BoundEntry::Unavailable {
            variant,
            error: err.to_string(),
        },
    }
}

#[derive(Serialize)]
struct MixingSummary {
    eps: f64,
    tmix_sup: u64,
    argmax: f64,
}

impl From<&LargestMixingResult> for MixingSummary {
    fn from(m: &LargestMixingResult) -> Self {
        Self {
            eps: m.eps,
            tmix_sup: m.tmix_sup,
            argmax: m.argmax,
        }
    }
}

#[derive(Serialize)]
struct AnalyzeReport {
    command: &'static str,
    n: usize,
    kind: EvolutionKind,
    eps: f64,
    mode: Mode,
    grid_points: usize,
    certificate: StructuralCertificate,
    lipschitz: LipschitzEstimate,
    spectral: SpectralScan,
    mixing: MixingSummary,
    mixing_half_eps: MixingSummary,
    bounds: Vec<BoundEntry>,
    prop1: ContinuityReport,
    prop2: Prop2Verdict,
    /// Grid points where `(1 - 2 sqrt(n) eps) / sigma(s) > tmix(s)`.
    prop2_pointwise_failures: Vec<f64>,
}

pub fn analyze(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let e = input(cfg)?;
    let eps = cfg.eps();
    let certificate = e.require(cfg.mode)?;
    let lipschitz = e.lipschitz_constant();
    let scan = spectral_scan(&e, cfg.grid_points)?;
    let cap = cfg.cap.unwrap_or(DEFAULT_CAP);
    let mix = largest_mixing_time(&e, eps, cfg.grid_points, cap, cfg.mode)?;
    let mix_half = largest_mixing_time(&e, eps / 2.0, cfg.grid_points, cap, cfg.mode)?;
    let bounds = vec![
        bound_entry(&e, &mix, eps, BoundVariant::TheoremLiteral),
        bound_entry(&e, &mix_half, eps, BoundVariant::ProofFaithful),
    ];
    let prop1 = check_prop1_with(&e, eps, &scan.grid, scan.sigma_floor, lipschitz.value)?;
    let prop2 = check_prop2(&e, eps, mix.tmix_sup, &scan);
    let prop2_pointwise_failures: Vec<f64> = scan
        .grid
        .iter()
        .zip(&scan.sigma_at)
        .zip(&mix.tmix_at)
        .filter(|((_, &sigma), &t)| !prop2_verdict(e.n(), eps, t, sigma).holds)
        .map(|((&s, _), _)| s)
        .collect();

    let failed = prop1.status == ContinuityStatus::Fails || !prop2.holds || !prop2_pointwise_failures.is_empty();
    let tables = vec![("sigma".to_string(), scan.to_csv()), ("tmix".to_string(), mix.to_csv())];
    let report = AnalyzeReport {
        command: "analyze",
        n: e.n(),
        kind: e.kind(),
        eps,
        mode: cfg.mode,
        grid_points: cfg.grid_points,
        certificate,
        lipschitz,
        spectral: scan,
        mixing: (&mix).into(),
        mixing_half_eps: (&mix_half).into(),
        bounds,
        prop1,
        prop2,
        prop2_pointwise_failures,
    };
    Ok(Outcome {
        report: to_value(&report),
        tables,
        exit: if failed { EXIT_PROPERTY } else { EXIT_OK },
    })
}

pub fn mixing(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let e = input(cfg)?;
    let mix = largest_mixing_time(&e, cfg.eps(), cfg.grid_points, cfg.cap.unwrap_or(DEFAULT_CAP), cfg.mode)?;
    Ok(Outcome {
        tables: vec![("tmix".to_string(), mix.to_csv())],
        report: json!({ "command": "mixing", "mode": cfg.mode, "result": mix }),
        exit: EXIT_OK,
    })
}

#[derive(Serialize)]
struct SadReport {
    command: &'static str,
    mode: Mode,
    /// `flag`, `bound` (proof-faithful ceiling) or `default`.
    cap_source: &'static str,
    result: SadResult,
    bound: Option<BoundEntry>,
    within_bound: Option<bool>,
}

fn search_csv(r: &SadResult) -> String {
    let mut out = String::from("T,feasible,max_deviation\n");
    for e in &r.search_log {
        out.push_str(&format!("{},{},{}\n", e.horizon, e.feasible, fmt17(e.max_deviation)));
    }
    out
}

pub fn sad(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let e = input(cfg)?;
    let eps = cfg.eps();
    let problem = AdiabaticProblem::new(&e, cfg.mode)?;
    let bound = bound_for(&e, eps, cfg.grid_points, cfg.mode, cfg.variant)?;
    let proof_ceiling = match cfg.variant {
        BoundVariant::ProofFaithful => bound.ceiling(),
        BoundVariant::TheoremLiteral => {
            bound_for(&e, eps, cfg.grid_points, cfg.mode, BoundVariant::ProofFaithful)?.ceiling()
        }
    };
    let (cap, cap_source) = match (cfg.cap, proof_ceiling) {
        (Some(c), _) => (c, "flag"),
        (None, Some(c)) => (c.max(1), "bound"),
        (None, None) => (DEFAULT_CAP, "default"),
    };
    let result = problem.search(eps, cap, cfg.strategy)?;

    let mut tables = vec![("search".to_string(), search_csv(&result))];
    if let Some(t) = result.tsad {
        tables.push(("trajectory".to_string(), problem.trajectory(t)?.to_csv()));
    }
    let within_bound = result.tsad.zip(bound.ceiling()).map(|(t, c)| t <= c);
    let exit = if result.tsad.is_none() { EXIT_CAP } else { EXIT_OK };
    let report = SadReport {
        command: "sad",
        mode: cfg.mode,
        cap_source,
        result,
        bound: Some(bound),
        within_bound,
    };
    Ok(Outcome {
        report: to_value(&report),
        tables,
        exit,
    })
}

pub fn bound(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let e = input(cfg)?;
    let eps = cfg.eps();
    let mix = largest_mixing_time(&e, cfg.variant.tmix_eps(eps), cfg.grid_points, DEFAULT_CAP, cfg.mode)?;
    let report = theorem2_bound(e.n(), e.lipschitz_constant().value, mix.tmix_sup, eps, cfg.variant)?;
    Ok(Outcome {
        report: json!({ "command": "bound", "mode": cfg.mode, "result": report }),
        tables: Vec::new(),
        exit: EXIT_OK,
    })
}

pub fn verify(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let battery = verify::run_battery(cfg.seed, cfg.grid_points, &verify::Hooks::default());
    let exit = if battery.passed { EXIT_OK } else { EXIT_PROPERTY };
    Ok(Outcome {
        report: to_value(&battery),
        tables: Vec::new(),
        exit,
    })
}

/// One line of the scaling table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DemoRow {
    pub n: usize,
    pub tmix_sup: u64,
    pub tsad: Option<u64>,
    pub bound_ceiling: Option<u64>,
    pub ratio: Option<f64>,
    pub cap: u64,
    /// `ok`, or `cap_exceeded` when no feasible horizon was found.
    pub status: &'static str,
}

/// Reset/shift family on `n` states: largest mixing time (relaxed endpoints),
/// exact stable adiabatic time and `tsad * eps / tmix_sup^2`.
pub fn demo_row(n: usize, eps: f64, grid_points: usize, cap: Option<u64>) -> Result<DemoRow, CliError> {
    let e = shift_reset_family(n);
    let mix = largest_mixing_time(&e, eps, grid_points, DEFAULT_CAP, Mode::Relaxed)?;
    let bound_ceiling = bound_for(&e, eps, grid_points, Mode::Relaxed, BoundVariant::ProofFaithful)?.ceiling();
    let cap = cap.or(bound_ceiling).unwrap_or(DEFAULT_CAP).max(1);
    let result = AdiabaticProblem::new(&e, Mode::Relaxed)?.search(eps, cap, markov_adiabatic::SearchStrategy::Exact)?;
    let t2 = (mix.tmix_sup * mix.tmix_sup) as f64;
    Ok(DemoRow {
        n,
        tmix_sup: mix.tmix_sup,
        tsad: result.tsad,
        bound_ceiling,
        ratio: result.tsad.map(|t| t as f64 * eps / t2),
        cap,
        status: if result.tsad.is_some() { "ok" } else { "cap_exceeded" },
    })
}

fn demo_csv(rows: &[DemoRow]) -> String {
    let opt = |x: Option<u64>| x.map(|v| v.to_string()).unwrap_or_default();
    let mut out = String::from("n,tmix_sup,tsad,bound_ceiling,ratio,status\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.n,
            r.tmix_sup,
            opt(r.tsad),
            opt(r.bound_ceiling),
            r.ratio.map(fmt17).unwrap_or_default(),
            r.status
        ));
    }
    out
}

pub fn demo_optimal(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let eps = cfg.eps();
    let rows = cfg
        .n_list
        .iter()
        .map(|&n| demo_row(n, eps, cfg.grid_points, cfg.cap))
        .collect::<Result<Vec<_>, _>>()?;
    let capped = rows.iter().any(|r| r.tsad.is_none());
    Ok(Outcome {
        tables: vec![("demo_optimal".to_string(), demo_csv(&rows))],
        report: json!({ "command": "demo-optimal", "eps": eps, "grid_points": cfg.grid_points, "rows": rows }),
        exit: if capped { EXIT_CAP } else { EXIT_OK },
    })
}
