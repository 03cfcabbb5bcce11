use adiabat_cli::verify::{run_battery, Hooks};
use adiabat_cli::{execute, Cli, RunConfig, DEFAULT_SEED, EXIT_OK};
use clap::Parser;
use markov_adiabatic::StochasticMatrix;

#[test]
fn corrupted_matrix_is_caught_with_a_counterexample() {
    let bad = StochasticMatrix::from_raw_unchecked(3, vec![0.9, 0.3, 0.1, 0.0, 1.0, 0.0, 0.2, 0.2, 0.6]);
    let hooks = Hooks {
        contraction_matrix: Some(bad),
    };
    let battery = run_battery(DEFAULT_SEED, 101, &hooks);
    assert!(!battery.passed);
    let check = battery.check("l1_contraction").unwrap();
    assert!(!check.passed);
    let ce = check.counterexample.as_ref().unwrap();
    assert_eq!(ce["nu"], serde_json::json!([1.0, 0.0, 0.0]));
    assert!(ce["l1_after"].as_f64().unwrap() > ce["l1_before"].as_f64().unwrap());
    // only the injected case fails
    assert!(battery.checks.iter().filter(|c| !c.passed).count() == 1);
}

#[test]
fn default_battery_covers_every_invariant() {
    let battery = run_battery(DEFAULT_SEED, 1001, &Hooks::default());
    for name in [
        "tv_l1_identity",
        "l1_contraction",
        "d_monotonicity",
        "vertex_sufficiency",
        "prop1_continuity",
        "prop2_spectral",
        "telescoping_identity",
        "theorem2_desk_check",
        "fixed_point_trajectory",
        "worker_determinism",
    ] {
        let c = battery.check(name).unwrap_or_else(|| panic!("missing {name}"));
        assert!(c.passed && c.cases > 0, "{name}: {c:?}");
    }
}

#[test]
fn execute_writes_report_to_the_given_sink() {
    let cfg = RunConfig::from_cli(Cli::parse_from(["adiabat", "verify", "--grid", "51"])).unwrap();
    let (mut out, mut err) = (Vec::new(), Vec::new());
    assert_eq!(execute(&cfg, &mut out, &mut err), EXIT_OK);
    let v: serde_json::Value = serde_json::from_slice(&out).unwrap();
    assert_eq!(v["grid_points"], 51);
    assert!(err.is_empty());
}
