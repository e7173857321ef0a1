use std::fs;
use std::path::Path;
use std::process::Command;

use dephaser::cli::{
    cmd_bound, cmd_evolve, cmd_rates, cmd_verify, BoundTarget, ChannelInput, InitialState, OperatorInput, Scenario,
    VerifyOptions,
};
use dephaser::presets::{PresetName, PresetSpec};
use dephaser::register::BasisState;
use dephaser::{ComplexMatrix, Error, Tolerances};

fn tol() -> Tolerances {
    Tolerances::default()
}

fn bs(s: &str) -> BasisState {
    s.parse().unwrap()
}

fn preset(name: PresetName, rates: Vec<f64>, state: &str, t_max: f64) -> Scenario {
    Scenario::from_preset(&PresetSpec::new(name, 2, rates), InitialState::Named(state.into()), t_max).unwrap()
}

fn example1(state: &str) -> Scenario {
    preset(PresetName::LocalProjectors, vec![1.0, 1.0], state, 2.0)
}

fn example2(state: &str) -> Scenario {
    preset(PresetName::CollectiveUpdown, vec![1.0], state, 2.0)
}

fn example3(state: &str) -> Scenario {
    preset(PresetName::SplitUpdown, vec![1.0], state, 2.0)
}

fn off_diagonal_scenario() -> Scenario {
    Scenario {
        n_qubits: 1,
        hamiltonian: None,
        channels: vec![ChannelInput {
            gamma: 1.0,
            operator: OperatorInput::Matrix(vec![vec![[0.0, 0.0], [1.0, 0.0]], vec![[0.0, 0.0], [0.0, 0.0]]]),
        }],
        initial_state: InitialState::Named("u".into()),
        t_max: 1.0,
        steps: None,
        track: vec![],
    }
}

#[test]
fn rates_example2_row() {
    let table = cmd_rates(&example2("phi_plus").build(&tol()).unwrap(), &tol()).unwrap();
    let csv = table.to_csv();
    assert!(csv.starts_with("i,j,gamma,delta,omega\n"));
    assert!(csv.lines().any(|l| l == "uu,dd,2.0,0.0,0.0"));
    assert_eq!(csv.lines().count(), 1 + 16);
}

#[test]
fn rates_identity_channel_is_all_zero() {
    let mut s = example2("phi_plus");
    s.channels = vec![ChannelInput {
        gamma: 1.0,
        operator: OperatorInput::Diagonal(vec![[1.0, 0.0]; 4]),
    }];
    let table = cmd_rates(&s.build(&tol()).unwrap(), &tol()).unwrap();
    assert!(table.entries.iter().all(|e| e.gamma == 0.0 && e.delta == 0.0 && e.omega == 0.0));
}

#[test]
fn rates_refuses_off_diagonal() {
    let err = cmd_rates(&off_diagonal_scenario().build(&tol()).unwrap(), &tol()).unwrap_err();
    match err {
        Error::NotPopulationPreserving(report) => {
            assert!(!report.verdict);
            assert!(report.structural_witness.is_some());
            assert!(report.leakage_witness.unwrap().rate.abs() > 0.0);
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn evolve_phi_plus_under_example2() {
    let mut s = example2("phi_plus");
    s.steps = Some(2000);
    s.track = vec![(bs("uu"), bs("dd"))];
    let out = cmd_evolve(&s.build(&tol()).unwrap(), &tol()).unwrap();
    let fit = &out.report.fits[0];
    assert!((fit.fit.gamma_hat - 2.0).abs() <= 1e-3);
    assert!(fit.analytic.as_ref().unwrap().within_tolerance);
    assert!(out.report.is_consistent());
    assert!(out.report.preservation.verdict);
}

#[test]
fn evolve_psi_plus_is_decoherence_free_under_example2() {
    let out = cmd_evolve(&example2("psi_plus").build(&tol()).unwrap(), &tol()).unwrap();
    assert_eq!(out.tracked, vec![(bs("ud"), bs("du"))]);
    assert!(out.report.fits[0].fit.gamma_hat.abs() <= 1e-6);
}

#[test]
fn evolve_psi_plus_under_example1() {
    let out = cmd_evolve(&example1("psi_plus").build(&tol()).unwrap(), &tol()).unwrap();
    assert!((out.report.fits[0].fit.gamma_hat - 1.0).abs() <= 1e-3);
    assert!(out.report.is_consistent());
}

#[test]
fn evolve_without_rate_table_for_general_operators() {
    let mut s = off_diagonal_scenario();
    s.initial_state = InitialState::Amplitudes {
        amplitudes: vec![[1.0, 0.0], [1.0, 0.0]],
    };
    let out = cmd_evolve(&s.build(&tol()).unwrap(), &tol()).unwrap();
    assert!(out.report.rate_table.is_none());
    assert!(!out.report.preservation.verdict);
    assert!(out.report.fits[0].analytic.is_none());
    assert!(!out.report.fits_csv().contains("gamma_analytic"));
}

#[test]
fn evolve_rejects_too_few_steps() {
    let mut s = example2("phi_plus");
    s.steps = Some(3);
    assert!(matches!(
        cmd_evolve(&s.build(&tol()).unwrap(), &tol()),
        Err(Error::StepTooLarge { .. })
    ));
}

#[test]
fn trajectory_csv_header() {
    let out = cmd_evolve(&example2("phi_plus").build(&tol()).unwrap(), &tol()).unwrap();
    let csv = out.trajectory_csv().unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "t,re(rho_uu_dd),im(rho_uu_dd),abs(rho_uu_dd)");
    assert_eq!(
        lines.next().unwrap(),
        "0.00000000000e0,5.00000000000e-1,0.00000000000e0,5.00000000000e-1"
    );
}

#[test]
fn bound_examples() {
    let ex2 = cmd_bound(&example2("phi_plus").build(&tol()).unwrap(), &BoundTarget::Ghz, &tol()).unwrap();
    assert_eq!((ex2.bound.lhs, ex2.bound.rhs, ex2.bound.tight), (2.0, 2.0, true));
    assert!(ex2.equality_condition);
    assert_eq!(ex2.path, vec![bs("dd"), bs("ud"), bs("uu")]);

    let ex3 = cmd_bound(&example3("phi_plus").build(&tol()).unwrap(), &BoundTarget::Ghz, &tol()).unwrap();
    assert_eq!((ex3.bound.lhs, ex3.bound.rhs, ex3.bound.tight), (1.0, 2.0, false));
    assert!(!ex3.equality_condition);

    let same = cmd_bound(
        &example3("phi_plus").build(&tol()).unwrap(),
        &BoundTarget::Pair(bs("ud"), bs("ud")),
        &tol(),
    )
    .unwrap();
    assert_eq!((same.bound.lhs, same.bound.rhs), (0.0, 0.0));
    assert!(same.bound.rhs.is_sign_positive());
}

#[test]
fn bound_refuses_off_diagonal() {
    let err = cmd_bound(&off_diagonal_scenario().build(&tol()).unwrap(), &BoundTarget::Ghz, &tol()).unwrap_err();
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn verify_zero_trials_is_empty() {
    let summary = cmd_verify(
        &VerifyOptions {
            trials: 0,
            ..Default::default()
        },
        &tol(),
    )
    .unwrap();
    assert_eq!(summary.dissipator_oracle.instances, 0);
    assert_eq!(summary.population_preservation.mutants, 0);
    assert_eq!(summary.chain_bound.trials, 0);
}

#[test]
fn verify_default_run_passes() {
    let summary = cmd_verify(&VerifyOptions::default(), &tol()).unwrap();
    assert_eq!(summary.chain_bound.violations, 0);
    assert_eq!(summary.chain_bound.mismatches, 0);
    assert_eq!(summary.chain_bound_equal_steps.tight, summary.chain_bound_equal_steps.trials);
    let p = summary.population_preservation;
    assert_eq!(p.detected, p.mutants);
    assert!(p.mutants > 0);
}

#[test]
fn scenario_round_trip_for_presets() {
    for s in [example1("ghz"), example2("phi_minus"), example3("dd")] {
        let text = s.to_json().unwrap();
        assert_eq!(Scenario::from_json(&text).unwrap(), s);
    }
    let local = ComplexMatrix::from_real_diagonal(&[1.0, 1.0, 0.0, 0.0]);
    let sys = example1("ghz").build(&tol()).unwrap();
    assert_eq!(sys.channels[0].operator(), &local);
}

fn run_bin(dir: &Path, args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_dephaser"))
        .args(args)
        .current_dir(dir)
        .env_remove("DEPHASER_TOL")
        .output()
        .unwrap();
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap())
}

#[test]
fn binary_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path();
    let mut s = example2("phi_plus");
    s.steps = Some(2000);
    fs::write(path.join("ex2.json"), s.to_json().unwrap()).unwrap();
    fs::write(path.join("bad.json"), off_diagonal_scenario().to_json().unwrap()).unwrap();

    let (code, out) = run_bin(path, &["presets"]);
    assert_eq!(code, 0);
    for p in PresetName::ALL {
        assert!(out.contains(p.as_str()));
    }

    let (code, out) = run_bin(path, &["rates", "--scenario", "ex2.json"]);
    assert_eq!(code, 0);
    assert!(out.contains("uu,dd,2.0,0.0,0.0"));

    let (code, _) = run_bin(path, &["evolve", "--scenario", "ex2.json", "--out", "run"]);
    assert_eq!(code, 0);
    for f in ["trajectory.csv", "fits.csv", "report.json"] {
        assert!(path.join("run").join(f).exists(), "{f}");
    }
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(path.join("run/report.json")).unwrap()).unwrap();
    assert_eq!(report["preservation"]["verdict"], true);

    let (code, out) = run_bin(path, &["bound", "--scenario", "ex2.json", "--pair", "dd,uu"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["bound"]["tight"], true);

    let (code, out) = run_bin(path, &["rates", "--scenario", "bad.json"]);
    assert_eq!(code, 2);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["verdict"], false);

    let (code, _) = run_bin(path, &["rates", "--scenario", "missing.json"]);
    assert_eq!(code, 1);

    let (code, out) = run_bin(path, &["verify", "--trials", "0"]);
    assert_eq!(code, 0);
    assert!(out.contains("\"instances\": 0"));
}

#[test]
fn binary_honours_tolerance_override() {
    let dir = tempfile::tempdir().unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_dephaser"))
        .args(["verify", "--trials", "0"])
        .current_dir(dir.path())
        .env("DEPHASER_TOL", "-1")
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(2));
}
