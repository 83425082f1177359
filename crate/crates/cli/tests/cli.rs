use std::path::Path;
use std::process::Command;

use hyperfront_cli::output::{read_sidecar, read_timeseries, write_timeseries};
use hyperfront_cli::run::{run, Outcome};
use hyperfront_cli::scenario::{load_scenario, parse_scenario, Physics};
use hyperfront_cli::ScenarioError;

fn sample(name: &str) -> String {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name);
    std::fs::read_to_string(path).unwrap()
}

const PISTON: &str = r#"
family = "piston"

[numerics]
cells = 64
end_time = 0.1

[physics]
mass = 2.0
stiffness = 50.0
density = 1000.0
gravity = 9.81
rest_depth = 0.5
length = 10.0
"#;

#[test]
fn empty_text_is_a_parse_error() {
    match load_scenario("") {
        Err(ScenarioError::Parse { line, .. }) => assert_eq!(line, 1),
        other => panic!("expected a parse error, got {other:?}"),
    }
}

#[test]
fn parse_errors_carry_the_line() {
    let text = "family = \"ibvp\"\n\n[numerics]\ncells = \"many\"\nend_time = 1.0\n";
    match parse_scenario(text) {
        Err(ScenarioError::Parse { line, .. }) => assert_eq!(line, 4),
        other => panic!("expected a parse error, got {other:?}"),
    }
}

#[test]
fn piston_equilibrium_offset_is_derived() {
    let scn = load_scenario(PISTON).unwrap();
    let Physics::Piston(p) = &scn.physics else { panic!("not a piston scenario") };
    let expected = 1000.0 * 9.81 * 0.25 / (2.0 * 50.0);
    assert!((p.equilibrium_offset.unwrap() - expected).abs() <= 1e-12 * expected);
}

#[test]
fn binary_echoes_the_piston_offset() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("piston.toml");
    std::fs::write(&path, PISTON).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_hyperfront")).arg(&path).arg("--out").arg(dir.path()).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("equilibrium offset x_eq - l0 = 2.4525"), "{stdout}");
    assert!(dir.path().join("piston.csv").exists());
    assert!(dir.path().join("piston.json").exists());
}

fn incompatible_contact(strict: bool) -> String {
    sample("contact_linear.toml")
        .replace("interface_value = [0.0, 0.0]", "interface_value = [0.05, 0.0]")
        .replace("c0 = 1e-3", &format!("c0 = 1e-3\nstrict_compat = {strict}"))
}

#[test]
fn strict_mode_refuses_incompatible_contact_corner() {
    match load_scenario(&incompatible_contact(true)) {
        Err(ScenarioError::Validation(msg)) => {
            assert!(msg.contains("order-0 compatibility residual"), "{msg}");
            assert!(msg.contains("5e-2"), "{msg}");
        }
        other => panic!("expected a validation error, got {other:?}"),
    }
    assert!(load_scenario(&incompatible_contact(false)).is_ok());
}

#[test]
fn strict_flag_on_the_command_line_refuses_too() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("contact.toml");
    std::fs::write(&path, incompatible_contact(false)).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_hyperfront"))
        .arg(&path)
        .arg("--strict-compat")
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("order-0"));
}

#[test]
fn zero_end_time_gives_an_empty_series() {
    let text = sample("ibvp_pulse.toml").replace("end_time = 1.0", "end_time = 0.0");
    let scn = load_scenario(&text).unwrap();
    let record = run(&scn);
    assert!(record.rows.is_empty());
    assert_eq!(record.outcome, Outcome::Completed);
    assert_eq!(record.outcome.exit_code(), 0);

    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("empty.csv");
    write_timeseries(&record, &csv).unwrap();
    assert_eq!(std::fs::read_to_string(&csv).unwrap(), "t,mass,right_zeta\n");
    let back = read_timeseries(&csv).unwrap();
    assert_eq!(back.columns, record.columns);
    assert!(back.rows.is_empty());
}

#[test]
fn identical_runs_are_bit_identical() {
    let scn = load_scenario(&sample("transmission_step.toml")).unwrap();
    let a = run(&scn);
    let b = run(&scn);
    assert_eq!(a.rows.len(), b.rows.len());
    for (ra, rb) in a.rows.iter().zip(&b.rows) {
        for (x, y) in ra.iter().zip(rb) {
            assert_eq!(x.map(f64::to_bits), y.map(f64::to_bits));
        }
    }
    let dir = tempfile::tempdir().unwrap();
    write_timeseries(&a, &dir.path().join("a.csv")).unwrap();
    write_timeseries(&b, &dir.path().join("b.csv")).unwrap();
    let read = |n: &str| std::fs::read(dir.path().join(n)).unwrap();
    assert_eq!(read("a.csv"), read("b.csv"));
    assert_eq!(read("a.json"), read("b.json"));
}

#[test]
fn shock_series_has_front_columns_on_cadence() {
    let mut text = sample("shock_stationary.toml");
    text.push_str(
        "\n[[outputs]]\nquantity = \"xbar\"\n\n[[outputs]]\nquantity = \"chi\"\ncadence = 3\n\n[[outputs]]\nquantity = \"phi_residual\"\ncadence = 3\n",
    );
    let scn = load_scenario(&text).unwrap();
    let record = run(&scn);
    assert_eq!(record.columns, ["t", "xbar", "chi", "phi_residual"]);
    assert_eq!(record.outcome, Outcome::Completed);
    assert!(record.rows.len() > 10);
    assert!(record.rows.windows(2).all(|w| w[0][0].unwrap() < w[1][0].unwrap()));
    for (k, row) in record.rows.iter().enumerate().skip(1).take(record.rows.len() - 2) {
        assert!(row[1].is_some());
        assert_eq!(row[2].is_some(), k % 3 == 0, "row {k}");
        assert_eq!(row[3].is_some(), k % 3 == 0, "row {k}");
    }
    let last = record.rows.last().unwrap();
    assert!(last.iter().all(Option::is_some));
    assert!(last[3].unwrap() <= 1e-10);
}

#[test]
fn csv_round_trip_keeps_every_digit() {
    let scn = load_scenario(&sample("piston_equilibrium.toml")).unwrap();
    let record = run(&scn);
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("nested").join("piston.csv");
    write_timeseries(&record, &csv).unwrap();
    let back = read_timeseries(&csv).unwrap();
    assert_eq!(back.columns, record.columns);
    assert_eq!(back.rows.len(), record.rows.len());
    for (ra, rb) in record.rows.iter().zip(&back.rows) {
        for (x, y) in ra.iter().zip(rb) {
            assert_eq!(x.map(f64::to_bits), y.map(f64::to_bits));
        }
    }
    let sidecar = read_sidecar(&csv).unwrap();
    assert_eq!(sidecar.scenario, scn);
    assert_eq!(sidecar.version, env!("CARGO_PKG_VERSION"));
    assert!(sidecar.summary.contains_key("equilibrium_offset"));
}

#[test]
fn every_requested_quantity_gets_a_column() {
    for name in [
        "ibvp_pulse.toml",
        "kinematic_paddle.toml",
        "contact_linear.toml",
        "transmission_step.toml",
        "shock_stationary.toml",
        "piston_equilibrium.toml",
        "floating_free.toml",
    ] {
        let text = sample(name);
        let mut scn = load_scenario(&text).unwrap();
        scn.numerics.end_time = scn.numerics.end_time.min(0.05);
        let record = run(&scn);
        assert_eq!(record.outcome, Outcome::Completed, "{name}");
        let mut expected = vec!["t".to_string()];
        expected.extend(scn.outputs.iter().map(|o| o.quantity.clone()));
        assert_eq!(record.columns, expected, "{name}");
        let first = &record.rows[0];
        assert!(first.iter().all(|v| v.is_some_and(f64::is_finite)), "{name}: {first:?}");
    }
}

#[test]
fn unknown_quantity_is_rejected() {
    let text = format!("{}\n[[outputs]]\nquantity = \"chi\"\n", sample("ibvp_pulse.toml"));
    match load_scenario(&text) {
        Err(ScenarioError::Validation(msg)) => assert!(msg.contains("`chi`"), "{msg}"),
        other => panic!("expected a validation error, got {other:?}"),
    }
}

#[test]
fn too_few_cells_are_rejected() {
    let text = sample("ibvp_pulse.toml").replace("cells = 200", "cells = 8");
    assert!(matches!(load_scenario(&text), Err(ScenarioError::Validation(_))));
}

#[test]
fn supercritical_piston_reports_regime_loss() {
    let text = PISTON.replace("length = 10.0", "length = 10.0\nvelocity = 5.0\nposition = 0.0");
    let scn = load_scenario(&text).unwrap();
    let record = run(&scn);
    assert!(matches!(record.outcome, Outcome::RegimeLoss { .. }), "{:?}", record.outcome);
    assert_eq!(record.outcome.exit_code(), 3);
    assert_eq!(record.rows.len(), 1);
    assert!(!record.diagnostics.is_empty());
}

#[test]
fn batch_runs_every_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let scenarios = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    let out = Command::new(env!("CARGO_BIN_EXE_hyperfront"))
        .arg("batch")
        .arg(scenarios.join("shock_stationary.toml"))
        .arg(scenarios.join("contact_linear.toml"))
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("shock_stationary.csv").exists());
    assert!(dir.path().join("contact_linear.csv").exists());
}
