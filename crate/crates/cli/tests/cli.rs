use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn fuzzyqm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fuzzyqm"))
        .args(args)
        .env_remove("FUZZYQM_SEED")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("JSON report")
}

#[test]
fn reconstruct_sic_passes() {
    let out = fuzzyqm(&["reconstruct", "--dim", "2", "--sic", "--trials", "50", "--seed", "7"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["command"], "reconstruct");
    assert_eq!(r["pass"], true);
    assert!(r["results"]["max_error"].as_f64().unwrap() <= 1e-10);
    assert!(r.get("timestamp").is_some());
}

#[test]
fn reconstruct_random_frame_in_dimension_five() {
    let out = fuzzyqm(&["reconstruct", "--dim", "5", "--trials", "1"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["results"]["frame"], "random");
}

#[test]
fn configuration_errors_exit_one() {
    for args in [
        &["reconstruct", "--dim", "1"][..],
        &["reconstruct", "--dim", "17"],
        &["reconstruct", "--dim", "3", "--sic"],
        &["update-verify", "--trials", "0"],
        &["update-verify", "--dim", "4", "--atoms", "2"],
        &["negativity", "--state", "sideways:0"],
        &["negativity", "--state", "antipodal:9"],
        &["bell", "--angles", "0,90"],
        &["bell", "--scenario", "/nonexistent/scenario.json"],
        &["smearing", "--tol", "-1"],
        &["no-such-command"],
    ] {
        assert_eq!(fuzzyqm(args).status.code(), Some(1), "{args:?}");
    }
}

#[test]
fn tolerance_breach_exits_two() {
    let out = fuzzyqm(&["update-verify", "--dim", "3", "--trials", "3", "--tol", "1e-30"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["pass"], false);
}

#[test]
fn negativity_antipodal_state() {
    let out = fuzzyqm(&["negativity", "--state", "antipodal:0", "--samples", "200"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    let min = r["results"]["requested_state"]["min"].as_f64().unwrap();
    assert!((min + 1.0).abs() <= 1e-10);
    assert_eq!(r["results"]["maximally_mixed"]["has_negative"], false);
    assert!(r["results"]["fraction_negative"].as_f64().unwrap() > 0.0);
}

#[test]
fn update_verify_suites() {
    for kraus in ["luders", "unitary-twirl"] {
        let out = fuzzyqm(&[
            "update-verify", "--dim", "3", "--outcomes", "4", "--trials", "100", "--seed", "1", "--kraus", kraus,
        ]);
        assert_eq!(out.status.code(), Some(0), "{kraus}");
        let res = &json(&out)["results"]["max_residuals"];
        assert!(res["resolution"].as_f64().unwrap() <= 1e-12);
        for key in ["transport", "extension", "representation"] {
            assert!(res[key].as_f64().unwrap() <= 1e-10, "{kraus} {key}");
        }
    }
}

#[test]
fn bell_variants() {
    let out = fuzzyqm(&["bell"]);
    assert_eq!(out.status.code(), Some(0));
    let chsh = &json(&out)["results"]["chsh"];
    assert!((chsh["s_quantum"].as_f64().unwrap().abs() - 2.0 * 2f64.sqrt()).abs() < 1e-9);
    assert!((chsh["s_classical_extension"].as_f64().unwrap().abs() - 2.0 * 2f64.sqrt()).abs() < 1e-9);

    for args in [&["bell", "--angles", "0,0,0,0"][..], &["bell", "--state", "product"]] {
        let out = fuzzyqm(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        let r = json(&out);
        assert!(r["results"]["chsh"]["s_quantum"].as_f64().unwrap().abs() <= 2.0 + 1e-12);
        assert_eq!(r["results"]["violation"], false);
    }

    let out = fuzzyqm(&["bell", "--angles", "0,90,45,-45"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn bell_scenario_files() {
    let dir = tempfile::tempdir().unwrap();
    let short = dir.path().join("short.json");
    std::fs::write(&short, r#"{"state": "singlet", "angles_deg": [0, 90, 45, 315]}"#).unwrap();
    assert_eq!(fuzzyqm(&["bell", "--scenario", short.to_str().unwrap()]).status.code(), Some(0));

    let full = dir.path().join("full.json");
    let scenario = fuzzyqm::experiments::ChshScenario::optimal_singlet();
    std::fs::write(&full, serde_json::to_string(&scenario).unwrap()).unwrap();
    assert_eq!(fuzzyqm(&["bell", "--scenario", full.to_str().unwrap()]).status.code(), Some(0));
}

#[test]
fn smearing_csv_has_one_row_per_sample() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("atoms.csv");
    let out = fuzzyqm(&["smearing", "--samples", "2500", "--format", "csv", "--output", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("index,weight,value"));
    assert_eq!(lines.count(), 2500);
}

#[test]
fn smearing_default_run() {
    let out = fuzzyqm(&["smearing", "--dim", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert!(r["results"]["atomic_check"]["max_error"].as_f64().unwrap() <= 1e-12);
    assert!(r["results"]["uniform_sample"]["identity_deviation"].as_f64().unwrap() <= 0.05);
}

#[test]
fn seed_falls_back_to_environment() {
    let run = |env: Option<&str>, extra: &[&str]| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_fuzzyqm"));
        cmd.args(["reconstruct", "--dim", "3", "--trials", "3", "--deterministic"]).args(extra);
        match env {
            Some(s) => cmd.env("FUZZYQM_SEED", s),
            None => cmd.env_remove("FUZZYQM_SEED"),
        };
        cmd.output().unwrap().stdout
    };
    assert_eq!(run(Some("42"), &[]), run(None, &["--seed", "42"]));
    assert_ne!(run(Some("42"), &[]), run(None, &[]));
}

#[test]
fn output_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let args = ["bell", "--deterministic"];
    let stdout = fuzzyqm(&args).stdout;
    let mut with_file = args.to_vec();
    with_file.extend(["--output", path.to_str().unwrap()]);
    let out = fuzzyqm(&with_file);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    assert_eq!(std::fs::read(&path).unwrap(), stdout);
    assert!(Path::new(&path).exists());
}

#[test]
fn deterministic_reports_have_no_timestamp() {
    let r = json(&fuzzyqm(&["reconstruct", "--sic", "--deterministic"]));
    assert!(r.get("timestamp").is_none());
    for key in ["command", "config", "results", "pass"] {
        assert!(r.get(key).is_some(), "{key}");
    }
}
