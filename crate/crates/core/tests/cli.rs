use std::path::{Path, PathBuf};
use std::process::Command;

use serde::de::DeserializeOwned;
use serde::Serialize;
use virtual_prior::aggregation::AggregatePrior;
use virtual_prior::calibration::CalibrationReport;
use virtual_prior::cli::{EquitableOutput, Output, PredictOutput};
use virtual_prior::posterior::MleFit;

const BIN: &str = env!("CARGO_BIN_EXE_vprior");

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn run(args: &[&str]) -> (i32, String) {
    let out = Command::new(BIN).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8(out.stderr).unwrap())
}

fn run_ok(args: &[&str]) {
    let (code, err) = run(args);
    assert_eq!(code, 0, "{args:?}: {err}");
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn calibrated(dir: &Path, expert: &str) -> PathBuf {
    let out = dir.join(format!("{expert}.json"));
    let e = fixture(&format!("{expert}.json"));
    run_ok(&["calibrate", "--expert", path_str(&e), "--mc-size", "1000", "--m-max", "10", "--out", path_str(&out)]);
    out
}

fn round_trip<T: Serialize + DeserializeOwned + PartialEq + std::fmt::Debug>(path: &Path) {
    let text = std::fs::read_to_string(path).unwrap();
    let a: Output<T> = serde_json::from_str(&text).unwrap();
    let b: Output<T> = serde_json::from_str(&serde_json::to_string(&a).unwrap()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn every_command_replays_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let table = fixture("field_returns.csv");
    let e2 = calibrated(d, "e2");
    let e1 = calibrated(d, "e1");
    let cases: Vec<(&str, Vec<String>)> = vec![
        ("calibrate", vec!["--expert".into(), path_str(&fixture("e2.json")).into(), "--mc-size".into(), "1000".into(), "--m-max".into(), "10".into()]),
        ("aggregate", vec!["--prior".into(), path_str(&e1).into(), path_str(&e2).into()]),
        ("equitable", vec!["--prior".into(), path_str(&e2).into(), "--data".into(), path_str(&table).into(), "--mc-size".into(), "2000".into()]),
        ("mle", vec!["--data".into(), path_str(&table).into()]),
        ("posterior", vec!["--prior".into(), path_str(&e2).into(), "--data".into(), path_str(&table).into(), "--samples".into(), "2000".into()]),
        ("predict", vec!["--prior".into(), path_str(&e2).into(), "--data".into(), path_str(&table).into(), "--samples".into(), "2000".into(), "--moment".into(), "1".into()]),
        ("plotdata", vec!["--report".into(), path_str(&e1).into(), "--curve".into(), "err".into()]),
    ];
    for (cmd, rest) in &cases {
        let mut outputs = Vec::new();
        let out = d.join(format!("{cmd}_0"));
        for _ in 0..2 {
            let mut args: Vec<&str> = vec![cmd];
            args.extend(rest.iter().map(String::as_str));
            args.extend(["--out", path_str(&out)]);
            run_ok(&args);
            outputs.push(std::fs::read(&out).unwrap());
        }
        assert_eq!(outputs[0], outputs[1], "{cmd} differs between runs");
        assert!(!outputs[0].is_empty());
    }
    round_trip::<CalibrationReport>(&d.join("calibrate_0"));
    round_trip::<AggregatePrior>(&d.join("aggregate_0"));
    round_trip::<EquitableOutput>(&d.join("equitable_0"));
    round_trip::<MleFit>(&d.join("mle_0"));
    round_trip::<PredictOutput>(&d.join("predict_0"));

    let csv = std::fs::read_to_string(d.join("posterior_0")).unwrap();
    let body: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(body[0], "eta,beta,mttf,predictive");
    assert_eq!(body.len(), 2001);
    assert!(body[1..].iter().all(|l| l.split(',').count() == 4 && l.split(',').all(|v| v.parse::<f64>().unwrap() > 0.0)));
}

#[test]
fn seed_changes_the_draws() {
    let dir = tempfile::tempdir().unwrap();
    let e2 = calibrated(dir.path(), "e2");
    let table = fixture("field_returns.csv");
    let draws = |seed: &str| {
        let out = dir.path().join(format!("p{seed}.csv"));
        run_ok(&["posterior", "--prior", path_str(&e2), "--data", path_str(&table), "--samples", "50", "--seed", seed, "--out", path_str(&out)]);
        std::fs::read_to_string(out).unwrap().lines().filter(|l| !l.starts_with('#')).map(String::from).collect::<Vec<_>>()
    };
    assert_ne!(draws("1"), draws("2"));
}

#[test]
fn exit_codes_follow_error_kinds() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let malformed = d.join("malformed.json");
    std::fs::write(&malformed, "{").unwrap();
    let improper = d.join("improper.json");
    std::fs::write(&improper, r#"{"m":2,"alpha":0.5,"t_alpha":250,"beta_tilde":-1,"beta0":0}"#).unwrap();
    let censored = d.join("censored.csv");
    std::fs::write(&censored, "time,event\n1,0\n2,0\n").unwrap();

    let (code, err) = run(&["equitable", "--prior", path_str(&malformed)]);
    assert_eq!(code, 3);
    let record: serde_json::Value = serde_json::from_str(err.trim()).unwrap();
    assert_eq!(record["error"]["exit_code"], 3);

    assert_eq!(run(&["equitable", "--prior", path_str(&improper)]).0, 4);
    assert_eq!(run(&["mle", "--data", path_str(&censored)]).0, 5);
    assert_eq!(run(&["mle", "--data", path_str(&d.join("missing.csv"))]).0, 6);
    assert_eq!(run(&["mle"]).0, 2);
    assert_eq!(run(&["--help"]).0, 0);
}
