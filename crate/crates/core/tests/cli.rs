mod common;

use std::path::Path;

use sharesynth::cli::{run, EXIT_OK, EXIT_USER};
use sharesynth::io::{load_dataset, save_dataset};

use common::toy_paths;

fn gen(dir: &Path, out: &str, extra: &[&str]) -> i32 {
    let (data, domain) = toy_paths();
    let mut args = vec![
        "sharesynth".to_string(),
        "gen".into(),
        "--data".into(),
        data.display().to_string(),
        "--domain".into(),
        domain.display().to_string(),
        "--rounds".into(),
        "3".into(),
        "--out".into(),
        dir.join(out).display().to_string(),
    ];
    args.extend(extra.iter().map(|s| s.to_string()));
    run(args)
}

#[test]
fn toy_file_round_trips_byte_for_byte() {
    let (data, domain) = toy_paths();
    let d = load_dataset(&data, &domain).unwrap();
    assert_eq!(d.n_rows(), 2000);
    assert_eq!(d.schema.len(), 5);
    let dir = tempfile::tempdir().unwrap();
    let copy = dir.path().join("toy.csv");
    save_dataset(&copy, &d).unwrap();
    assert_eq!(std::fs::read(&copy).unwrap(), std::fs::read(&data).unwrap());
}

#[test]
fn central_cdp_run_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let flags = ["--backend", "cdp", "--partition", "central", "--seed", "4"];
    assert_eq!(gen(dir.path(), "a.csv", &flags), EXIT_OK);
    assert_eq!(gen(dir.path(), "b.csv", &flags), EXIT_OK);
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    assert_eq!(a, std::fs::read(dir.path().join("b.csv")).unwrap());
    let (_, domain) = toy_paths();
    assert_eq!(load_dataset(&dir.path().join("a.csv"), &domain).unwrap().n_rows(), 2000);
}

#[test]
fn mpc_run_writes_metrics_and_log() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.json");
    let l = dir.path().join("log.json");
    let code = gen(
        dir.path(),
        "mpc.csv",
        &[
            "--partition",
            "vertical:2",
            "--algo",
            "mwem",
            "--metrics",
            m.to_str().unwrap(),
            "--log",
            l.to_str().unwrap(),
        ],
    );
    assert_eq!(code, EXIT_OK);
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&m).unwrap()).unwrap();
    let delta = report["workload_error"].as_f64().unwrap();
    assert!(delta > 0.0 && delta < 2.0);
    assert_eq!(report["per_query"].as_array().unwrap().len(), 15);
    assert!(report["transcript"]["messages"].as_u64().unwrap() > 0);
    let log: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&l).unwrap()).unwrap();
    assert_eq!(log["rounds"].as_array().unwrap().len(), 3);

    let (data, domain) = toy_paths();
    let out = dir.path().join("again.json");
    let code = run([
        "sharesynth",
        "metrics",
        "--real",
        data.to_str().unwrap(),
        "--synth",
        dir.path().join("mpc.csv").to_str().unwrap(),
        "--domain",
        domain.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK);
    let again: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(again["workload_error"], report["workload_error"]);
}

#[test]
fn usage_and_input_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(gen(dir.path(), "x.csv", &["--noise", "cauchy"]), EXIT_USER);
    assert_eq!(gen(dir.path(), "x.csv", &["--epsilon=-1"]), EXIT_USER);
    assert_eq!(gen(dir.path(), "x.csv", &["--partition", "horizontal:5000"]), EXIT_USER);
    assert_eq!(gen(dir.path(), "x.csv", &["--workload", "/nonexistent.json"]), EXIT_USER);
    assert_eq!(run(["sharesynth", "gen"]), EXIT_USER);
    assert_eq!(run(["sharesynth", "frobnicate"]), EXIT_USER);
    assert_eq!(run(["sharesynth", "--help"]), EXIT_OK);
    assert!(!dir.path().join("x.csv").exists());
}

#[test]
fn bench_equality_counts_are_linear_in_n() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bench.csv");
    let code = run(["sharesynth", "bench", "--n", "250,500,1000", "--qstar", "1", "--out", out.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    let mut rdr = csv::Reader::from_path(&out).unwrap();
    let header = rdr.headers().unwrap().clone();
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 3);
    let eq: Vec<u64> = rows.iter().map(|r| r[col("eq")].parse().unwrap()).collect();
    let n: Vec<u64> = rows.iter().map(|r| r[col("n")].parse().unwrap()).collect();
    for i in 0..3 {
        assert_eq!(eq[i] * n[0], eq[0] * n[i]);
        assert_eq!(rows[i][col("eq")], rows[i][col("expected_eq")]);
    }
}

#[test]
fn binary_reports_status_codes() {
    let bin = env!("CARGO_BIN_EXE_sharesynth");
    let status = std::process::Command::new(bin).arg("--version").output().unwrap();
    assert!(status.status.success());
    assert!(String::from_utf8_lossy(&status.stdout).contains(env!("CARGO_PKG_VERSION")));
    let status = std::process::Command::new(bin).args(["gen", "--rounds", "0"]).output().unwrap();
    assert_eq!(status.status.code(), Some(EXIT_USER));
}
