use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn hexloop(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hexloop")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn scan_header_matches_golden_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("scan.csv");
    let r = hexloop(&[
        "scan",
        "--kind",
        "loopcount",
        "--sizes",
        "2,3",
        "--sweeps",
        "300",
        "--burnin",
        "50",
        "--chains",
        "2",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let text = fs::read_to_string(&out).unwrap();
    let golden = fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/golden/scan_header.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), golden.trim_end());
    assert_eq!(text.lines().count(), 3);
    let meta: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("scan.csv.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["rows"].as_array().unwrap().len(), 2);
    assert!(meta["rows"][0]["wall_seconds"].as_f64().is_some());
    assert!(meta["rows"][1]["log_n"].as_f64().unwrap() > 1.0);
}

#[test]
fn identical_configs_give_identical_bytes_for_any_worker_count() {
    let args = ["scan", "--kind", "crossing", "--sizes", "2,3", "--sweeps", "400", "--burnin", "40", "--chains", "3"];
    let runs: Vec<Vec<u8>> = ["1", "1", "3"]
        .iter()
        .map(|w| {
            let mut a = args.to_vec();
            a.extend(["--workers", w]);
            let r = hexloop(&a);
            assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
            r.stdout
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
    assert_eq!(runs[0], runs[2]);
    let other_seed = hexloop(&[&args[..], &["--seed", "2"]].concat());
    assert_ne!(other_seed.stdout, runs[0]);
}

#[test]
fn exit_codes() {
    assert_eq!(code(&hexloop(&["verify", "--suite", "no-such-suite"])), 2);
    assert_eq!(code(&hexloop(&["scan", "--kind", "variance", "--sizes", ""])), 2);
    assert_eq!(code(&hexloop(&["scan", "--kind", "variance", "--sizes", "8,4"])), 2);
    assert_eq!(code(&hexloop(&["scan", "--kind", "alpha", "--sizes", "2"])), 1);
    assert_eq!(code(&hexloop(&["enumerate", "--domain", "ball:3", "--what", "pairs"])), 1);
    assert_eq!(code(&hexloop(&["enumerate", "--domain", "ball:1", "--what", "trees"])), 2);
    assert_eq!(code(&hexloop(&["sample", "--domain", "ball:1", "--bc", "dobrushin", "--out", "/dev/null"])), 1);
    assert_eq!(code(&hexloop(&["sample", "--sweeps", "10", "--burnin", "10", "--out", "/dev/null"])), 2);
    assert_eq!(code(&hexloop(&["frobnicate"])), 2);
}

#[test]
fn four_arc_sampling_is_limited_to_small_domains() {
    let r = hexloop(&["sample", "--domain", "ball:6", "--bc", "four-arc:0,3,6,9", "--out", "/dev/null"]);
    assert_eq!(code(&r), 1);
    assert!(String::from_utf8_lossy(&r.stderr).contains("free faces"));
}

#[test]
fn bijection_suite_reports_ball_one() {
    let r = hexloop(&["verify", "--suite", "bijection"]);
    assert_eq!(code(&r), 0);
    let report = stdout_json(&r);
    let ball1 = report.as_array().unwrap().iter().find(|e| e["domain"] == "ball 1").unwrap();
    assert_eq!(ball1["pass"], true);
    assert_eq!(ball1["values"]["identity"], "3 = 1 + 2");
}

#[test]
fn fkg_suite_includes_failing_negative_control() {
    let r = hexloop(&["verify", "--suite", "fkg"]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let report = stdout_json(&r);
    let controls: Vec<&Value> = report.as_array().unwrap().iter().filter(|e| e["expect_pass"] == false).collect();
    assert_eq!(controls.len(), 1);
    assert_eq!(controls[0]["pass"], false);
    assert!(controls[0]["counterexample"].is_object());
}

#[test]
fn enumerate_ball_one() {
    let heights = stdout_json(&hexloop(&["enumerate", "--domain", "ball:1", "--what", "heights"]));
    assert_eq!(heights["count"], 3);
    assert_eq!(heights["records"].as_array().unwrap().len(), 3);
    let loops = stdout_json(&hexloop(&["enumerate", "--domain", "ball:1", "--what", "loops"]));
    assert_eq!(loops["records"].as_array().unwrap().len(), 2);
    assert_eq!(loops["z"], "3");
    let pairs = stdout_json(&hexloop(&["enumerate", "--domain", "ball:1", "--what", "pairs", "--bc", "pm"]));
    assert_eq!(pairs["count"], 6);
}

#[test]
fn sample_spool_has_expected_records_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.bin"), dir.path().join("b.bin"));
    for p in [&a, &b] {
        let r = hexloop(&[
            "sample",
            "--domain",
            "ball:2",
            "--sweeps",
            "10000",
            "--burnin",
            "1000",
            "--thin",
            "10",
            "--chains",
            "2",
            "--out",
            path_str(p),
        ]);
        assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
        assert_eq!(stdout_json(&r)["records"], 1800);
    }
    let bytes = fs::read(&a).unwrap();
    assert_eq!(bytes, fs::read(&b).unwrap());
    let records = hexloop::mcmc::read_spool(&bytes).unwrap();
    assert_eq!(records.len(), 2 * 900);
    assert!(records.iter().all(|r| r.len() == 19));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("run.conf");
    fs::write(&conf, "# ball one\ndomain = ball:1\nwhat = loops\n").unwrap();
    let from_file = stdout_json(&hexloop(&["enumerate", "--config", path_str(&conf)]));
    assert_eq!(from_file["count"], 2);
    let overridden = stdout_json(&hexloop(&["enumerate", "--config", path_str(&conf), "--what", "heights"]));
    assert_eq!(overridden["what"], "heights");
    fs::write(&conf, "colour = red\n").unwrap();
    assert_eq!(code(&hexloop(&["enumerate", "--config", path_str(&conf)])), 2);
}

#[test]
fn variance_scan_increases_with_size() {
    let r = hexloop(&[
        "scan",
        "--kind",
        "variance",
        "--sizes",
        "4,8,16,32",
        "--sweeps",
        "40000",
        "--burnin",
        "2000",
        "--chains",
        "4",
        "--format",
        "json",
    ]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let rows = stdout_json(&r);
    let est: Vec<f64> = rows.as_array().unwrap().iter().map(|row| row["estimate"].as_f64().unwrap()).collect();
    assert_eq!(est.len(), 4);
    assert!(est.windows(2).all(|w| w[0] < w[1]), "{est:?}");
}

#[test]
fn circuit_scan_reports_floor() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("circuit.csv");
    let r = hexloop(&[
        "scan",
        "--kind",
        "circuit",
        "--sizes",
        "4,8",
        "--sweeps",
        "4000",
        "--burnin",
        "500",
        "--chains",
        "2",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let text = fs::read_to_string(&out).unwrap();
    let est: Vec<f64> = text.lines().skip(1).map(|l| l.rsplit(',').nth(3).unwrap().parse().unwrap()).collect();
    assert_eq!(est.len(), 2);
    assert!(est.iter().all(|p| (0.0..=1.0).contains(p)));
    let meta: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("circuit.csv.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["min_estimate"].as_f64().unwrap(), est.iter().copied().fold(f64::INFINITY, f64::min));
    assert!(text.lines().skip(1).all(|l| l.contains(",pm,0.5,")));
}
