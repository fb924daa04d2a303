//! Black-box tests of the command-line binary: output formats, determinism,
//! and the stable exit codes (0 success, 2 input error, 3 numerical failure).

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_undercount"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write_dataset(dir: &Path) -> std::path::PathBuf {
    // five stages x five defoliation levels x two replicates
    let stages = ["vegetative", "bud", "blossom", "fig", "boll"];
    let mut csv = String::from("count,def,stage,rep\n");
    let mut k = 0u64;
    for rep in 0..2 {
        for (s, stage) in stages.iter().enumerate() {
            for d in 0..5 {
                let count = 4 + (k * 7 + s as u64 + d) % 9;
                csv.push_str(&format!("{count},{},{stage},{rep}\n", d as f64 * 0.25));
                k += 1;
            }
        }
    }
    let path = dir.join("toy.csv");
    std::fs::write(&path, csv).unwrap();
    path
}

#[test]
fn fit_poisson_intercept_reports_log_mean() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_dataset(dir.path());
    let out = run(&["fit", "--data", data.to_str().unwrap(), "--model", "poisson", "--predictor", "1"]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let coefs = report["coefficients"].as_array().unwrap();
    assert_eq!(coefs.len(), 1);
    assert_eq!(coefs[0]["name"], "gamma0");

    // gamma0 should be the log of the sample mean
    let csv = std::fs::read_to_string(&data).unwrap();
    let mean = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap().parse::<f64>().unwrap())
        .sum::<f64>()
        / 50.0;
    let got = coefs[0]["estimate"].as_f64().unwrap();
    assert!((got - mean.ln()).abs() < 1e-8, "gamma0 = {got}, ln(mean) = {}", mean.ln());
    assert!(report["aic"].is_number());
    assert!(report["data_sha256"].is_string());
}

#[test]
fn fit_gamma_count_report_includes_dispersion() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_dataset(dir.path());
    let out = run(&[
        "fit", "--data", data.to_str().unwrap(), "--model", "gammacount", "--predictor", "2",
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["coefficients"].as_array().unwrap().len(), 2);
    assert_eq!(report["dispersion"]["name"], "alpha");
    assert!(report["dispersion"]["estimate"].as_f64().unwrap() > 0.0);
    assert!(report["dispersion"]["p_value"].is_number());
    assert!(report["convergence"]["converged"].as_bool().unwrap());
}

#[test]
fn compare_emits_five_rows_per_model() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_dataset(dir.path());
    let out = run(&["compare", "--data", data.to_str().unwrap(), "--model", "quasipoisson"]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let rows: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 5);
    for (i, row) in rows.iter().enumerate() {
        assert_eq!(row["predictor"].as_u64().unwrap(), i as u64 + 1);
        assert!(row["dispersion"].as_f64().unwrap() > 0.0); // phi-hat
        assert!(row["deviance"].is_number());
        if i > 0 {
            assert!(row["statistic"].is_number()); // F vs previous predictor
            assert!(row["p_value"].is_number());
        }
    }
}

#[test]
fn simulate_is_deterministic_in_the_seed() {
    fn args(seed: &str) -> [&str; 11] {
        [
            "simulate", "--alpha", "2.0", "--mean-tau", "0.25", "--horizon", "200",
            "--window", "1", "--seed", seed,
        ]
    }
    let a = run(&args("42"));
    let b = run(&args("42"));
    let c = run(&args("43"));
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout, "same seed must give identical bytes");
    assert_ne!(a.stdout, c.stdout, "different seed should give different draws");
}

#[test]
fn pmf_table_sums_to_one_with_tail() {
    let out = run(&["pmf", "--alpha", "5.112", "--eta", "2.2342", "--nmax", "40"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "n,probability");
    let mut total = 0.0f64;
    let mut tail_seen = false;
    for line in lines {
        let (key, value) = line.split_once(',').unwrap();
        let p: f64 = value.parse().unwrap();
        assert!(p >= 0.0);
        total += p;
        if key == "tail" {
            tail_seen = true;
        }
    }
    assert!(tail_seen, "expected a trailing tail-mass row");
    assert!((total - 1.0).abs() < 1e-10, "total mass = {total}");
}

#[test]
fn profile_reports_both_interval_kinds() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_dataset(dir.path());
    let trace_path = dir.path().join("trace.csv");
    let out = run(&[
        "profile", "--data", data.to_str().unwrap(), "--predictor", "1", "--param", "alpha",
        "--out", trace_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["param"], "alpha");
    assert!(summary["ci"]["lower"].is_number());
    assert!(summary["ci"]["upper"].is_number());
    assert!(summary["wald_ci"][0].is_number());
    let trace = std::fs::read_to_string(&trace_path).unwrap();
    assert!(trace.starts_with("value,profile_loglik\n"));
    assert!(trace.lines().count() > 20);
}

#[test]
fn predict_covers_all_stages_on_the_unit_grid() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_dataset(dir.path());
    let out = run(&[
        "predict", "--data", data.to_str().unwrap(), "--model", "poisson", "--predictor", "3",
        "--step", "0.25",
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    // header + 5 stages x 5 grid points
    assert_eq!(text.lines().count(), 26);
    for line in text.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        let (lower, mean, upper): (f64, f64, f64) =
            (fields[5].parse().unwrap(), fields[4].parse().unwrap(), fields[6].parse().unwrap());
        assert!(lower <= mean && mean <= upper);
    }
}

#[test]
fn input_errors_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_dataset(dir.path());

    // missing file
    let out = run(&["fit", "--data", "/nonexistent.csv", "--model", "poisson", "--predictor", "1"]);
    assert_eq!(out.status.code(), Some(2));

    // unknown model name
    let out = run(&["fit", "--data", data.to_str().unwrap(), "--model", "weibull", "--predictor", "1"]);
    assert_eq!(out.status.code(), Some(2));

    // malformed CSV reports the offending line
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "count,def,stage,rep\n5,0.25,vegetative,1\nx,0.5,bud,1\n").unwrap();
    let out = run(&["fit", "--data", bad.to_str().unwrap(), "--model", "poisson", "--predictor", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    // unknown profile parameter
    let out = run(&[
        "profile", "--data", data.to_str().unwrap(), "--predictor", "1", "--param", "gamma9",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn numerical_failures_exit_with_code_3() {
    // def identically zero makes the predictor-2 design singular
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from("count,def,stage,rep\n");
    for i in 0..10 {
        csv.push_str(&format!("{},0,vegetative,{i}\n", 3 + i % 4));
    }
    let path = dir.path().join("degenerate.csv");
    std::fs::write(&path, csv).unwrap();
    let out = run(&["fit", "--data", path.to_str().unwrap(), "--model", "poisson", "--predictor", "2"]);
    assert_eq!(out.status.code(), Some(3));
}
