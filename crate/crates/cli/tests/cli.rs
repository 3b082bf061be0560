use std::path::Path;
use std::process::{Command, Output};

fn drbound(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_drbound")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn write_state(dir: &Path, name: &str, da: usize, db: usize, diag: &[f64]) -> String {
    let n = da * db;
    let rows: Vec<String> = (0..n)
        .map(|i| {
            let cells: Vec<String> = (0..n).map(|j| format!("[{}, 0]", if i == j { diag[i] } else { 0.0 })).collect();
            format!("[{}]", cells.join(", "))
        })
        .collect();
    let path = dir.join(name);
    std::fs::write(&path, format!("{{\"dA\": {da}, \"dB\": {db}, \"matrix\": [{}]}}", rows.join(",\n"))).unwrap();
    path.to_str().unwrap().to_string()
}

fn json_of(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

#[test]
fn sweep_three_point_grid() {
    let o = drbound(&["sweep-isotropic", "--d", "2", "--p-start", "0", "--p-stop", "1", "--p-step", "0.5"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = String::from_utf8(o.stdout).unwrap();
    let rows: Vec<Vec<&str>> = csv.lines().map(|l| l.split(',').collect()).collect();
    assert_eq!(rows[0], ["p", "holevo_lower", "upsilonA", "upsilonB", "upper_min", "fw_gap_A", "fw_gap_B", "status"]);
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[1][0..2], ["0", "1"]);
    assert_eq!(rows[2][0..2], ["0.5", "0.188721876"]);
    assert_eq!(rows[3][0..2], ["1", "0"]);
    let upper_at_one: f64 = rows[3][4].parse().unwrap();
    assert!(upper_at_one <= 1e-3);
    assert!(rows[1..].iter().all(|r| r[7] == "ok"));
}

#[test]
fn sweep_oversized_step_gives_one_row() {
    let o = drbound(&["sweep-isotropic", "--p-start", "0.2", "--p-stop", "0.4", "--p-step", "0.5", "--methods", "holevo"]);
    assert_eq!(code(&o), 0);
    let csv = String::from_utf8(o.stdout).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert!(csv.lines().nth(1).unwrap().starts_with("0.2,"));
}

#[test]
fn sweep_is_byte_identical_across_runs_and_job_counts() {
    let dir = tempfile::tempdir().unwrap();
    let paths: Vec<String> = (0..3).map(|i| dir.path().join(format!("s{i}.csv")).to_str().unwrap().to_string()).collect();
    for (i, jobs) in ["1", "1", "3"].iter().enumerate() {
        let o = drbound(&["sweep-isotropic", "--p-step", "0.25", "--methods", "upsilonA,upsilonB,holevo,betaDiag", "--jobs", jobs, "--out", &paths[i]]);
        assert_eq!(code(&o), 0);
    }
    let a = std::fs::read(&paths[0]).unwrap();
    assert_eq!(a, std::fs::read(&paths[1]).unwrap());
    assert_eq!(a, std::fs::read(&paths[2]).unwrap());
    let header = String::from_utf8(a).unwrap();
    assert!(header.lines().next().unwrap().ends_with(",status,beta_sigmaA,beta_sigmaB"));
}

#[test]
fn sweep_writes_json_and_gnuplot() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("s.csv");
    let gp = dir.path().join("s.gp");
    let o = drbound(&[
        "sweep-isotropic", "--p-step", "0.5", "--methods", "holevo",
        "--out", csv.to_str().unwrap(), "--gnuplot", gp.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let script = std::fs::read_to_string(&gp).unwrap();
    assert!(script.contains(csv.to_str().unwrap()));
    assert!(script.contains("using 1:5"));

    let o = drbound(&["sweep-isotropic", "--p-step", "0.5", "--methods", "holevo", "--format", "json"]);
    let v = json_of(&o);
    assert_eq!(v["rows"].as_array().unwrap().len(), 3);
    assert_eq!(v["rows"][0]["holevo_lower"], 1.0);
}

#[test]
fn sweep_rejects_bad_input() {
    assert_eq!(code(&drbound(&["sweep-isotropic", "--methods", "gamma"])), 1);
    assert_eq!(code(&drbound(&["sweep-isotropic", "--p-start", "0.8", "--p-stop", "0.2"])), 1);
    assert_eq!(code(&drbound(&["sweep-isotropic", "--d", "1"])), 1);
    assert_eq!(code(&drbound(&["sweep-isotropic", "--no-such-flag"])), 1);
}

#[test]
fn bound_on_classically_correlated_state() {
    let dir = tempfile::tempdir().unwrap();
    let phi = write_state(dir.path(), "phi.json", 2, 2, &[0.5, 0.0, 0.0, 0.5]);
    let o = drbound(&["bound", "--state", &phi, "--method", "upsilonA"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json_of(&o);
    assert!((v["valueBits"].as_f64().unwrap() - 1.0).abs() < 5e-3);
    assert_eq!(v["certificate"]["sigmas"][0]["sigmaSha256"].as_str().unwrap().len(), 64);
    assert!(v["stats"]["elapsedMs"].as_f64().is_some());

    let o = drbound(&["bound", "--state", &phi, "--method", "betaA"]);
    assert!((json_of(&o)["value"].as_f64().unwrap() - 2.0).abs() < 1e-5);
    let o = drbound(&["bound", "--state", &phi, "--method", "gamma"]);
    assert!((json_of(&o)["value"].as_f64().unwrap() - 2.0).abs() < 1e-5);
}

#[test]
fn bound_on_product_state() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    // diag(0.7, 0.3) (x) diag(0.4, 0.6)
    let prod = write_state(dir.path(), "prod.json", 2, 2, &[0.28, 0.42, 0.12, 0.18]);
    let o = drbound(&["bound", "--state", &prod, "--method", "min", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(v["valueBits"].as_f64().unwrap().abs() < 1e-4);

    let o = drbound(&["bound", "--state", &prod, "--method", "oneshot", "--eps", "0.5", "--alpha", "2"]);
    assert_eq!(code(&o), 0);
    let v = json_of(&o);
    assert_eq!(v["penaltyBits"].as_f64().unwrap(), 2.0);
    assert!((v["valueBits"].as_f64().unwrap() - 2.0).abs() < 1e-4);
}

#[test]
fn bound_input_errors() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"dA": 2, "dB": 2, "matrix": [[[1, 0]]]}"#).unwrap();
    let o = drbound(&["bound", "--state", bad.to_str().unwrap(), "--method", "min"]);
    assert_eq!(code(&o), 1);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("matrix") && err.contains("bad.json"), "{err}");

    std::fs::write(&bad, "{\"dA\": 1,\n \"dB\": 1,\n \"matrix\": [[[1, 0]]],,}").unwrap();
    let o = drbound(&["bound", "--state", bad.to_str().unwrap(), "--method", "min"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));

    let missing = dir.path().join("absent.json");
    assert_eq!(code(&drbound(&["bound", "--state", missing.to_str().unwrap(), "--method", "min"])), 1);

    let ok = write_state(dir.path(), "ok.json", 1, 2, &[0.5, 0.5]);
    assert_eq!(code(&drbound(&["bound", "--state", &ok, "--method", "oneshot"])), 1);
    assert_eq!(code(&drbound(&["bound", "--state", &ok, "--method", "oneshot", "--eps", "1", "--alpha", "2"])), 1);
}

#[test]
fn property_suite_passes_on_default_seed() {
    let o = drbound(&["check-properties", "--seed", "0", "--trials", "20"]);
    let report = String::from_utf8_lossy(&o.stdout);
    assert_eq!(code(&o), 0, "{report}");
    assert!(report.contains("all properties hold"));
    assert!(report.lines().filter(|l| l.starts_with("PASS")).count() >= 20);
}

#[test]
fn property_suite_is_deterministic() {
    let a = drbound(&["check-properties", "--seed", "7", "--trials", "2", "--format", "json"]);
    let b = drbound(&["check-properties", "--seed", "7", "--trials", "2", "--format", "json"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn corrupted_certificate_is_a_violation() {
    let o = drbound(&["check-properties", "--trials", "1", "--inject-corrupted"]);
    assert_eq!(code(&o), 3);
    let report = String::from_utf8_lossy(&o.stdout);
    assert!(report.contains("FAIL injected_triple_feasible"), "{report}");
    assert!(String::from_utf8_lossy(&o.stderr).contains("injected_triple_feasible"));
}

#[test]
fn zero_trials_is_an_input_error() {
    assert_eq!(code(&drbound(&["check-properties", "--trials", "0"])), 1);
}
