use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lagrangian-pc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

const ADMM_C14: &str = r#"{
  "problem": {"generate": {"template": "p2-strongly-convex", "seed": 3, "dims": [6, 6], "l": 4}},
  "method": {"method": "admm", "gamma": 1.6},
  "schedule": {"kind": "maximal", "condition": "c14"},
  "iterations": 400
}"#;

const ADMM_CONSTANT: &str = r#"{
  "problem": {"generate": {"template": "p2-strongly-convex", "seed": 3, "dims": [6, 6], "l": 4}},
  "method": {"method": "admm", "gamma": 1.6},
  "schedule": {"kind": "constant", "beta": 1.0},
  "iterations": 400
}"#;

const ADMM_TOO_FAST: &str = r#"{
  "problem": {"generate": {"template": "p2-strongly-convex", "seed": 1, "dims": [6, 6], "l": 4}},
  "method": {"method": "admm", "gamma": 1.6},
  "schedule": {"kind": "linear", "delta": 5.0},
  "iterations": 50
}"#;

#[test]
fn generate_then_run_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("p1.json");
    let out = cli(&[
        "generate",
        "--template",
        "p1-qp",
        "--seed",
        "4",
        "--dims",
        "8",
        "--l",
        "3",
        "--out",
        inst.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(inst.exists());

    let cfg = write(
        dir.path(),
        "run.json",
        &format!(
            r#"{{"problem": {{"path": {:?}}}, "method": {{"method": "gpalm", "gamma": 1.0, "proximal": {{"kind": "definite"}}}},
                "schedule": {{"kind": "linear", "delta": 0.5}}, "iterations": 100, "checks": ["cc1", "cc3"]}}"#,
            inst.to_str().unwrap()
        ),
    );
    let trace = dir.path().join("t.csv");
    let out = cli(&["run", "--config", &cfg, "--trace", trace.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("0 check violation(s)"));
    let csv = fs::read_to_string(&trace).unwrap();
    assert!(csv.starts_with("k,beta_k,r_k,lagrangian_gap_ergodic"));
    assert_eq!(csv.lines().count(), 101);
}

#[test]
fn run_rates_and_insufficient_window() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c14.json", ADMM_C14);
    let trace = dir.path().join("t.csv");
    let trace = trace.to_str().unwrap();
    assert_eq!(code(&cli(&["run", "--config", &cfg, "--trace", trace])), 0);

    let out = cli(&[
        "rates",
        "--trace",
        trace,
        "--metric",
        "ergodic-feasibility",
        "--window",
        "20:400",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let slope: f64 = text
        .split("slope ")
        .nth(1)
        .and_then(|s| s.split_whitespace().next())
        .and_then(|s| s.parse().ok())
        .expect("slope printed");
    assert!(slope < -1.5, "{text}");

    let out = cli(&["rates", "--trace", trace, "--window", "10:13"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn check_reports_violations_with_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(dir.path(), "good.json", ADMM_C14);
    let out = cli(&["check", "--config", &good]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("all conditions hold"));

    let bad = write(dir.path(), "bad.json", ADMM_TOO_FAST);
    let out = cli(&["check", "--config", &bad]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("cc3"));
}

#[test]
fn compare_orders_schedules() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "a.json", ADMM_CONSTANT);
    let b = write(dir.path(), "b.json", ADMM_C14);
    let out = cli(&[
        "compare",
        "--configs",
        &a,
        &b,
        "--window",
        "10:400",
        "--json",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["entries"].as_array().unwrap().len(), 2);
    assert!(report["margin"].as_f64().unwrap() > 0.0);
}

#[test]
fn malformed_config_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "bad.json",
        r#"{"problem": {}, "iterations": 5}"#,
    );
    let trace = dir.path().join("t.csv");
    assert_eq!(
        code(&cli(&[
            "run",
            "--config",
            &cfg,
            "--trace",
            trace.to_str().unwrap()
        ])),
        2
    );
    let missing = dir.path().join("nope.json");
    assert_eq!(
        code(&cli(&["check", "--config", missing.to_str().unwrap()])),
        2
    );
}

#[test]
fn shipped_configs_load() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut n = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let spec = lagrangian_pc::bench::ExperimentSpec::load(&path).unwrap();
        spec.validate().unwrap();
        lagrangian_pc::bench::prepare(&spec).unwrap();
        n += 1;
    }
    assert_eq!(n, 5);
}
