use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gwp"))
}

fn fixture_path(name: &str) -> PathBuf {
    [env!("CARGO_MANIFEST_DIR"), "fixtures", name].iter().collect()
}

fn fixture_json(name: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(fixture_path(name)).unwrap()).unwrap()
}

fn write_config(dir: &Path, v: &Value) -> PathBuf {
    let p = dir.join("config.json");
    fs::write(&p, v.to_string()).unwrap();
    p
}

fn simulate(config: &Path, out: &Path) -> Output {
    bin()
        .args(["simulate", "--config"])
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn quartic_fixture_runs_to_completion_with_501_records() {
    let dir = tempfile::tempdir().unwrap();
    let o = simulate(&fixture_path("quartic2d.json"), dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 501);
    let last: Vec<&str> = csv.lines().last().unwrap().split(',').collect();
    assert_eq!(last[0].parse::<f64>().unwrap(), 50.0);

    let meta: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("metadata.json")).unwrap()).unwrap();
    assert_eq!(meta["library"]["name"], "gwp");
    assert_eq!(meta["library"]["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(meta["records"], 501);
    assert_eq!(meta["config"]["hbar"], 0.005);
    assert_eq!(meta["config"]["potential"]["type"], "quartic_radial");
}

#[test]
fn header_and_initial_row_match_golden_file() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = fixture_json("quartic2d.json");
    v["t_end"] = json!(0.1);
    let o = simulate(&write_config(dir.path(), &v), dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    let golden = fs::read_to_string(
        Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/quartic2d_head.csv"),
    )
    .unwrap();
    let got: Vec<&str> = csv.lines().take(2).collect();
    let want: Vec<&str> = golden.lines().collect();
    assert_eq!(got, want);
}

#[test]
fn identical_config_gives_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = fixture_json("quartic2d.json");
    v["t_end"] = json!(5.0);
    let cfg = write_config(dir.path(), &v);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(code(&simulate(&cfg, &a)), 0);
    assert_eq!(code(&simulate(&cfg, &b)), 0);
    for f in ["trajectory.csv", "metadata.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn zero_duration_gives_the_initial_state_only() {
    let dir = tempfile::tempdir().unwrap();
    for integrator in ["variational_splitting", "hagedorn_verlet", "rk4_full"] {
        let mut v = fixture_json("quartic2d.json");
        v["t_end"] = json!(0.0);
        v["integrator"] = json!(integrator);
        let o = simulate(&write_config(dir.path(), &v), dir.path());
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        let csv = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
        let rows: Vec<&str> = csv.lines().collect();
        assert_eq!(rows.len(), 2, "{integrator}");
        let vals: Vec<f64> = rows[1].split(',').map(|s| s.parse().unwrap()).collect();
        let want = [0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 0.5, 0.5, 1.0, 1.0, 0.5, 0.5, 1.0];
        for (k, w) in want.iter().enumerate() {
            assert!((vals[k] - w).abs() < 1e-14, "{integrator} column {k}: {}", vals[k]);
        }
    }
}

#[test]
fn bad_configs_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let mut unknown = fixture_json("quartic2d.json");
    unknown["extra"] = json!(true);
    let mut not_spd = fixture_json("quartic2d.json");
    not_spd["initial"]["B"] = json!([[1.0, 2.0], [2.0, 1.0]]);
    let mut zero_hbar_full = fixture_json("quartic2d.json");
    zero_hbar_full["integrator"] = json!("rk4_full");
    zero_hbar_full["hbar"] = json!(0.0);
    for v in [unknown, not_spd, zero_hbar_full] {
        let o = simulate(&write_config(dir.path(), &v), &dir.path().join("out"));
        assert_eq!(code(&o), 1, "{v}");
    }
    let o = simulate(&dir.path().join("missing.json"), dir.path());
    assert_eq!(code(&o), 1);
    let o = bin().args(["simulate", "--config"]).output().unwrap();
    assert_eq!(code(&o), 1);
    let o = bin().arg("frobnicate").output().unwrap();
    assert_eq!(code(&o), 1);
}

#[test]
fn state_invalidation_exits_2_with_step() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = fixture_json("quartic2d.json");
    v["integrator"] = json!("hagedorn_verlet");
    v["tolerances"] = json!({"hagedorn_constraint": 1e-300});
    let o = simulate(&write_config(dir.path(), &v), &dir.path().join("out"));
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    assert!(stderr(&o).contains("at step"), "{}", stderr(&o));
}

#[test]
fn sweep_writes_one_hashed_pair_per_value_independent_of_threads() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = fixture_json("quartic2d.json");
    v["t_end"] = json!(1.0);
    v["sweep"] = json!({"hbar": [0.005, 0.05, 0.5]});
    let cfg = write_config(dir.path(), &v);
    let mut listings = Vec::new();
    for threads in ["1", "3"] {
        let out = dir.path().join(format!("t{threads}"));
        let o = bin()
            .env("GWP_THREADS", threads)
            .args(["simulate", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .output()
            .unwrap();
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        let mut names: Vec<String> = fs::read_dir(&out)
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        names.sort();
        assert_eq!(names.len(), 6);
        assert!(names.iter().all(|n| n.starts_with("run-")));
        let bytes: Vec<Vec<u8>> = names.iter().map(|n| fs::read(out.join(n)).unwrap()).collect();
        listings.push((names, bytes));
    }
    assert_eq!(listings[0], listings[1]);

    let o = bin()
        .env("GWP_THREADS", "zero")
        .args(["simulate", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("bad"))
        .output()
        .unwrap();
    assert_eq!(code(&o), 1);
}

fn check(args: &[&str]) -> (i32, Value) {
    let o = bin().arg("check").args(args).output().unwrap();
    let report = serde_json::from_slice(&o.stdout).unwrap_or(Value::Null);
    (code(&o), report)
}

#[test]
fn check_suites_and_exit_codes() {
    let (c, r) = check(&["--suite", "brackets"]);
    assert_eq!(c, 0, "{r}");
    assert_eq!(r["seed"], 7);
    assert_eq!(r["passed"], true);

    let (c, r) = check(&["--suite", "noether-reduced"]);
    assert_eq!(c, 0, "{r}");

    let broken = fixture_path("broken2d.json");
    let (c, r) = check(&["--suite", "noether-reduced", "--fixture", broken.to_str().unwrap()]);
    assert_eq!(c, 3);
    assert_eq!(r["passed"], false);
    assert!(r["checks"][0]["margin"].as_f64().unwrap() < 0.0);

    let (c, _) = check(&["--suite", "no-such-suite"]);
    assert_eq!(c, 1);
}

#[test]
fn plot_columns_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = fixture_json("quartic2d.json");
    v["t_end"] = json!(2.0);
    let o = simulate(&write_config(dir.path(), &v), dir.path());
    assert_eq!(code(&o), 0);
    let csv = dir.path().join("trajectory.csv");
    let plot = |cols: &str, x: &str, out: &Path| {
        bin()
            .args(["plot", "--in"])
            .arg(&csv)
            .args(["--cols", cols, "--x", x, "--out"])
            .arg(out)
            .output()
            .unwrap()
    };
    let (a, b) = (dir.path().join("a.svg"), dir.path().join("b.svg"));
    assert_eq!(code(&plot("Jhbar_21,J0_21", "t", &a)), 0);
    assert_eq!(code(&plot("Jhbar_21,J0_21", "t", &b)), 0);
    let svg = fs::read_to_string(&a).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 2);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    let orbit = dir.path().join("orbit.svg");
    assert_eq!(code(&plot("q_2", "q_1", &orbit)), 0);
    assert_eq!(fs::read_to_string(&orbit).unwrap().matches("<polyline").count(), 1);

    assert_eq!(code(&plot("nope", "t", &dir.path().join("c.svg"))), 1);
    assert_eq!(code(&plot("q_1", "nope", &dir.path().join("c.svg"))), 1);
}
