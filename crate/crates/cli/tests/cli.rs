use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nonclassical"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("spawn nonclassical")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = run(dir, args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn write(dir: &Path, name: &str, body: &str) {
    fs::write(dir.join(name), body).unwrap();
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "vac.json", r#"{"type": "fock", "n": 0}"#);
    write(dir.path(), "f2.json", r#"{"type": "fock", "n": 2}"#);
    write(
        dir.path(),
        "witness.json",
        r#"{"kind": "vertices", "points": [[-0.110, -0.110], [0.121, 0.100], [0.100, 0.121], [0.331, 0.331]]}"#,
    );
    dir
}

#[test]
fn wigner_grid_of_vacuum() {
    let dir = setup();
    write(dir.path(), "grid.json", r#"{"x": {"min": -1, "max": 1, "steps": 3}, "y": {"min": -1, "max": 1, "steps": 3}}"#);
    let csv = ok(dir.path(), &["wigner", "--state", "vac.json", "--config", "grid.json"]);
    let rows: Vec<Vec<f64>> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 9);
    for r in &rows {
        let expected = (-2.0 * (r[0] * r[0] + r[1] * r[1])).exp();
        assert!((r[2] - expected).abs() < 1e-12, "{r:?}");
    }
    assert_eq!(rows[4][2], 1.0);
}

#[test]
fn wigner_points_file_reports_bad_line() {
    let dir = setup();
    write(dir.path(), "pts.csv", "x,y\n0,0\n0.5,oops\n");
    let out = run(dir.path(), &["wigner", "--state", "vac.json", "--points", "pts.csv"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line: 3"), "{err}");
}

#[test]
fn fock_two_exceeds_gaussian_bound_on_witness_points() {
    let dir = setup();
    let doc: Value =
        serde_json::from_str(&ok(dir.path(), &["test", "--state", "f2.json", "--points", "witness.json", "--format", "json"]))
            .unwrap();
    let j = doc["value"].as_f64().unwrap();
    assert!((j - 2.5485).abs() < 1e-3, "{j}");
    assert_eq!(doc["verdicts"]["exceeds_gaussian"], Value::Bool(true));
}

#[test]
fn degenerate_rectangle_and_triangle_on_vacuum() {
    let dir = setup();
    write(dir.path(), "rect.json", r#"{"kind": "rectangle", "x0": 0, "x1": 0, "y0": 0, "y1": 0}"#);
    write(dir.path(), "tri.json", r#"{"kind": "triangle", "x0": 0, "x1": 0, "y0": 0, "y1": 0}"#);
    for (points, expected) in [("rect.json", 2.0), ("tri.json", 1.0)] {
        let doc: Value =
            serde_json::from_str(&ok(dir.path(), &["test", "--state", "vac.json", "--points", points, "--format", "json"]))
                .unwrap();
        assert!((doc["value"].as_f64().unwrap() - expected).abs() < 1e-12, "{points}: {doc}");
    }
}

#[test]
fn malformed_state_is_a_validation_error() {
    let dir = setup();
    write(dir.path(), "bad.json", "{\"type\": \"fock\",\n \"n\": 2,,}");
    let out = run(dir.path(), &["test", "--state", "bad.json", "--points", "witness.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    write(dir.path(), "neg_n.json", r#"{"type": "fock", "n": -1}"#);
    let out = run(dir.path(), &["test", "--state", "neg_n.json", "--points", "witness.json"]);
    assert_eq!(out.status.code(), Some(2));

    write(dir.path(), "neg.json", r#"{"type": "gaussian", "nbar": -0.5}"#);
    let out = run(dir.path(), &["test", "--state", "neg.json", "--points", "witness.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_file_is_an_io_error() {
    let dir = setup();
    let out = run(dir.path(), &["test", "--state", "nope.json", "--points", "witness.json"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn vacuum_preset_brackets_truth() {
    let dir = setup();
    ok(dir.path(), &["expsim", "fig3b_n0", "--out", "run", "--format", "json"]);
    let doc = read_json(&dir.path().join("run/expsim.json"));
    let (value, sigma, truth) =
        (doc["value"].as_f64().unwrap(), doc["sigma"].as_f64().unwrap(), doc["truth"].as_f64().unwrap());
    assert!((value - truth).abs() <= 2.0 * sigma, "{value} ± {sigma} vs {truth}");
    assert_eq!(doc["exceeds_gaussian"], Value::Bool(false));
}

#[test]
fn reruns_are_reproducible() {
    let dir = setup();
    for out in ["a", "b"] {
        ok(dir.path(), &["expsim", "fig3b_mix", "--seed", "7", "--out", out]);
    }
    let ma = read_json(&dir.path().join("a/manifest.json"));
    let mb = read_json(&dir.path().join("b/manifest.json"));
    assert_eq!(ma["config_digest"], mb["config_digest"]);
    assert_eq!(ma["seed"], 7);
    assert_eq!(fs::read(dir.path().join("a/expsim.csv")).unwrap(), fs::read(dir.path().join("b/expsim.csv")).unwrap());

    ok(dir.path(), &["expsim", "fig3b_mix", "--seed", "8", "--out", "c"]);
    let mc = read_json(&dir.path().join("c/manifest.json"));
    assert_ne!(ma["config_digest"], mc["config_digest"]);
}

#[test]
fn eigen_scan_increases_toward_four() {
    let dir = setup();
    let csv = ok(dir.path(), &["scan", "eigen-N"]);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("N,d_squared,lambda_N,mu_N"));
    let mu: Vec<f64> = lines.map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(mu.len(), 8);
    assert!((mu[0] - 3.3176).abs() < 1e-3);
    assert!(mu.windows(2).all(|w| w[1] >= w[0] && w[1] <= 4.0));
}

#[test]
fn eigenmax_writes_lattice_state() {
    let dir = setup();
    ok(dir.path(), &["eigenmax", "--n", "2", "--out", "e"]);
    let text = fs::read_to_string(dir.path().join("e/lattice_state.txt")).unwrap();
    assert!(text.starts_with("# N = 2"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 1 + 25);
}

#[test]
fn thresholds_endpoints() {
    let dir = setup();
    let csv = ok(dir.path(), &["thresholds", "--steps", "2"]);
    let last: Vec<f64> = csv.lines().last().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert!((last[1] - 0.860402).abs() < 1e-5);
    assert!((last[2] - 0.5).abs() < 1e-5);
}

#[test]
fn fock_mixture_scan_finds_one_crossing() {
    let dir = setup();
    ok(dir.path(), &["scan", "fock-mixture", "--from", "0.6", "--to", "0.8", "--steps", "3", "--out", "s", "--gnuplot"]);
    let crossings = fs::read_to_string(dir.path().join("s/fock_mixture_crossings.csv")).unwrap();
    let rows: Vec<&str> = crossings.lines().skip(1).filter(|l| l.starts_with("j_parallelogram")).collect();
    assert_eq!(rows.len(), 1, "{crossings}");
    let f: f64 = rows[0].split(',').nth(1).unwrap().parse().unwrap();
    assert!((f - 0.6873).abs() < 1e-3, "{f}");
    assert!(dir.path().join("s/fock_mixture.gp").exists());
}

#[test]
fn series_fit_recovers_parity() {
    use nonclassical::expsim::{default_times, simulate_signal, PhononDistribution, RabiModel};
    use rand::SeedableRng;

    let dir = setup();
    let q = PhononDistribution::new(vec![0.6, 0.3, 0.1]).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
    let ts = simulate_signal(&q, &RabiModel::default(), &default_times(), 0, &mut rng).unwrap();
    ts.write_csv(fs::File::create(dir.path().join("series.csv")).unwrap()).unwrap();

    ok(dir.path(), &["expsim", "--series", "series.csv", "--out", "fit"]);
    let doc = read_json(&dir.path().join("fit/fit.json"));
    let parity = doc["parity"].as_f64().unwrap();
    assert!((parity - 0.4).abs() < 1e-6, "{parity}");
    assert!(dir.path().join("fit/fit.txt").exists());
}
