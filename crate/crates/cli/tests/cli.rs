use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn nel(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nel"))
        .args(args)
        .current_dir(dir)
        .env_remove("NEL_THREADS")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], dir: &Path) -> String {
    let out = nel(args, dir);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.records().map(|rec| rec.unwrap().iter().map(str::to_string).collect()).collect()
}

#[test]
fn eigen_writes_records_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["eigen", "--n", "1:6", "--method", "both", "--tol", "1e-10", "--out", "eig.json"], dir.path());
    let records = read_json(&dir.path().join("eig.json"));
    let records = records.as_array().unwrap();
    assert_eq!(records.len(), 12);
    let expect = [1.602573, 2.388358, 2.976682, 3.467542, 3.897484, 4.2847241];
    for r in records {
        let n = r["n"].as_i64().unwrap() as usize;
        assert!((r["a_n"].as_f64().unwrap() - expect[n - 1]).abs() < 1e-5);
        assert!(r["residual"].as_f64().unwrap() < 1e-7);
    }
    let manifest = read_json(&dir.path().join("eig.json.manifest.json"));
    assert_eq!(manifest["subcommand"], "eigen");
    assert_eq!(manifest["parameters"]["n"], "1:6");
    assert_eq!(manifest["outputs"][0], "eig.json");
}

#[test]
fn negative_indices_need_backward_tracing() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(&["eigen", "--n", "-3:0", "--method", "backward"], dir.path());
    let records: Value = serde_json::from_str(&out).unwrap();
    let a: Vec<f64> = records.as_array().unwrap().iter().map(|r| r["a_n"].as_f64().unwrap()).collect();
    for (got, want) in a.iter().zip([-3.231360, -2.698369, -2.032651, -1.016702]) {
        assert!((got - want).abs() < 1e-5);
    }
    let refused = nel(&["eigen", "--n", "-3:0"], dir.path());
    assert_eq!(refused.status.code(), Some(2));
}

#[test]
fn first_figure_has_fifty_trajectories() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["figures", "fig1", "--out", "fig1.csv"], dir.path());
    let text = std::fs::read_to_string(dir.path().join("fig1.csv")).unwrap();
    assert!(text.starts_with("k,a,x,y\n"));
    let rows = csv_rows(&text);
    let mut ks: Vec<i64> = rows.iter().map(|r| r[0].parse().unwrap()).collect();
    ks.dedup();
    assert_eq!(ks, (1..=50).collect::<Vec<_>>());
    let xs: Vec<f64> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    assert_eq!(xs.iter().cloned().fold(f64::INFINITY, f64::min), 0.0);
    assert_eq!(xs.iter().cloned().fold(0.0, f64::max), 24.0);
    for r in rows.iter().filter(|r| r[2] == "0.0000000000000000e0") {
        let k: f64 = r[0].parse().unwrap();
        assert_eq!(r[1].parse::<f64>().unwrap(), 0.2 * k);
        assert_eq!(r[3], r[1]);
    }
}

#[test]
fn root_modulus_scan_peaks() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["pseries", "scan", "--n", "50", "--tau", "0.35:0.40:0.0005", "--out", "rho.csv"], dir.path());
    let rows = csv_rows(&std::fs::read_to_string(dir.path().join("rho.csv")).unwrap());
    assert_eq!(rows.len(), 101);
    let (tau, rho) = rows
        .iter()
        .map(|r| (r[0].parse::<f64>().unwrap(), r[1].parse::<f64>().unwrap()))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    assert!((tau - 0.378).abs() <= 5e-4 && (rho - 1.7818).abs() < 5e-4);
    let manifest = read_json(&dir.path().join("rho.csv.manifest.json"));
    assert!((manifest["summary"]["maxima"][0][1].as_f64().unwrap() - rho).abs() < 1e-15);
}

#[test]
fn single_term_square_wave() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(&["fourier", "--n", "0", "--points", "1"], dir.path());
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 1);
    let s: f64 = rows[0][2].parse().unwrap();
    assert_eq!(s, 4.0 / std::f64::consts::PI);
}

#[test]
fn payloads_are_deterministic_and_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["figures", "fig8"];
    let a = ok(&args, dir.path());
    let b = ok(&args, dir.path());
    assert_eq!(a, b);
    for row in csv_rows(&a).iter().take(200) {
        for cell in row.iter().filter(|c| !c.is_empty()) {
            let x: f64 = cell.parse().unwrap();
            assert_eq!(&format!("{x:.16e}"), cell);
        }
    }
}

#[test]
fn thread_cap_is_honoured() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_nel"))
        .args(["fourier", "--n", "3", "--points", "5", "--out", "f.csv"])
        .current_dir(dir.path())
        .env("NEL_THREADS", "2")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(read_json(&dir.path().join("f.csv.manifest.json"))["threads"], 2);
    let bad = Command::new(env!("CARGO_BIN_EXE_nel"))
        .args(["fourier"])
        .env("NEL_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn failures_are_reported_as_json() {
    let dir = tempfile::tempdir().unwrap();
    for (args, code, kind) in [
        (&["figures", "fig9"][..], 2, "usage"),
        (&["nonsense"][..], 2, "usage"),
        (&["pseries", "scan", "--tau", "0:1"][..], 2, "usage"),
        (&["painleve", "trajectory", "--a", "1", "--x-end", "3"][..], 1, "computation"),
        (&["extrapolate", "sequence", "--indices", "1,2", "--values", "1,2", "--stages", "2"][..], 1, "computation"),
    ] {
        let out = nel(args, dir.path());
        assert_eq!(out.status.code(), Some(code), "{args:?}");
        let err: Value = serde_json::from_slice(&out.stderr).unwrap();
        assert_eq!(err["error"]["kind"], kind);
        assert!(!err["error"]["message"].as_str().unwrap().is_empty());
    }
}

#[test]
fn richardson_on_an_exact_model() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(
        &["extrapolate", "sequence", "--indices", "10,20,40", "--values", "3.1,3.05,3.025", "--exponents", "1,2"],
        dir.path(),
    );
    let r: Value = serde_json::from_str(&out).unwrap();
    assert!((r["limit"].as_f64().unwrap() - 3.0).abs() < 1e-12);
}

#[test]
fn painleve_fate_between_eigenvalues() {
    let dir = tempfile::tempdir().unwrap();
    let fate: Value = serde_json::from_str(&ok(&["painleve", "fate", "--a", "7"], dir.path())).unwrap();
    assert_eq!(fate["lock"], "oscillatory");
    assert_eq!(fate["pole_count"], 1);
}
