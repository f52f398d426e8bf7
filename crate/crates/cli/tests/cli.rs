use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_duffing-qdyn"))
        .args(args)
        .current_dir(dir)
        .env("DUFFING_QDYN_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn manifest(path: &Path) -> Value {
    serde_json::from_str(&read(path)).expect("manifest parses")
}

fn error_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(text.trim()).unwrap_or_else(|_| panic!("stderr is not JSON: {text}"))
}

/// Data rows of a CSV after the comment and header lines.
fn rows(text: &str) -> Vec<Vec<String>> {
    text.lines().filter(|l| !l.starts_with('#')).skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn attractor_sweep_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["attractors", "--sweep", "beta:0.02:0.1:5", "--out", "a/run"];
    assert!(run(dir.path(), &args).status.success());
    let first = read(&dir.path().join("a/run-attractors.csv"));
    assert!(run(dir.path(), &args).status.success());
    assert_eq!(first, read(&dir.path().join("a/run-attractors.csv")));

    assert!(first.starts_with("# schema=1\n"));
    let body = rows(&first);
    // three roots per point inside the bistable window
    assert_eq!(body.len(), 15);
    for row in body.iter().filter(|r| r[1] == "saddle") {
        assert_eq!(row[5], "nan");
    }
    let m = manifest(&dir.path().join("a/run-manifest.json"));
    assert_eq!(m["schema"], 1);
    assert_eq!(m["scenario"], "attractors");
    assert_eq!(m["sweep"], "beta:0.02:0.1:5");
    assert_eq!(m["outputs"].as_array().unwrap().len(), 2);
    assert!(m["residuals"]["alpha_residual"].as_f64().unwrap() < 1e-8);
    assert!(m["assumed"]["lambda"].is_string());
    assert!(m["assumed"].get("beta").is_none());
}

#[test]
fn zero_drive_has_single_root() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run(dir.path(), &["attractors", "--beta", "0", "--out", "z"]).status.success());
    for curve in ["attractors", "reordered"] {
        let body = rows(&read(&dir.path().join(format!("z-{curve}.csv"))));
        assert_eq!(body.len(), 1);
        assert_eq!(body[0][0], "las");
        assert_eq!(body[0][3], "0.00000000000e0");
    }
}

#[test]
fn level_spacings_converge() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["levels", "--n-max", "3", "--dim", "150", "--out", "lv"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("lv-spacings.csv"));
    let text = read(&dir.path().join("lv-spacings.csv"));
    assert!(text.contains("n,dE_exact,dE_order0,dE_order2,dE_order4\n"));
    for row in rows(&text) {
        let v: Vec<f64> = row[1..].iter().map(|x| x.parse().unwrap()).collect();
        let errs: Vec<f64> = v[1..].iter().map(|x| (x - v[0]).abs()).collect();
        assert!(errs[2] < errs[1] && errs[1] < errs[0], "{row:?}");
    }
}

#[test]
fn config_file_and_flags() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.cfg"), "# small run\nkappa = 0.005\ndim = 24\nn_max = 4\nout = from-config\n").unwrap();
    let out = run(dir.path(), &["distribution", "--config", "run.cfg", "--n-max", "3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = read(&dir.path().join("from-config-distribution.csv"));
    assert_eq!(rows(&text).len(), 4);
    let total: f64 = rows(&text).iter().map(|r| r[1].parse::<f64>().unwrap()).sum();
    assert!(total > 0.99 && total <= 1.0 + 1e-9);
    let m = manifest(&dir.path().join("from-config-manifest.json"));
    assert_eq!(m["params"]["dim"], 24);
    assert_eq!(m["params"]["n_max"], 3);
}

#[test]
fn reproduce_writes_per_scenario_prefixes() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["reproduce", "fig6", "--dim", "20", "--n-max", "4", "--kappa", "0.1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["fig6-neff-neff.csv", "fig6-neff-manifest.json", "fig6-spectrum-peaks.csv", "fig6-spectrum-spectra.csv"] {
        assert!(dir.path().join(f).exists(), "{f} missing");
    }
    let m = manifest(&dir.path().join("fig6-spectrum-manifest.json"));
    assert_eq!(m["figure"], "fig6");
    assert!(read(&dir.path().join("fig6-neff-neff.csv")).contains("# undefined=nan"));
}

#[test]
fn errors_are_json_with_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [(&[&str], &str, i32); 5] = [
        (&["levels", "--sweep", "beta:0:1:3"], "config", 2),
        (&["levels", "--order", "9"], "config", 2),
        (&["levels", "--sweep", "nope"], "config", 2),
        (&["attractors", "--kappa", "-1"], "domain", 2),
        (&["levels", "--beta", "0"], "domain", 2),
    ];
    for (args, kind, code) in cases {
        let out = run(dir.path(), args);
        assert_eq!(out.status.code(), Some(code), "{args:?}");
        let e = error_json(&out);
        assert_eq!(e["error"], kind, "{args:?}");
        assert!(e["message"].as_str().is_some_and(|m| !m.is_empty()));
    }
    std::fs::write(dir.path().join("bad.cfg"), "dim = 20\ncolour = red\n").unwrap();
    let out = run(dir.path(), &["levels", "--config", "bad.cfg"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(error_json(&out)["message"].as_str().unwrap().contains("colour"));
    assert!(std::fs::read_dir(dir.path()).unwrap().all(|e| !e.unwrap().file_name().to_string_lossy().ends_with(".csv")));
}

#[test]
fn bad_thread_count_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_duffing-qdyn"))
        .args(["attractors"])
        .current_dir(dir.path())
        .env("DUFFING_QDYN_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_json(&out)["error"], "config");
}
