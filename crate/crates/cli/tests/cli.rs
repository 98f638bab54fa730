use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn qkr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qkr"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = qkr(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Short VAE and single repetition keep the end-to-end runs fast.
fn fast_config(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("config.json");
    fs::write(&path, r#"{"vae_epochs": 40, "forest_trees": 20, "boosting_rounds": 40}"#).unwrap();
    path
}

fn synth(dir: &Path, name: &str, n: usize, seed: u64, noise: f64) -> std::path::PathBuf {
    let path = dir.join(name);
    ok(&[
        "synth",
        "--n",
        &n.to_string(),
        "--seed",
        &seed.to_string(),
        "--noise",
        &noise.to_string(),
        "--out",
        p(&path),
    ]);
    path
}

fn csv_rows(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

#[test]
fn synth_is_sized_and_reproducible() {
    let dir = TempDir::new().unwrap();
    let a = synth(dir.path(), "a.csv", 159, 7, 0.05);
    let b = synth(dir.path(), "b.csv", 159, 7, 0.05);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let (header, rows) = csv_rows(&a);
    assert_eq!(rows.len(), 159);
    assert_eq!(header.len(), 12);
}

#[test]
fn synth_zero_is_usage_error() {
    let dir = TempDir::new().unwrap();
    let out = qkr(&["synth", "--n", "0", "--out", p(&dir.path().join("x.csv"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
}

#[test]
fn unknown_subcommand_and_help() {
    assert_eq!(qkr(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(qkr(&["--help"]).status.code(), Some(0));
}

#[test]
fn train_verify_predict_round_trip() {
    let dir = TempDir::new().unwrap();
    let data = synth(dir.path(), "data.csv", 80, 3, 0.05);
    let cfg = fast_config(dir.path());
    let bundle = dir.path().join("model.json");
    let stdout = ok(&[
        "train",
        "--data",
        p(&data),
        "--config",
        p(&cfg),
        "--model-out",
        p(&bundle),
    ]);
    assert!(stdout.contains("mae="), "{stdout}");
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("model.json.report.json")).unwrap()).unwrap();
    for key in ["mae", "mse", "rmse", "pearson_r"] {
        assert!(report["test_metrics"].get(key).is_some(), "missing {key}");
    }
    assert_eq!(report["residuals"].as_array().unwrap().len(), 16);

    let external = synth(dir.path(), "ext.csv", 5, 99, 0.05);
    let table = dir.path().join("verify.csv");
    let first = ok(&["verify", "--model", p(&bundle), "--data", p(&external), "--out", p(&table)]);
    let second = ok(&["verify", "--model", p(&bundle), "--data", p(&external)]);
    assert_eq!(first, second);
    assert_eq!(first.lines().filter(|l| l.starts_with("syn")).count(), 5);
    assert_eq!(first.lines().filter(|l| l.starts_with("mae ")).count(), 1);
    let (header, rows) = csv_rows(&table);
    assert_eq!(header, ["id", "measured", "predicted", "abs_error"]);
    assert_eq!(rows.len(), 5);

    let preds = dir.path().join("pred.csv");
    ok(&["predict", "--model", p(&bundle), "--data", p(&external), "--out", p(&preds)]);
    let (_, pred_rows) = csv_rows(&preds);
    for (a, b) in pred_rows.iter().zip(&rows) {
        assert_eq!(a[1], b[2]);
    }
}

#[test]
fn verify_rejects_missing_label() {
    let dir = TempDir::new().unwrap();
    let data = synth(dir.path(), "data.csv", 40, 3, 0.05);
    let cfg = fast_config(dir.path());
    let bundle = dir.path().join("model.json");
    ok(&["train", "--data", p(&data), "--config", p(&cfg), "--model-out", p(&bundle)]);
    let text = fs::read_to_string(synth(dir.path(), "ext.csv", 3, 9, 0.05)).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let mut cells: Vec<&str> = lines[1].split(',').collect();
    cells[10] = "";
    lines[1] = cells.join(",");
    let unlabeled = dir.path().join("unlabeled.csv");
    fs::write(&unlabeled, lines.join("\n") + "\n").unwrap();
    let out = qkr(&["verify", "--model", p(&bundle), "--data", p(&unlabeled)]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("syn1") && err.contains("r_c"), "{err}");
    assert_eq!(err.trim().lines().count(), 1);
}

#[test]
fn verify_rejects_width_mismatch() {
    let dir = TempDir::new().unwrap();
    let data = synth(dir.path(), "data.csv", 40, 3, 0.05);
    let cfg = fast_config(dir.path());
    let bundle = dir.path().join("model.json");
    ok(&["train", "--data", p(&data), "--config", p(&cfg), "--model-out", p(&bundle)]);
    let mut json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&bundle).unwrap()).unwrap();
    json["pca"]["mean"].as_array_mut().unwrap().push(0.0.into());
    json["feature_width"] = 38.into();
    fs::write(&bundle, json.to_string()).unwrap();
    let out = qkr(&["verify", "--model", p(&bundle), "--data", p(&data)]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("width 38") && err.contains("37"), "{err}");
}

#[test]
fn corrupt_csv_names_line() {
    let dir = TempDir::new().unwrap();
    let data = synth(dir.path(), "data.csv", 20, 3, 0.05);
    let text = fs::read_to_string(&data).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    lines[4] = lines[4].replacen(",", ",abc", 1);
    fs::write(&data, lines.join("\n") + "\n").unwrap();
    let out = qkr(&["train", "--data", p(&data), "--model-out", p(&dir.path().join("m.json"))]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 5"), "{err}");
}

#[test]
fn unknown_config_key_rejected() {
    let dir = TempDir::new().unwrap();
    let data = synth(dir.path(), "data.csv", 20, 3, 0.05);
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"svr_C": 3}"#).unwrap();
    let out = qkr(&[
        "train",
        "--data",
        p(&data),
        "--config",
        p(&cfg),
        "--model-out",
        p(&dir.path().join("m.json")),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("svr_C"));
}

#[test]
fn benchmark_writes_reports() {
    let dir = TempDir::new().unwrap();
    let data = synth(dir.path(), "data.csv", 60, 3, 0.05);
    let cfg = fast_config(dir.path());
    let out_dir = dir.path().join("bench");
    ok(&[
        "benchmark",
        "--data",
        p(&data),
        "--config",
        p(&cfg),
        "--repetitions",
        "2",
        "--maps",
        "--out-dir",
        p(&out_dir),
    ]);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("benchmark.json")).unwrap()).unwrap();
    assert_eq!(report["repetitions"], 2);
    assert_eq!(report["seeds"].as_array().unwrap().len(), 2);
    assert_eq!(report["models"].as_array().unwrap().len(), 7);
    assert_eq!(report["feature_maps"]["rows"].as_array().unwrap().len(), 4);
    assert_eq!(report["config"]["vae_epochs"], 40);
    let (header, rows) = csv_rows(&out_dir.join("benchmark.csv"));
    assert_eq!(header, ["model", "metric", "mean", "std"]);
    assert_eq!(rows.len(), 8 * 3);
    for name in ["bars.csv", "advantage.csv", "scatter.csv", "feature_maps.csv"] {
        let (_, rows) = csv_rows(&out_dir.join("plotdata").join(name));
        assert!(!rows.is_empty(), "{name}");
    }
}

#[test]
fn kernel_csv_has_ids_and_unit_diagonal() {
    let dir = TempDir::new().unwrap();
    let data = synth(dir.path(), "data.csv", 159, 7, 0.05);
    let cfg = fast_config(dir.path());
    let exact = dir.path().join("k.csv");
    ok(&["kernel", "--data", p(&data), "--config", p(&cfg), "--out", p(&exact)]);
    let (header, rows) = csv_rows(&exact);
    assert_eq!(rows.len(), 32);
    assert_eq!(header.len(), 33);
    assert_eq!(header[0], "id");
    let exact_vals: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| r[1..].iter().map(|v| v.parse().unwrap()).collect())
        .collect();
    for (i, r) in rows.iter().enumerate() {
        assert_eq!(r[0], header[i + 1]);
        assert!((exact_vals[i][i] - 1.0).abs() < 1e-12);
    }

    let shots = 4000u64;
    let sampled = dir.path().join("ks.csv");
    ok(&[
        "kernel",
        "--data",
        p(&data),
        "--config",
        p(&cfg),
        "--sampled",
        "--shots",
        &shots.to_string(),
        "--out",
        p(&sampled),
    ]);
    let (_, srows) = csv_rows(&sampled);
    let mut outside = 0;
    let mut total = 0;
    for (i, r) in srows.iter().enumerate() {
        for (j, v) in r[1..].iter().enumerate() {
            let s: f64 = v.parse().unwrap();
            let e = exact_vals[i][j];
            let bound = 4.0 * (e * (1.0 - e) / shots as f64).sqrt() + 1e-12;
            total += 1;
            if (s - e).abs() > bound {
                outside += 1;
            }
        }
    }
    // A 4-sigma band should hold for all but a handful of 1024 entries.
    assert!(outside * 100 <= total, "{outside} of {total} outside the band");
}
