//! Command-line runner: validation messages, exit codes, outputs and manifests.

use std::path::{Path, PathBuf};

use lrdfield::cli::config::ExperimentConfig;
use lrdfield::cli::{main_with_args, run, validate, RunOptions};
use sha2::{Digest, Sha256};

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn load(name: &str) -> ExperimentConfig {
    ExperimentConfig::load(&config_path(name)).unwrap()
}

fn exit_code(args: &[&str]) -> i32 {
    main_with_args(std::iter::once("lrdfield").chain(args.iter().copied()))
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    let header = rdr.headers().unwrap().iter().map(String::from).collect();
    let rows = rdr.records().map(|r| r.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap()
}

#[test]
fn shipped_configs_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_name().unwrap().to_str().unwrap().to_string();
        let cfg = ExperimentConfig::load(&path).unwrap();
        let v = validate(&cfg);
        if name.starts_with("invalid_") {
            assert!(!v.is_empty(), "{name} should not validate");
        } else {
            assert!(v.is_empty(), "{name}: {v:?}");
        }
        seen += 1;
    }
    assert!(seen >= 20);
}

#[test]
fn long_range_violation_is_named() {
    let v = validate(&load("invalid_long_range.toml"));
    assert_eq!(v.len(), 1);
    assert!(v[0].contains("long-range condition"), "{}", v[0]);
    assert!(v[0].contains("alpha * m = 1.2"), "{}", v[0]);
}

#[test]
fn rectangle_must_contain_the_origin() {
    let mut cfg = load("kernel_n2.toml");
    cfg.domain.as_mut().unwrap().a[0] = 0.0;
    let v = validate(&cfg);
    assert!(v.iter().any(|m| m.contains("a_l < 0 < b_l")), "{v:?}");
}

#[test]
fn order_guard_rejects_large_jmax() {
    let mut cfg = load("parseval.toml");
    cfg.hermite.as_mut().unwrap().jmax = 40;
    let v = validate(&cfg);
    assert!(v.iter().any(|m| m.contains("order guard")), "{v:?}");
}

#[test]
fn parse_errors_carry_the_location() {
    let err = ExperimentConfig::from_toml("kind = \"l12\"\nseed = \n").unwrap_err().to_string();
    assert!(err.contains("line 2"), "{err}");
    let err = ExperimentConfig::from_toml("kind = \"l12\"\nseed = 1\nsede = 2\n").unwrap_err().to_string();
    assert!(err.contains("sede"), "{err}");
}

#[test]
fn exit_codes() {
    let ok = config_path("l12_n1.toml");
    let bad = config_path("invalid_long_range.toml");
    assert_eq!(exit_code(&["validate", "--config", ok.to_str().unwrap()]), 0);
    assert_eq!(exit_code(&["validate", "--config", bad.to_str().unwrap()]), 2);
    assert_eq!(exit_code(&["msd-ratio", "--config", bad.to_str().unwrap()]), 2);
    // The subcommand has to match the configured kind.
    assert_eq!(exit_code(&["msd-ratio", "--config", ok.to_str().unwrap()]), 2);
    assert_eq!(exit_code(&["l12", "--config", "/nonexistent/config.toml"]), 1);
    assert_eq!(exit_code(&["l12"]), 2);

    let out = tempfile::tempdir().unwrap();
    let target = out.path().join("run");
    assert_eq!(exit_code(&["l12", "--config", ok.to_str().unwrap(), "--out", target.to_str().unwrap()]), 0);
    assert!(target.join("l12.csv").exists());
    assert!(target.join("manifest.json").exists());
}

#[test]
fn failed_writes_leave_no_partial_outputs() {
    let out = tempfile::tempdir().unwrap();
    // A directory squatting on the second output name makes that write fail.
    std::fs::create_dir(out.path().join("summary.csv")).unwrap();
    let cfg = config_path("parseval.toml");
    let code = exit_code(&["hermite-coeffs", "--config", cfg.to_str().unwrap(), "--out", out.path().to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(!out.path().join("coefficients.csv").exists());
    assert!(!out.path().join("manifest.json").exists());
}

#[test]
fn manifest_lists_every_file_with_its_checksum() {
    let out = tempfile::tempdir().unwrap();
    let opts = RunOptions { out: Some(out.path().to_path_buf()), json: true, workers: Some(2) };
    let manifest = run(&load("parseval.toml"), &opts).unwrap();
    let mut names: Vec<String> = manifest.outputs.iter().map(|o| o.file.clone()).collect();
    names.sort();
    assert_eq!(names, ["coefficients.csv", "coefficients.json", "summary.csv", "summary.json"]);
    for o in &manifest.outputs {
        let bytes = std::fs::read(out.path().join(&o.file)).unwrap();
        assert_eq!(o.bytes, bytes.len());
        assert_eq!(o.sha256, hex::encode(Sha256::digest(&bytes)));
    }
    let json: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(json["kind"], "hermite-coeffs");
    assert_eq!(json["config"]["seed"], 1);
    assert!(json["started"].is_string() && json["finished"].is_string());
}

#[test]
fn msd_ladder_has_five_decreasing_rows() {
    let out = tempfile::tempdir().unwrap();
    let opts = RunOptions { out: Some(out.path().to_path_buf()), json: false, workers: None };
    run(&load("msd_n2_m1.toml"), &opts).unwrap();
    let (header, rows) = read_csv(&out.path().join("ratios.csv"));
    assert_eq!(rows.len(), 5);
    let c = column(&header, "ratio");
    let ratios: Vec<f64> = rows.iter().map(|r| r[c].parse().unwrap()).collect();
    for w in ratios[1..].windows(2) {
        assert!(w[1] < w[0], "{ratios:?}");
    }
}

#[test]
fn kernel_check_writes_one_hundred_small_discrepancies() {
    let out = tempfile::tempdir().unwrap();
    let opts = RunOptions { out: Some(out.path().to_path_buf()), json: false, workers: None };
    run(&load("kernel_n2.toml"), &opts).unwrap();
    let (header, rows) = read_csv(&out.path().join("kernel.csv"));
    assert_eq!(rows.len(), 100);
    let c = column(&header, "discrepancy");
    for r in &rows {
        let d: f64 = r[c].parse().unwrap();
        assert!(d <= 1e-8, "{d}");
    }
}

#[test]
fn outputs_do_not_depend_on_the_worker_count() {
    let cfg = load("msd_n3_qmc.toml");
    let mut digests = Vec::new();
    for workers in [1, 3] {
        let out = tempfile::tempdir().unwrap();
        let opts = RunOptions { out: Some(out.path().to_path_buf()), json: false, workers: Some(workers) };
        let m = run(&cfg, &opts).unwrap();
        digests.push(m.outputs.iter().map(|o| (o.file.clone(), o.sha256.clone())).collect::<Vec<_>>());
    }
    assert_eq!(digests[0], digests[1]);
}
