use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn edh(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_edh"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn model(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../models")
        .join(name)
        .display()
        .to_string()
}

fn write_model(dir: &Path, text: &str) -> String {
    let p = dir.join("model.toml");
    fs::write(&p, text).unwrap();
    p.display().to_string()
}

fn read_csv(path: PathBuf) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records()
        .map(|row| row.unwrap().iter().map(String::from).collect())
        .collect()
}

const CHAIN4: &str = "preset = \"chain\"\nn_sites = 4\n";

#[test]
fn spectrum_of_default10_has_1024_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = edh(&["--config", &model("default10.toml"), "--out", out.to_str().unwrap(), "spectrum"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(out.join("spectrum.csv")).unwrap();
    assert!(text.starts_with("n,sector,E_n,degeneracy_group_id\n"));
    assert_eq!(read_csv(out.join("spectrum.csv")).len(), 1024);
}

#[test]
fn chain4_spectrum_has_cross_sector_group() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_model(dir.path(), CHAIN4);
    let out = dir.path().join("out");
    assert!(edh(&["--config", &cfg, "--out", out.to_str().unwrap(), "spectrum"]).status.success());
    let rows = read_csv(out.join("spectrum.csv"));
    assert_eq!(rows.len(), 16);
    let mut sectors_by_group = std::collections::BTreeMap::<i64, std::collections::BTreeSet<String>>::new();
    for r in &rows {
        let g: i64 = r[3].parse().unwrap();
        if g >= 0 {
            sectors_by_group.entry(g).or_default().insert(r[1].clone());
        }
    }
    assert!(sectors_by_group.values().any(|s| s.len() > 1));
}

#[test]
fn malformed_config_exits_2_and_names_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_model(dir.path(), "n_sites = 4\nedges = [[0, 1], [1, 1]]\n");
    let o = edh(&["--config", &cfg, "--out", dir.path().join("o").to_str().unwrap(), "spectrum"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("edges"));

    let cfg = write_model(dir.path(), "preset = \"chain\"\nn_sites = 4\nbin_width = -1.0\n");
    let o = edh(&["--config", &cfg, "spectrum"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bin_width"));
}

#[test]
fn output_path_that_is_a_file_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_model(dir.path(), CHAIN4);
    let blocker = dir.path().join("blocker");
    fs::write(&blocker, "x").unwrap();
    let o = edh(&["--config", &cfg, "--out", blocker.to_str().unwrap(), "report"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn missing_config_file_exits_3() {
    let o = edh(&["--config", "/nonexistent/model.toml", "spectrum"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn unknown_operator_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_model(dir.path(), CHAIN4);
    let o = edh(&["--config", &cfg, "--out", dir.path().join("o").to_str().unwrap(), "witness-scan", "--operator", "Q"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Q"));
}

#[test]
fn w_scan_obeys_selection_rule_and_writes_plot() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = edh(&[
        "--config",
        &model("default10.toml"),
        "--out",
        out.to_str().unwrap(),
        "--plot",
        "witness-scan",
        "--operator",
        "W",
    ]);
    assert!(o.status.success());
    let rows = read_csv(out.join("scan_W.csv"));
    assert_eq!(rows.len(), 15504);
    for r in &rows {
        let (a, b): (usize, usize) = (r[2].parse().unwrap(), r[3].parse().unwrap());
        assert_eq!(a.abs_diff(b), 5);
        assert_eq!(r[10], "W");
    }
    let bins = fs::read_to_string(out.join("bins_W.csv")).unwrap();
    assert!(bins.starts_with("bin_lo,bin_hi,count,median_abs,mean_abs,max_abs\n"));
    let svg = fs::read_to_string(out.join("scan_W.svg")).unwrap();
    assert!(svg.contains("<polyline"));
}

#[test]
fn evolve_boundaries() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_model(dir.path(), "preset = \"chain\"\nn_sites = 6\n");
    let out = dir.path().join("out");
    let o = out.to_str().unwrap();

    assert!(edh(&["--config", &cfg, "--out", o, "evolve", "--tmax", "0"]).status.success());
    let rows = read_csv(out.join("evolve_W.csv"));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][1].parse::<f64>().unwrap(), 1.0);

    let run = edh(&["--config", &cfg, "--out", o, "evolve", "--initial", "eigenstate:0", "--tmax", "5", "--steps", "20"]);
    assert!(run.status.success());
    let rows = read_csv(out.join("evolve_W.csv"));
    assert_eq!(rows.len(), 21);
    let w0: f64 = rows[0][1].parse().unwrap();
    assert!(rows.iter().all(|r| (r[1].parse::<f64>().unwrap() - w0).abs() < 1e-12));

    let cat = edh(&["--config", &cfg, "--out", o, "evolve", "--tmax", "20", "--steps", "200"]);
    assert!(String::from_utf8_lossy(&cat.stdout).contains("tau"));

    let bad = edh(&["--config", &cfg, "--out", o, "evolve", "--initial", "eigenstate:64"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn evolve_from_state_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_model(dir.path(), "preset = \"chain\"\nn_sites = 4\n");
    let psi = dir.path().join("psi.csv");
    // subsystem {0, 1} cat state, bath {2, 3} in 01
    let s = std::f64::consts::FRAC_1_SQRT_2;
    fs::write(&psi, format!("config,re,im\n8,{s},0\n11,{s},0\n")).unwrap();
    let out = dir.path().join("out");
    let init = format!("file:{}", psi.display());
    let o = edh(&["--config", &cfg, "--out", out.to_str().unwrap(), "evolve", "--initial", &init, "--tmax", "0"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_csv(out.join("evolve_W.csv"));
    assert!((rows[0][1].parse::<f64>().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn report_manifest_lists_existing_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_model(dir.path(), "preset = \"chain\"\nn_sites = 6\n");
    let out = dir.path().join("out");
    let o = edh(&["--config", &cfg, "--out", out.to_str().unwrap(), "report", "--rdm", "0:1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    let outputs: Vec<&str> = manifest["outputs"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    for name in ["spectrum.csv", "scan_W.csv", "scan_C.csv", "evolve_W.csv", "rdm_0_1.csv", "summary.csv"] {
        assert!(outputs.contains(&name), "{name} missing from manifest");
    }
    for name in &outputs {
        assert!(out.join(name).exists());
    }
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
    assert_eq!(read_csv(out.join("rdm_0_1.csv")).len(), 64);
}

#[test]
fn repeated_reports_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_model(dir.path(), "preset = \"chain\"\nn_sites = 8\n");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(edh(&["--config", &cfg, "--out", a.to_str().unwrap(), "report"]).status.success());
    assert!(edh(&["--config", &cfg, "--out", b.to_str().unwrap(), "--threads", "2", "report"]).status.success());
    for entry in fs::read_dir(&a).unwrap() {
        let name = entry.unwrap().file_name();
        if name.to_string_lossy().ends_with(".csv") {
            assert_eq!(fs::read(a.join(&name)).unwrap(), fs::read(b.join(&name)).unwrap());
        }
    }
}

#[test]
fn selftest_passes() {
    let o = edh(&["selftest"]);
    assert!(o.status.success());
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.lines().count() >= 10);
    assert!(stdout.lines().all(|l| l.starts_with("PASS ")));
}
