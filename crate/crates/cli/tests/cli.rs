use std::path::Path;
use std::process::{Command, Output};

const SMALL_LINK: &str = r#"
seed = 5

[link]
length_km = 40.0
memory = 1

[simulation]
samples = 64
p1_dbm = 0.0
p2_dbm = 2.0
"#;

fn xpmcap(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_xpmcap"))
        .current_dir(dir)
        .env_remove("XPMCAP_CONFIG")
        .args(args)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn manifest(dir: &Path, command: &str) -> serde_json::Value {
    let text = std::fs::read_to_string(dir.join(format!("{command}.manifest.json"))).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn output_digests(m: &serde_json::Value) -> Vec<String> {
    m["outputs"].as_array().unwrap().iter().map(|o| o["sha256"].as_str().unwrap().to_string()).collect()
}

#[test]
fn sweep_is_deterministic_and_listed() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["sweep", "--g-real", "35", "--g-abs-sq", "55", "--powers-dbm", "-10,0,5.2", "--svg", "--json"];
    assert_eq!(code(&xpmcap(dir.path(), &args)), 0);
    let first = output_digests(&manifest(dir.path(), "sweep"));
    assert_eq!(first.len(), 3);
    assert_eq!(code(&xpmcap(dir.path(), &args)), 0);
    assert_eq!(output_digests(&manifest(dir.path(), "sweep")), first);
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert!(csv.starts_with("p_dbm,u1,u2,u_sum,awgn,ian1,ian2\n-10,"));
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn region_from_sweep_reports_excess() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("cfg.toml"), "[sweep]\nkappa = 13.8e6\ng_x = { g_real = 35.0, g_abs_sq = 55.0 }\ng_w = { g_real = 35.0, g_abs_sq = 55.0 }\n").unwrap();
    assert_eq!(code(&xpmcap(d, &["--config", "cfg.toml", "sweep", "--powers-dbm=-3.8,0"])), 0);
    let o = xpmcap(d, &["region", "--from-sweep", "sweep.csv", "--at-dbm=-3.8", "--svg"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("region.json")).unwrap()).unwrap();
    assert_eq!(doc["region"]["tag"], "theorem1");
    assert!(doc["ian_excess_area"].as_f64().unwrap() < 1e-12);
    // U_sum >= U1 + U2 here, so the region is the box and has no slope -1 face
    assert!(doc.get("dominant_face_midpoint").is_none());
    assert!(std::fs::read_to_string(d.join("region.svg")).unwrap().contains("<path"));
    let m = manifest(d, "region");
    assert_eq!(m["inputs"].as_array().unwrap().len(), 1);
}

#[test]
fn corner_triangle_excess() {
    let dir = tempfile::tempdir().unwrap();
    let o = xpmcap(dir.path(), &["region", "--u1", "0.39", "--u2", "0.39", "--usum", "0.494", "--awgn", "0.39", "0.39"]);
    assert_eq!(code(&o), 0);
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("region.json")).unwrap()).unwrap();
    let excess = doc["awgn_excess_area"].as_f64().unwrap();
    assert!((excess - 0.5 * 0.286f64.powi(2)).abs() < 1e-9);
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("empty.toml"), "[sweep]\npowers_dbm = []\n").unwrap();
    std::fs::write(d.join("typo.toml"), "[link]\nlenght_km = 1.0\n").unwrap();
    let cases: [&[&str]; 6] = [
        &["--config", "empty.toml", "sweep", "--g-real", "1", "--g-abs-sq", "1"],
        &["--config", "typo.toml", "sweep"],
        &["--config", "missing.toml", "sweep"],
        &["sweep"],
        &["region", "--u1", "1"],
        &["verify", "--samples", "10"],
    ];
    for args in cases {
        let o = xpmcap(d, args);
        assert_eq!(code(&o), 2, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn config_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("env.toml"), "[sweep]\npowers_dbm = [1.0]\ng_x = { g_real = 0.0, g_abs_sq = 0.0 }\ng_w = { g_real = 0.0, g_abs_sq = 0.0 }\n").unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_xpmcap"))
        .current_dir(d)
        .env("XPMCAP_CONFIG", "env.toml")
        .args(["--quiet", "sweep"])
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(o.stderr.is_empty());
    assert_eq!(std::fs::read_to_string(d.join("sweep.csv")).unwrap().lines().count(), 2);
}

#[test]
fn verify_passes_and_inconclusive_fails() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = xpmcap(d, &["--seed", "3", "verify", "--samples", "100000"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let reports: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("verify.json")).unwrap()).unwrap();
    assert_eq!(reports.as_array().unwrap().len(), 6);
    assert_eq!(manifest(d, "verify")["seed"], 3);

    // an overflowing bound cannot be decided
    std::fs::write(d.join("huge.toml"), "[verify]\ng_x = [1e300, 0.0]\n").unwrap();
    let o = xpmcap(d, &["--config", "huge.toml", "verify", "--suite", "conv4", "--samples", "100000"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn quadrature_failure_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = format!("{SMALL_LINK}\n[coeffs.quadrature]\nnodes = 2\nrefinements = 1\nmax_refinements = 1\ntolerance = 1e-14\n");
    std::fs::write(d.join("bad.toml"), cfg).unwrap();
    let o = xpmcap(d, &["--config", "bad.toml", "coeffs"]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("(l,m,p)"));
}

#[test]
fn tensors_feed_sweep_and_simulation() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("small.toml"), SMALL_LINK).unwrap();
    let cfg = ["--config", "small.toml", "--out-dir", "run"];
    assert_eq!(code(&xpmcap(d, &[&cfg[..], &["coeffs"]].concat())), 0);
    let run = d.join("run");
    assert!(run.join("tensor_x.json").exists() && run.join("tensor_convergence.json").exists());

    let tensors = ["--coeffs-x", "run/tensor_x.json", "--coeffs-w", "run/tensor_w.json"];
    let o = xpmcap(d, &[&cfg[..], &["sweep", "--powers-dbm=-5,0"], &tensors[..]].concat());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(manifest(&run, "sweep")["inputs"].as_array().unwrap().len(), 3);

    let sim = [&cfg[..], &["simulate", "--model", "full"], &tensors[..]].concat();
    assert_eq!(code(&xpmcap(d, &sim)), 0);
    let first = std::fs::read(run.join("batch_x.csv")).unwrap();
    assert_eq!(code(&xpmcap(d, &sim)), 0);
    assert_eq!(std::fs::read(run.join("batch_x.csv")).unwrap(), first);
    let text = String::from_utf8(first).unwrap();
    assert_eq!(text.lines().count(), 65);
    assert!(text.starts_with("k,x_re,x_im,w_re,w_im,y_re,y_im\n"));

    // the full model needs tensors
    assert_eq!(code(&xpmcap(d, &[&cfg[..], &["simulate", "--model", "full"]].concat())), 2);
}
