use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn exe(kind: &str, out: &Path, sets: &[&str], extra: &[&str]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_summlab"));
    cmd.arg(kind).arg("--out").arg(out).args(extra);
    for s in sets {
        cmd.args(["--set", s]);
    }
    cmd.output().expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("summlab-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    dir
}

fn manifest_value(dir: &Path, key: &str) -> String {
    let text = fs::read_to_string(dir.join("manifest.txt")).unwrap();
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("no {key} in manifest"))
        .to_string()
}

const SINGLE_MODE: &[&str] = &["d=1", "field=mode:1", "t=2", "lambda=1", "l=2", "n=8"];

#[test]
fn single_mode_is_halved() {
    let dir = scratch("half");
    let o = exe("riesz-eval", &dir, SINGLE_MODE, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.join("riesz_eval.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "x_index,x_1,re,im,config_hash");
    for (k, line) in lines.enumerate() {
        let f: Vec<&str> = line.split(',').collect();
        let x: f64 = f[1].parse().unwrap();
        let re: f64 = f[2].parse().unwrap();
        let im: f64 = f[3].parse().unwrap();
        assert!((re - 0.5 * (2.0 * std::f64::consts::PI * x).cos()).abs() < 1e-14, "row {k}");
        assert!((im - 0.5 * (2.0 * std::f64::consts::PI * x).sin()).abs() < 1e-14, "row {k}");
    }
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn thread_count_does_not_change_output() {
    let mut outs = Vec::new();
    for t in ["1", "8"] {
        let dir = scratch(&format!("threads{t}"));
        let o = exe("strong-mean", &dir, &["n=8", "l=5", "ladder=dyadic:1:5"], &["--threads", t, "--seed", "3"]);
        assert!(o.status.success());
        outs.push(fs::read(dir.join("strong_mean.csv")).unwrap());
        let _ = fs::remove_dir_all(&dir);
    }
    assert_eq!(outs[0], outs[1]);
}

#[test]
fn validation_errors_exit_2() {
    let dir = scratch("validation");
    assert_eq!(exe("riesz-eval", &dir, &["nonsense=1"], &[]).status.code(), Some(2));
    assert_eq!(exe("riesz-eval", &dir, &["lambda=-1.5"], &[]).status.code(), Some(2));
    assert_eq!(exe("no-such-kind", &dir, &[], &[]).status.code(), Some(2));
    assert_eq!(exe("whitney", &dir, &["n=48"], &[]).status.code(), Some(2));
    assert!(!dir.join("manifest.txt").exists());
}

#[test]
fn budget_errors_exit_3() {
    let dir = scratch("budget");
    assert_eq!(exe("whitney", &dir, &["max_cubes=10"], &[]).status.code(), Some(3));
    assert_eq!(exe("riesz-eval", &dir, &["d=3", "n=64", "max_nodes=1000"], &[]).status.code(), Some(3));
}

#[test]
fn config_file_and_overrides() {
    let dir = scratch("config");
    fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("run.cfg");
    fs::write(&cfg, "# single mode\nd = 1\nfield = mode:1\nt = 3\nlambda = 1\nl = 2\nn = 8\n").unwrap();
    let o = exe("riesz-eval", &dir.join("a"), &["t=2"], &["--config", cfg.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(manifest_value(&dir.join("a"), "config.t"), "2");
    let b = dir.join("b");
    assert!(exe("riesz-eval", &b, SINGLE_MODE, &[]).status.success());
    // the same effective configuration hashes the same
    assert_eq!(manifest_value(&dir.join("a"), "config_hash"), manifest_value(&b, "config_hash"));
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn cached_field_is_reused() {
    let dir = scratch("cache");
    let sets = ["d=2", "l=4", "n=16", "lambda=0.5", "t=3"];
    assert!(exe("riesz-eval", &dir, &sets, &["--seed", "9"]).status.success());
    assert_eq!(manifest_value(&dir, "field_source"), "generated");
    let first = fs::read(dir.join("riesz_eval.csv")).unwrap();
    assert!(exe("riesz-eval", &dir, &sets, &["--seed", "9"]).status.success());
    assert_eq!(manifest_value(&dir, "field_source"), "cache");
    assert_eq!(fs::read(dir.join("riesz_eval.csv")).unwrap(), first);
    let _ = fs::remove_dir_all(&dir);
}

fn cache_file(dir: &Path) -> PathBuf {
    dir.join("cache").join(format!("{}.slab", manifest_value(dir, "config_hash")))
}

#[test]
fn truncated_cache_is_an_io_error() {
    let dir = scratch("truncated");
    assert!(exe("riesz-eval", &dir, SINGLE_MODE, &[]).status.success());
    let path = cache_file(&dir);
    let bytes = fs::read(&path).unwrap();
    fs::write(&path, &bytes[..bytes.len() - 5]).unwrap();
    let o = exe("riesz-eval", &dir, SINGLE_MODE, &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("corrupt container"));
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn newer_container_version_is_rejected() {
    let dir = scratch("version");
    assert!(exe("riesz-eval", &dir, SINGLE_MODE, &[]).status.success());
    let path = cache_file(&dir);
    let mut bytes = fs::read(&path).unwrap();
    bytes[4..8].copy_from_slice(&2u32.to_le_bytes());
    fs::write(&path, &bytes).unwrap();
    assert_eq!(exe("riesz-eval", &dir, SINGLE_MODE, &[]).status.code(), Some(1));
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn manifest_records_the_run() {
    let dir = scratch("manifest");
    assert!(exe("kernel-scan", &dir, &["j_max=6"], &["--seed", "4"]).status.success());
    assert_eq!(manifest_value(&dir, "kind"), "kernel-scan");
    assert_eq!(manifest_value(&dir, "seed"), "4");
    assert_eq!(manifest_value(&dir, "config_hash").len(), 64);
    let slope: f64 = manifest_value(&dir, "fitted_slope").parse().unwrap();
    assert!(slope < -1.0 && slope > -2.0);
    let csv = fs::read_to_string(dir.join("kernel.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    let _ = fs::remove_dir_all(&dir);
}
