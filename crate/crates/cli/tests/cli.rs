use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("dclab-cli-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn dclab(args: &[&str], out: &Path) -> (i32, String) {
    let o = Command::new(env!("CARGO_BIN_EXE_dclab")).args(args).arg("--out").arg(out).output().unwrap();
    (o.status.code().unwrap(), String::from_utf8_lossy(&o.stdout).into_owned() + &String::from_utf8_lossy(&o.stderr))
}

fn record(dir: &Path, command: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join(format!("{command}.json"))).unwrap()).unwrap()
}

#[test]
fn normalize_laplacian_gives_mu_one() {
    let dir = scratch("normalize");
    let (code, log) = dclab(&["normalize", "--a11", "x^2+y^2"], &dir);
    assert_eq!(code, 0, "{log}");
    let rec = record(&dir, "normalize");
    assert_eq!(rec["schema"], "dclab.run/1");
    let mu = &rec["result"]["mu"];
    assert!((mu[0].as_f64().unwrap() - 1.0).abs() < 1e-8 && mu[1].as_f64().unwrap().abs() < 1e-8);
    assert!(dir.join("normalize_samples.csv").exists());
}

#[test]
fn config_echo_reproduces_the_run() {
    let dir = scratch("echo");
    let first = dir.join("first");
    let (code, log) = dclab(&["normalize", "--a11", "y^2+4*x^2", "--a12", "3*x*y", "--a22", "x^2+4*y^2"], &first);
    assert_eq!(code, 0, "{log}");
    let second = dir.join("second");
    let echo = first.join("config.json");
    let (code, log) = dclab(&["normalize", "--config", echo.to_str().unwrap()], &second);
    assert_eq!(code, 0, "{log}");
    let (a, b) = (record(&first, "normalize"), record(&second, "normalize"));
    assert_eq!(a["result"], b["result"]);
    assert!((a["result"]["mu"][0].as_f64().unwrap() - 2.0).abs() < 1e-8);
    for table in ["normalize_circles.csv", "normalize_samples.csv"] {
        assert_eq!(std::fs::read(first.join(table)).unwrap(), std::fs::read(second.join(table)).unwrap());
    }
}

#[test]
fn spectrum_table_on_a_window() {
    let dir = scratch("spectrum");
    let (code, log) = dclab(&["spectrum", "--j-min", "-8", "--j-max", "8"], &dir);
    assert_eq!(code, 0, "{log}");
    let text = std::fs::read_to_string(dir.join("spectrum_values.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "j,branch,re_sigma,im_sigma,multiplicity,residual,real,defective");
    assert_eq!(lines.count(), 34);
}

#[test]
fn exit_codes_follow_the_error_kind() {
    let dir = scratch("codes");
    assert_eq!(dclab(&["spectrum", "--c", "sin(t"], &dir).0, 2);
    assert_eq!(dclab(&["spectrum", "--nu", "1.5"], &dir).0, 2);
    assert_eq!(dclab(&["normalize", "--a11", "(x^2+y^2)*cos(3*theta)"], &dir).0, 3);
    let (code, log) = dclab(&["semilinear", "--J", "16", "--M", "32", "--P", "64", "--R", "1", "--strength", "50"], &dir);
    assert_eq!(code, 1, "{log}");
    assert_eq!(record(&dir, "semilinear")["status"], "failed");
}

#[test]
fn verify_passes_on_the_defaults() {
    let dir = scratch("verify");
    let (code, log) = dclab(&["verify"], &dir);
    assert_eq!(code, 0, "{log}");
    assert!(!log.contains("FAIL"), "{log}");
    assert_eq!(record(&dir, "verify")["result"]["failed"].as_array().unwrap().len(), 0);
}
