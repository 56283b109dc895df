use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wakelab"))
        .arg("--out")
        .arg(out)
        .args(args)
        .env_remove("WAKELAB_OUT")
        .output()
        .expect("wakelab runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn region_exit_codes_follow_applicability() {
    let dir = tempfile::tempdir().unwrap();
    let ok = run(dir.path(), &["region", "--q", "2", "--r", "2", "--alpha", "1/5", "--beta", "1/5"]);
    assert_eq!(ok.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_str(&stdout(&ok)).unwrap();
    assert_eq!(report["status"], "applicable");
    assert!(dir.path().join("region.csv").exists());
    assert!(dir.path().join("region.manifest.json").exists());

    let none = run(dir.path(), &["region", "--q", "2", "--r", "2", "--alpha", "5", "--beta", "5"]);
    assert_eq!(none.status.code(), Some(3));

    let bad = run(dir.path(), &["region", "--q", "x", "--r", "2"]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("malformed rational"));
}

#[test]
fn heat_kernel_has_unit_mass() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["kernel", "--i", "1", "--s", "1", "--t", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let v: f64 = stdout(&o).trim().parse().unwrap();
    assert!((v - 1.0).abs() <= 1e-6, "{v}");
}

#[test]
fn unweighted_unit_ball_has_its_volume() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["ballint", "--gamma", "0", "--delta", "0", "--r", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let v: f64 = stdout(&o).lines().next().unwrap().trim().parse().unwrap();
    assert!((v - 4.0 * std::f64::consts::PI / 3.0).abs() <= 1e-9, "{v}");
    let csv = fs::read_to_string(dir.path().join("ballint.csv")).unwrap();
    assert!(csv.starts_with("gamma,delta,center_x"));
}

#[test]
fn muckenhoupt_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let bounded = run(dir.path(), &["muckenhoupt", "--alpha", "0.2", "--beta", "0", "--q", "2"]);
    assert_eq!(bounded.status.code(), Some(0));
    assert_eq!(stdout(&bounded).trim(), "bounded");
    let power = run(dir.path(), &["muckenhoupt", "--alpha", "0", "--beta", "0.7", "--q", "1.5"]);
    assert_eq!(stdout(&power).trim(), "power(0.2)");
    assert!(dir.path().join("muckenhoupt.summary.json").exists());
}

#[test]
fn heat_preset_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["decay", "--preset", "heat"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("pass 3 fail 0"));
}

#[test]
fn guard_violation_is_a_configuration_error() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["decay", "--a", "1", "--n", "64", "--half-width", "12", "--tmin", "1", "--tmax", "32", "--n-times", "8"];
    let o = run(dir.path(), &args);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("max safe t = "));
}

#[test]
fn rerun_reproduces_the_table() {
    let first = tempfile::tempdir().unwrap();
    let second = tempfile::tempdir().unwrap();
    let o = run(first.path(), &["muckenhoupt", "--alpha", "0.3", "--beta", "0.1", "--q", "2", "--radii", "12"]);
    assert_eq!(o.status.code(), Some(0));
    let manifest = first.path().join("muckenhoupt.manifest.json");
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(&manifest).unwrap()).unwrap();
    assert_eq!(m["command"], "muckenhoupt");
    assert_eq!(m["seed"], 0);
    let again = run(second.path(), &["rerun", manifest.to_str().unwrap()]);
    assert_eq!(again.status.code(), Some(0));
    let a = fs::read(first.path().join("muckenhoupt.csv")).unwrap();
    let b = fs::read(second.path().join("muckenhoupt.csv")).unwrap();
    assert_eq!(a, b);
}
