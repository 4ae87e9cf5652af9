use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn pathrep(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pathrep")).args(args).arg("--out").arg(out).output().expect("binary runs")
}

#[test]
fn simulate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for p in [&a, &b] {
        let o = pathrep(&["simulate", "--seed", "11", "--paths", "4", "--grid", "128"], p);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let (x, y) = (fs::read(a.join("paths.csv")).unwrap(), fs::read(b.join("paths.csv")).unwrap());
    assert_eq!(x, y);
    let text = String::from_utf8(x).unwrap();
    assert!(text.starts_with("time,path_0,path_1,path_2,path_3\n"));
    assert_eq!(text.lines().count(), 130);
}

#[test]
fn window_violation_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = pathrep(&["replicate-holder", "--seed", "1", "--alpha", "0.4", "--paths", "2"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("window"));
}

#[test]
fn missing_seed_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = pathrep(&["simulate"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn brownian_motion_fails_worst_case_condition_at_three_quarters() {
    let dir = tempfile::tempdir().unwrap();
    let o = pathrep(&["check-class", "--seed", "1", "--hurst", "0.5", "--alpha", "0.75", "--grid", "128"], dir.path());
    assert!(o.status.success());
    let csv = fs::read_to_string(dir.path().join("conditions.csv")).unwrap();
    assert!(csv.lines().any(|l| l.starts_with("worst_case_bound,false,")));
    assert!(csv.lines().any(|l| l.starts_with("positive_covariance,true,")));
}

#[test]
fn replicate_dist_reports_ks_and_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let o = pathrep(&["replicate-dist", "--seed", "3", "--paths", "60", "--grid", "512", "--n-max", "20"], dir.path());
    assert!(matches!(o.status.code(), Some(0 | 1)));
    let summary: toml::Table = fs::read_to_string(dir.path().join("summary.toml")).unwrap().parse().unwrap();
    let s = summary["summary"].as_table().unwrap();
    let d = s["ks_d"].as_float().unwrap();
    assert!((0.0..=1.0).contains(&d));
    assert_eq!(s["pass"].as_bool().unwrap(), o.status.success());
    assert_eq!(fs::read_to_string(dir.path().join("samples.csv")).unwrap().lines().count(), 61);
}

#[test]
fn config_file_is_echoed_verbatim() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    let raw = "# stationary run\ncommand = \"verify-crossing\"\nseed = 5\npaths = 4000\nlags = [0.05, 0.1]\n\n\
               [model]\nkind = \"stationary_exp\"\nalpha = 0.75\n";
    fs::write(&cfg, raw).unwrap();
    let out = dir.path().join("out");
    let o = pathrep(&["verify-crossing", "--config", cfg.to_str().unwrap()], &out);
    assert!(matches!(o.status.code(), Some(0 | 1)), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(pathrep::io::summary_config(&out.join("summary.toml")).unwrap(), raw);
    assert_eq!(fs::read_to_string(out.join("crossings.csv")).unwrap().lines().count(), 3);
}

#[test]
fn config_for_another_command_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "command = \"simulate\"\nseed = 1\n").unwrap();
    let o = pathrep(&["ito-check", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1));
}
