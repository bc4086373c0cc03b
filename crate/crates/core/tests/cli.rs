use std::path::Path;
use std::process::{Command, Output};

use twinosc::scan::ExperimentConfig;

fn simulate(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_simulate"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn small_point() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::preset("fig8").unwrap();
    cfg.horizon = 20.0;
    cfg.sample_dt = 0.5;
    cfg.settle_window = 5.0;
    cfg
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(simulate(&["--help"]).status.code(), Some(0));
    assert_eq!(simulate(&[]).status.code(), Some(1));
    assert_eq!(simulate(&["run"]).status.code(), Some(1));
    assert_eq!(simulate(&["run", "--preset", "fig4"]).status.code(), Some(1));
    assert_eq!(simulate(&["run", "/nonexistent/config.toml"]).status.code(), Some(1));
}

#[test]
fn unknown_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{}\nbogus_key = 3\n", small_point().to_toml());
    let path = write_config(dir.path(), "bad.toml", &text);
    let out = simulate(&["run", &path]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus_key"));
}

#[test]
fn numerical_failure_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_point();
    cfg.tolerances.rtol = 1e-300;
    cfg.tolerances.atol = 0.0;
    let path = write_config(dir.path(), "stiff.toml", &cfg.to_toml());
    let out = simulate(&["run", &path]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn run_output_is_self_describing_and_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), "point.toml", &small_point().to_toml());
    let out = simulate(&["run", &path]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut config = String::new();
    let mut inside = false;
    let mut rows = 0;
    for line in text.lines() {
        match line {
            "# [config]" => inside = true,
            "# [/config]" => inside = false,
            _ if inside => {
                config.push_str(line.trim_start_matches('#').strip_prefix("   ").unwrap_or(""));
                config.push('\n');
            }
            _ if !line.starts_with('#') && !line.starts_with("curve,") => rows += 1,
            _ => {}
        }
    }
    assert_eq!(rows, 41);
    assert!(text.contains("\ncurve,t,E_N,d,nu_minus,purity,s_x1x1,"));
    let replay = write_config(dir.path(), "replay.toml", &config);
    let again = simulate(&["run", &replay]);
    assert_eq!(String::from_utf8(again.stdout).unwrap(), text);
}

#[test]
fn jsonl_mirror_parses_line_by_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = write_config(dir.path(), "point.toml", &small_point().to_toml());
    let csv = dir.path().join("out.csv");
    let out = simulate(&["compare", &cfg_path, "--jsonl", "-o", csv.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(csv.with_extension("jsonl")).unwrap();
    let kinds: Vec<String> = text
        .lines()
        .map(|l| {
            let v: serde_json::Value = serde_json::from_str(l).unwrap();
            v["kind"].as_str().unwrap().to_string()
        })
        .collect();
    assert_eq!(&kinds[..4], ["header", "summary", "summary", "delta"]);
    assert_eq!(kinds.iter().filter(|k| *k == "sample").count(), 41);
}

#[test]
fn scans_mark_unstable_points_as_skipped() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_point();
    cfg.grid = vec![twinosc::scan::GridAxis::explicit(
        twinosc::scan::ScanParam::Lambda,
        vec![-1.2, 0.0, 0.5],
    )];
    cfg.system.omega2 = 1.0;
    let path = write_config(dir.path(), "scan.toml", &cfg.to_toml());
    let out = simulate(&["scan", &path]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "index,lambda,status,t_F,censored,outcome,peak_E_N,message");
    assert!(rows[1].starts_with("0,-1.2,skipped,nan,false,skipped,nan,"));
    assert!(rows[2].starts_with("1,0.0,ok,"));
    assert!(rows[3].starts_with("2,0.5,ok,"));
}
