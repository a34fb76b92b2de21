use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::Command;

use tempfile::TempDir;

const HEADER: &str = "mode,g,r,theta,tau0,x_exit,action,exact_exponent,flag_eq16a,flag_eq18a,flag_eq28";

fn run(dir: &Path, config: &str, extra: &[&str], env_out: Option<&Path>) -> i32 {
    let cfg = dir.join("config.json");
    fs::write(&cfg, config).unwrap();
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_tunnel-lab"));
    cmd.arg("--config").arg(&cfg).args(extra).env_remove("TUNNEL_LAB_OUT");
    if let Some(p) = env_out {
        cmd.env("TUNNEL_LAB_OUT", p);
    }
    cmd.status().unwrap().code().unwrap()
}

fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

fn out_flag(dir: &Path) -> [String; 2] {
    ["--out".to_string(), dir.display().to_string()]
}

#[test]
fn static_run_reports_exact_and_semiclassical_exponents() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let flag = out_flag(&out);
    let code = run(tmp.path(), r#"{"mode": "static", "g": 20, "output": {"plots": false}}"#, &[&flag[0], &flag[1]], None);
    assert_eq!(code, 0);
    let csv = fs::read_to_string(out.join("results.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), HEADER);
    let r = rows(&csv);
    assert_eq!(r.len(), 1);
    let action: f64 = r[0][6].parse().unwrap();
    let exact: f64 = r[0][7].parse().unwrap();
    assert!((action - PI * 10.0).abs() < 1e-9, "{action}");
    assert!((exact - PI * 10.0).abs() < 0.05 * PI * 10.0, "{exact}");
    assert_eq!(&r[0][8..], ["true", "true", "true"]);
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["status"], "ok");
    assert_eq!(summary["results"][0]["flag_eq28"], true);
}

#[test]
fn theta_sweep_gives_one_row_per_point() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let flag = out_flag(&out);
    let cfg = r#"{"mode": "sweep", "g": 20,
        "drive": {"shape": "lorentzian_cubed", "amplitude_ratio": 0.01, "width": 1},
        "sweep": [{"name": "theta", "values": [0.25, 0.5, 1, 2]}]}"#;
    assert_eq!(run(tmp.path(), cfg, &[&flag[0], &flag[1]], None), 0);
    let r = rows(&fs::read_to_string(out.join("results.csv")).unwrap());
    assert_eq!(r.len(), 4);
    let ratio: Vec<f64> = r.iter().map(|row| row[6].parse::<f64>().unwrap() / 20.0).collect();
    for (row, th) in r.iter().zip([0.25, 0.5, 1.0, 2.0]) {
        assert_eq!(row[3].parse::<f64>().unwrap(), th);
        assert_eq!(row.len(), 11);
        // r = 0.01 at g = 20 is outside the short-pulse condition.
        assert_eq!(row[10], "false");
    }
    // Below theta = 1 the exponent follows the tunneling time; above it the
    // pulse stops helping and A/g closes in on pi/2.
    assert!(ratio.windows(2).all(|w| w[1] > w[0]), "{ratio:?}");
    assert!((ratio[2] - PI / 2.0).abs() < 0.06 * PI / 2.0, "{ratio:?}");
    assert!((ratio[3] - PI / 2.0).abs() < (ratio[2] - PI / 2.0).abs(), "{ratio:?}");
    assert!(out.join("plot.svg").exists());
}

#[test]
fn empty_axis_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let flag = out_flag(&out);
    let cfg = r#"{"mode": "sweep", "sweep": [{"name": "theta", "values": []}]}"#;
    assert_eq!(run(tmp.path(), cfg, &[&flag[0], &flag[1]], None), 1);
    assert!(!out.join("results.csv").exists());
    assert_eq!(run(tmp.path(), r#"{"mode": "static", "unknown": 1}"#, &[&flag[0], &flag[1]], None), 1);
}

#[test]
fn numerical_failure_is_named_in_the_summary() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let flag = out_flag(&out);
    let cfg = r#"{"mode": "resonance", "resonance": {"parameter": "lambda", "lo": 0.1, "hi": 0.3, "scan": 2},
        "output": {"plots": false}}"#;
    assert_eq!(run(tmp.path(), cfg, &[&flag[0], &flag[1]], None), 2);
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["status"], "error");
    assert_eq!(summary["failure"]["error"], "NoSignChangeError");
}

#[test]
fn environment_overrides_out_flag() {
    let tmp = TempDir::new().unwrap();
    let (flag_dir, env_dir) = (tmp.path().join("flag"), tmp.path().join("env"));
    let flag = out_flag(&flag_dir);
    let cfg = r#"{"mode": "sweep", "drive": {"shape": "lorentzian_cubed", "amplitude_ratio": 0.05, "width": 1},
        "sweep": [{"name": "g", "values": [20]}], "output": {"plots": false}}"#;
    assert_eq!(run(tmp.path(), cfg, &[&flag[0], &flag[1]], Some(&env_dir)), 0);
    assert!(env_dir.join("results.csv").exists());
    assert!(!flag_dir.exists());
}

#[test]
fn identical_configs_give_identical_files() {
    let cases = [
        r#"{"mode": "sweep", "drive": {"shape": "lorentzian_cubed", "amplitude_ratio": 0.05, "width": 1},
            "sweep": [{"name": "g", "values": [10, 20]}, {"name": "theta", "from": 0.5, "to": 2, "count": 4}]}"#,
        r#"{"mode": "enhanced2d", "sweep": [{"name": "lambda", "values": [0.2, 0.4]}], "seed": 7}"#,
    ];
    for cfg in cases {
        let tmp = TempDir::new().unwrap();
        let mut outputs = Vec::new();
        for (k, jobs) in ["1", "2"].iter().enumerate() {
            let out = tmp.path().join(format!("run{k}"));
            let flag = out_flag(&out);
            assert_eq!(run(tmp.path(), cfg, &[&flag[0], &flag[1], "--jobs", jobs], None), 0);
            let csv = fs::read(out.join("results.csv")).unwrap();
            let json = fs::read(out.join("summary.json")).unwrap();
            outputs.push((csv, json));
        }
        assert!(outputs[0] == outputs[1], "outputs differ for {cfg}");
    }
}

#[test]
fn every_probability_row_carries_the_flags() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let flag = out_flag(&out);
    let cfg = r#"{"mode": "pulse", "g": 12, "drive": {"shape": "gaussian", "amplitude_ratio": 0.05, "width": 0.5},
        "exact_options": {"samples": 8}, "output": {"plots": false}}"#;
    let code = run(tmp.path(), cfg, &[&flag[0], &flag[1]], None);
    assert_eq!(code, 0);
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    for row in summary["results"].as_array().unwrap() {
        for key in ["flag_eq16a", "flag_eq18a", "flag_eq28"] {
            assert!(row[key].is_boolean(), "{key} missing in {row}");
        }
    }
}
