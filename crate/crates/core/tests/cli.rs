use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const VBS_SINGLE: &str = r#"
engine = "vbs"
rng_seed = 7
[lattice]
num_sites = 10
[protocol]
kind = "single_switch"
coupling = 1.0
total_time = 6.283185307179586
[initial_state]
kind = "triplet_product"
[time_grid]
kind = "uniform"
step = 0.3141592653589793
"#;

const TEBD_STARVED: &str = r#"
engine = "tebd"
[lattice]
num_sites = 12
[protocol]
kind = "homogeneous_switch"
coupling = 1.0
total_time = 4.0
[initial_state]
kind = "triplet_product"
[numerics]
chi_max = 2
truncation_budget = 1e-9
[time_grid]
kind = "uniform"
step = 0.5
"#;

const ED_HOMOGENEOUS: &str = r#"
engine = "ed"
[lattice]
num_sites = 8
[protocol]
kind = "homogeneous_switch"
coupling = 1.0
total_time = 4.0
[initial_state]
kind = "triplet_product"
[time_grid]
kind = "uniform"
step = 0.1
[observables]
correlations_l_max = 4
noise_q_points = 8
"#;

fn superlattice(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_superlattice")).args(args).current_dir(cwd).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn validate_config_prints_the_normalized_form() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", VBS_SINGLE);
    let out = superlattice(&["validate-config", &cfg, "--set", "numerics.chi_max=32"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("chi_max = 32") && text.contains("engine = \"vbs\""), "{text}");
}

#[test]
fn incompatible_engine_and_lattice_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", VBS_SINGLE);
    let out = superlattice(&["validate-config", &cfg, "--set", "engine=itebd"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("engine"));
    let out = superlattice(&["run", &cfg, "--set", "bogus_key=1"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn vbs_single_switch_run_writes_series_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", VBS_SINGLE);
    let out = superlattice(&["run", &cfg, "--output-dir", "out"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let run = dir.path().join("out");
    let manifest = json(&run.join("manifest.json"));
    assert_eq!(manifest["status"], "completed");
    assert_eq!(manifest["samples"], 21);
    assert!(run.join("series.csv").exists() && run.join("series.json").exists());
    // the single switch is tracked in closed form, without a state to checkpoint
    assert!(manifest["checkpoint"].is_null());

    let csv = std::fs::read_to_string(run.join("series.csv")).unwrap();
    let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
    let last: Vec<f64> = csv.lines().last().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    let tz_even = header.iter().position(|h| *h == "tz_even").unwrap();
    // one full period T = 2π restores the triplet product
    assert!((last[tz_even] - 1.0).abs() < 1e-12);
}

#[test]
fn periodic_vbs_run_checkpoints_the_final_matching() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", VBS_SINGLE);
    let out = superlattice(
        &[
            "run",
            &cfg,
            "--output-dir",
            "out",
            "--set",
            "protocol={kind=\"periodic_switch\", coupling=1.0, num_switches=3}",
            "--set",
            "time_grid={kind=\"stroboscopic\"}",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest = json(&dir.path().join("out/manifest.json"));
    assert_eq!(manifest["samples"], 4);
    let bonds = json(&dir.path().join("out").join(manifest["checkpoint"].as_str().unwrap()));
    assert_eq!(bonds.as_array().unwrap().len(), 5);
}

#[test]
fn budget_violation_exits_with_code_3_and_keeps_the_partial_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", TEBD_STARVED);
    let out = superlattice(&["run", &cfg, "--output-dir", "out"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    let manifest = json(&dir.path().join("out/manifest.json"));
    assert_eq!(manifest["status"], "failed");
    assert!(manifest["error"].as_str().unwrap().contains("truncation"), "{manifest}");
    assert!(manifest["samples"].as_u64().unwrap() >= 1);
}

#[test]
fn analyze_reports_averages_horizon_peak_and_comparison() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", ED_HOMOGENEOUS);
    assert_eq!(superlattice(&["run", &cfg, "--output-dir", "a"], dir.path()).status.code(), Some(0));
    let out = superlattice(&["run", &cfg, "--output-dir", "b", "--set", "numerics.krylov_tol=1e-12"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let out = superlattice(
        &[
            "analyze",
            "a/series.csv",
            "--average",
            "1.0:4.0",
            "--channels",
            "tz_even,s_odd",
            "--front-epsilon",
            "1e-3",
            "--peak",
            "0.3:3.0",
            "--compare",
            "b/series.csv",
            "--output",
            "report.json",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&dir.path().join("report.json"));
    let avg = report["quasistationary_average"]["tz_even"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&avg));
    assert!(report["horizon"].is_object());
    assert!(report["peak"]["q"].as_f64().is_some());
    assert!(report["max_abs_deviation"]["tz_even"].as_f64().unwrap() < 1e-8);
}

#[test]
fn sweep_runs_each_value_into_its_own_directory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", ED_HOMOGENEOUS);
    let out = superlattice(
        &["sweep", &cfg, "--param", "protocol.coupling", "--values", "0.5,1.0", "--output-dir", "sw"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let index = json(&dir.path().join("sw/sweep.json"));
    assert_eq!(index.as_array().unwrap().len(), 2);
    for v in ["0.5", "1.0"] {
        assert!(dir.path().join(format!("sw/protocol.coupling={v}/series.csv")).exists());
    }
}
