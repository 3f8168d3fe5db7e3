use std::process::Command;

use graphon_hawkes::experiments::config::{KernelSpec, MemorySpec, ResponseSpec};
use graphon_hawkes::experiments::{self, presets, ExperimentConfig, ExperimentKind};
use graphon_hawkes::Error;

const SMALL: &str = r#"
experiment = "stability"
sizes = [40, 80]
replicas = 3
master_seed = 99
t_f = 0.25
grid = 16
kernel = { type = "constant", value = 1.0 }
response = { type = "linear", mu = 1.0 }
memory = { type = "exponential", alpha = 2.0 }
"#;

fn small() -> ExperimentConfig {
    ExperimentConfig::from_toml(SMALL).unwrap()
}

fn with_alpha(alpha: f64) -> ExperimentConfig {
    let mut cfg = small();
    cfg.memory = MemorySpec::Exponential { alpha };
    cfg
}

#[test]
fn check_examples() {
    let sub = experiments::run_check(&with_alpha(2.0)).unwrap();
    assert!(sub.stability.is_subcritical);
    assert!((sub.stability.gamma.unwrap() - 1.0).abs() < 1e-9);
    assert!(!experiments::run_check(&with_alpha(0.5)).unwrap().stability.is_subcritical);
    for alpha in [0.01, 0.5, 3.0] {
        let mut cfg = with_alpha(alpha);
        cfg.response = ResponseSpec::Constant { rate: 2.0 };
        let report = experiments::run_check(&cfg).unwrap().stability;
        assert_eq!(report.subcritical_product, 0.0);
        assert!(report.is_subcritical);
    }
}

#[test]
fn gate_is_coherent_with_check() {
    for alpha in [0.5, 0.99, 1.0, 1.01, 2.0] {
        let cfg = with_alpha(alpha);
        let subcritical = experiments::run_check(&cfg).unwrap().stability.is_subcritical;
        let mut tiny = cfg.clone();
        tiny.sizes = vec![16];
        tiny.replicas = 1;
        tiny.t_f = 0.01;
        match experiments::run_stability(&tiny) {
            Ok(_) => assert!(subcritical, "alpha = {alpha}"),
            Err(Error::Supercritical { .. }) => assert!(!subcritical, "alpha = {alpha}"),
            Err(e) => panic!("alpha = {alpha}: {e}"),
        }
    }
}

#[test]
fn stability_rows_are_consistent_with_trajectories() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small();
    cfg.output_dir = dir.path().to_path_buf();
    cfg.write_trajectories = true;
    let result = experiments::run_stability(&cfg).unwrap();
    assert_eq!(result.rows.len(), 6);
    let keys: Vec<_> = result.rows.iter().map(|r| (r.n, r.replica)).collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
    for row in &result.rows {
        assert!((0.0..=1.0).contains(&row.exceedance));
        let path = dir.path().join("trajectories").join(format!("stability_n{}_r{}.csv", row.n, row.replica));
        let mut rdr = csv::Reader::from_path(path).unwrap();
        let mut sup = 0.0_f64;
        for rec in rdr.records() {
            let rec = rec.unwrap();
            let t: f64 = rec[0].parse().unwrap();
            if t >= row.t_eps && t <= row.horizon {
                sup = sup.max(rec[1].parse().unwrap());
            }
        }
        assert_eq!(sup, row.sup_dist);
        assert!((row.horizon - ((row.n as f64).ceil() * 0.25 + row.t_eps)).abs() < 1e-12);
    }
}

#[test]
fn huge_eps_never_exceeded() {
    let mut cfg = small();
    cfg.eps = 10.0 * 1.0;
    let result = experiments::run_stability(&cfg).unwrap();
    assert!(result.rows.iter().all(|r| r.exceedance == 0.0 && r.exceedance_ell == 0.0 && r.within_eps));
}

#[test]
fn reruns_write_identical_tables() {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for dir in &dirs {
        let mut cfg = small();
        cfg.output_dir = dir.path().to_path_buf();
        experiments::run_stability(&cfg).unwrap().write_to(dir.path()).unwrap();
        cfg.experiment = ExperimentKind::NoiseScaling;
        experiments::run_noise_scaling(&cfg).unwrap().write_to(dir.path()).unwrap();
        experiments::run_finite_time(&cfg).unwrap().write_to(dir.path()).unwrap();
        experiments::run_graph_diag(&cfg).unwrap().write_to(dir.path()).unwrap();
    }
    for name in ["stability.csv", "stability_summary.csv", "noise.csv", "finite_time.csv", "graph_diag.csv", "graph_regularity.csv"] {
        let a = std::fs::read(dirs[0].path().join(name)).unwrap();
        let b = std::fs::read(dirs[1].path().join(name)).unwrap();
        assert!(!a.is_empty());
        assert_eq!(a, b, "{name}");
    }
}

#[test]
fn finite_time_starts_at_zero_distance() {
    let result = experiments::run_finite_time(&small()).unwrap();
    assert!(result.rows.iter().all(|r| r.initial_error == 0.0 && r.sup_error > 0.0));
    assert_eq!(result.medians.len(), 2);
}

#[test]
fn short_horizon_noise_vanishes() {
    let mut cfg = small();
    cfg.t_final = 1e-3;
    let result = experiments::run_noise_scaling(&cfg).unwrap();
    assert!(result.rows.iter().all(|r| r.sup_norm_sq < 1e-3));
}

#[test]
fn phase_needs_linear_response() {
    let mut cfg = small();
    cfg.response = ResponseSpec::Sigmoid { max_rate: 1.0, slope: 1.0, threshold: 0.0 };
    assert!(matches!(experiments::run_phase(&cfg), Err(Error::Config(_))));
}

#[test]
fn exponential_memory_is_required_for_particle_experiments() {
    let mut cfg = small();
    cfg.memory = MemorySpec::Tabulated { samples: vec![1.0, 0.5, 0.0], step: 0.5 };
    assert!(matches!(experiments::run_finite_time(&cfg), Err(Error::Config(_))));
    assert!(matches!(experiments::run_noise_scaling(&cfg), Err(Error::Config(_))));
    // the macroscopic run falls back to the Volterra solver alone
    let result = experiments::run_macro(&cfg).unwrap();
    assert!(result.nfe.is_none() && result.summary.lambda_gap < 1e-6);
}

#[test]
fn constant_kernel_has_no_regularity_defect() {
    let result = experiments::run_graph_diag(&small()).unwrap();
    assert!(result.regularity.iter().all(|r| r.r1 == 0.0 && r.r2 == 0.0 && r.s == 0.0));
    assert!(result.rows.iter().all(|r| r.max_norm_in == 1.0 && r.s_exact));
}

#[test]
fn presets_cover_every_kernel_family() {
    let kernels: Vec<_> = presets::preset_names().map(|n| presets::preset(n).unwrap().kernel).collect();
    assert!(kernels.iter().any(|k| matches!(k, KernelSpec::Constant { .. })));
    assert!(kernels.iter().any(|k| matches!(k, KernelSpec::Edd { .. })));
    assert!(kernels.iter().any(|k| matches!(k, KernelSpec::Sbm { .. })));
    assert!(kernels.iter().any(|k| matches!(k, KernelSpec::PNearest { .. })));
}

fn cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_graphon-hawkes"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .unwrap()
}

#[test]
fn cli_check_prints_one_json_object() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli(&["check", "preset:meanfield-linear", "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let value: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let keys: Vec<&str> = value.as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(keys.len(), 4);
    for k in ["r_inf", "product", "gamma", "subcritical"] {
        assert!(keys.contains(&k), "{k}");
    }
    assert!(dir.path().join("check.json").exists());
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("super.toml");
    std::fs::write(&config, SMALL.replace("alpha = 2.0", "alpha = 0.5")).unwrap();
    let out_dir = dir.path().join("out");
    let args = |cmd: &'static str| [cmd, config.to_str().unwrap(), "--out-dir", out_dir.to_str().unwrap()];
    assert_eq!(cli(&args("stability")).status.code(), Some(3));
    assert_eq!(cli(&args("check")).status.code(), Some(3));
    assert_eq!(cli(&["macro", "missing.toml"]).status.code(), Some(2));
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, SMALL.replace("sizes = [40, 80]", "sizes = [4]")).unwrap();
    assert_eq!(cli(&["check", bad.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn cli_runs_and_plots() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("small.toml");
    std::fs::write(&config, SMALL).unwrap();
    let out_dir = dir.path().join("out");
    let out = cli(&["graph-diag", config.to_str().unwrap(), "--out-dir", out_dir.to_str().unwrap(), "--seed", "5", "--threads", "1"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let plot = cli(&["plot", out_dir.to_str().unwrap()]);
    assert_eq!(plot.status.code(), Some(0));
    assert!(out_dir.join("graph_regularity.gp").exists());
    assert!(out_dir.join("graph_diag.gp").exists());
}
