//! End-to-end runs of the `lattice-waves` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lattice-waves"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Knobs that keep the heavier analyses quick.
const LIGHT: &[&str] = &[
    "--nu-list",
    "0.4",
    "--eps-list",
    "0.4,0.3",
    "--set",
    "beale.scan=false",
    "--set",
    "spectral.samples=1",
    "--set",
    "simulate.nu=0.4",
    "--set",
    "simulate.domain_half_length=80",
    "--set",
    "simulate.t_end=5",
];

#[test]
fn dispersion_writes_report_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["dispersion", "--kappa", "1", "--w", "2"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report = json(&dir.path().join("spectral_report.json"));
    let cs = report["sound_speed"].as_f64().unwrap();
    assert!((cs - (4.0 * 2.0 / 6.0f64).sqrt()).abs() < 1e-14);
    assert!((report["omega_star"].as_f64().unwrap() - 1.760754).abs() < 1e-6);
    let table = report["multiplicity_table"].as_array().unwrap();
    assert_eq!(table[0]["multiplicity"], 4);
    let manifest = json(&dir.path().join("manifest.json"));
    assert_eq!(manifest["all_checks_pass"], true);
    assert_eq!(manifest["command"], "dispersion");
    assert!(manifest["version"].as_str().unwrap().starts_with('v'));
    assert!(manifest["wall_time_seconds"].as_f64().unwrap() >= 0.0);
    // Every knob is echoed.
    assert_eq!(manifest["config"]["simulate"]["kdv_dt"], 0.02);
    assert_eq!(manifest["config"]["seed"], 0xD1EE4);
    let csv = fs::read_to_string(dir.path().join("branches.csv")).unwrap();
    assert!(csv.starts_with("k,lambda_minus,lambda_plus,dispersion_at_sound_speed\n"));
    assert!(!csv.contains('\r'));
    let second = csv.lines().nth(2).unwrap();
    let mantissa = second.split(',').next().unwrap().split('e').next().unwrap().replace('.', "");
    assert_eq!(mantissa.len(), 17, "{second}");
}

#[test]
fn invalid_parameters_exit_with_config_status() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["dispersion", "--w=-1"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("w must be"), "{}", stderr(&o));
}

#[test]
fn flags_override_the_config_file_and_unknown_keys_fail() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "seed = 7\n[params]\nw = 3.0\n[dispersion]\npoints = 11\n").unwrap();
    let out = dir.path().join("out");
    let o = run(&["dispersion", "--config", cfg.to_str().unwrap(), "--w", "2"], &out);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let manifest = json(&out.join("manifest.json"));
    assert_eq!(manifest["params"]["w"], 2.0);
    assert_eq!(manifest["config"]["seed"], 7);
    assert_eq!(fs::read_to_string(out.join("branches.csv")).unwrap().lines().count(), 12);

    fs::write(&cfg, "[params]\nmass_ratio = 3.0\n").unwrap();
    let o = run(&["dispersion", "--config", cfg.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("mass_ratio"), "{}", stderr(&o));
}

#[test]
fn general_dimer_is_rejected_by_symmetric_analyses() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["beale", "--kappa", "2", "--w", "3"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("mass dimer"), "{}", stderr(&o));
    let o = run(&["nondegeneracy", "--kappa", "2", "--w", "3"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn csv_artifacts_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = run(&["spectral", "--set", "spectral.samples=2", "--seed", "0x2A"], out);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    for name in ["projection_checks.csv", "checks.csv"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn format_selects_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["profile", "--format", "json", "--eps-list", "0.2"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(dir.path().join("profile_eps0.2.json").exists());
    assert!(!dir.path().join("profile_eps0.2.csv").exists());
    assert!(dir.path().join("manifest.json").exists());
}

#[test]
fn spring_dimer_nanopteron_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["beale", "--dimer", "spring", "--nu-list", "0.4", "--set", "beale.scan=false"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("nanopteron_nu0.4.csv")).unwrap();
    assert!(csv.starts_with("x,rho1,rho2\n"));
    let side = json(&dir.path().join("nanopteron_nu0.4.json"));
    assert!(side["residual"].as_f64().unwrap() <= 1e-11);
    assert!(side["ripple_amplitude"].as_f64().unwrap() > 0.0);
}

#[test]
fn numerical_failures_exit_with_status_3() {
    let dir = tempfile::tempdir().unwrap();
    // Too few modes to resolve the ripple.
    let o = run(&["beale", "--nu-list", "0.4", "--modes", "16", "--set", "beale.scan=false"], dir.path());
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let manifest = json(&dir.path().join("manifest.json"));
    assert_eq!(manifest["all_checks_pass"], false);
    assert!(manifest["errors"][0].as_str().unwrap().contains("under-resolved"));

    // A check that cannot hold.
    let mut args = vec!["simulate", "--set", "simulate.energy_tol=1e-30"];
    args.extend_from_slice(LIGHT);
    let o = run(&args, &dir.path().join("sim"));
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("check failed: energy_drift"));
}

#[test]
fn full_report_composes_every_analysis() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["full-report"];
    args.extend_from_slice(LIGHT);
    let o = run(&args, dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for sub in ["dispersion", "spectral", "nondegeneracy", "profile", "beale", "simulate"] {
        assert!(dir.path().join(sub).join("checks.csv").exists(), "{sub}");
    }
    let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert!(summary.starts_with("analysis,quantity,value\n"));
    assert!(summary.contains("dispersion,sound_speed,"));
    let manifest = json(&dir.path().join("manifest.json"));
    assert_eq!(manifest["all_checks_pass"], true);
    let artifacts = manifest["artifacts"].as_array().unwrap();
    assert!(artifacts.iter().any(|a| a == "simulate/trace.csv"));
}
