use clap::Parser;
use pscatter::geometry::mobius_apply;
use pscatter::green::Coupling;
use pscatter_cli::config::{parse_config, Cli, Format, RunConfig};
use std::path::PathBuf;
use std::process::Command;

fn config(args: &[&str]) -> Result<RunConfig, String> {
    let mut argv = vec!["pscatter"];
    argv.extend_from_slice(args);
    argv.push("orbits");
    let cli = Cli::try_parse_from(argv).map_err(|e| e.to_string())?;
    parse_config(&cli.opts).map_err(|e| e.0)
}

fn temp_dir(tag: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("pscatter-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d
}

fn dataset_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/maass_psl2z.json")
}

fn bin(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_pscatter")).args(args).env_remove("PSCATTER_CACHE_DIR").output().unwrap()
}

#[test]
fn defaults() {
    let c = config(&[]).unwrap();
    assert_eq!((c.z0.x, c.z0.y), (0.0, 2.0));
    assert_eq!(c.alpha, Coupling::Finite(1.0));
    assert_eq!((c.a, c.radius, c.kmax), (1.0, 10.0, 6));
    assert_eq!(c.format, Format::Json);
}

#[test]
fn infinite_coupling() {
    assert_eq!(config(&["--alpha", "inf"]).unwrap().alpha, Coupling::Infinite);
    assert_eq!(config(&["--alpha", "-inf"]).unwrap().alpha, Coupling::Infinite);
    assert_eq!(config(&["--alpha", "-0.5"]).unwrap().alpha, Coupling::Finite(-0.5));
    assert!(config(&["--alpha", "foo"]).is_err());
}

#[test]
fn z0_is_reduced_and_reduction_recorded() {
    let c = config(&["--z0", "0.5", "0.1"]).unwrap();
    assert!(c.z0.x.abs() <= 0.5 && c.z0.x * c.z0.x + c.z0.y * c.z0.y >= 1.0 - 1e-12);
    let back = mobius_apply(&c.reduction, &pscatter::geometry::Point::new(0.5, 0.1).unwrap());
    assert!((back.x - c.z0.x).abs() < 1e-12 && (back.y - c.z0.y).abs() < 1e-12);
    assert_eq!(c.z0_input, [0.5, 0.1]);
}

#[test]
fn config_file_and_flag_precedence() {
    let d = temp_dir("cfg");
    let p = d.join("c.json");
    std::fs::write(&p, r#"{"alpha": "inf", "radius": 8, "a": 2.0}"#).unwrap();
    let ps = p.to_str().unwrap();
    let c = config(&["--config", ps, "--radius", "9"]).unwrap();
    assert_eq!(c.alpha, Coupling::Infinite);
    assert_eq!((c.radius, c.a), (9.0, 2.0));
    std::fs::write(&p, r#"{"alpha": 1, "colour": "red"}"#).unwrap();
    assert!(config(&["--config", ps]).unwrap_err().contains("colour"));
    assert!(config(&["--radius", "-1"]).is_err());
    assert!(config(&["--sigma", "0.4"]).is_err());
    std::fs::remove_dir_all(&d).unwrap();
}

#[test]
fn orbits_cache_gives_identical_bytes() {
    let d = temp_dir("cache");
    let cache = d.join("cache");
    let (o1, o2) = (d.join("a.json"), d.join("b.json"));
    let args = |o: &PathBuf| vec!["--radius".to_string(), "6".into(), "--cache-dir".into(), cache.to_str().unwrap().into(), "--out".into(), o.to_str().unwrap().into(), "orbits".into()];
    let a1: Vec<String> = args(&o1);
    let r1 = bin(&a1.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(r1.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&r1.stderr).contains("computed"));
    let a2: Vec<String> = args(&o2);
    let r2 = bin(&a2.iter().map(String::as_str).collect::<Vec<_>>());
    assert!(String::from_utf8_lossy(&r2.stderr).contains("cache hit"));
    assert_eq!(std::fs::read(&o1).unwrap(), std::fs::read(&o2).unwrap());
    let text = std::fs::read_to_string(&o1).unwrap();
    assert!(text.contains("\"schema_version\""));
    std::fs::remove_dir_all(&d).unwrap();
}

#[test]
fn synthetic_check_is_deterministic() {
    let r1 = bin(&["--seed", "3", "synthetic-check", "--configurations", "20"]);
    let r2 = bin(&["--seed", "3", "synthetic-check", "--configurations", "20"]);
    assert_eq!(r1.status.code(), Some(0));
    assert_eq!(r1.stdout, r2.stdout);
    let v: serde_json::Value = serde_json::from_slice(&r1.stdout).unwrap();
    assert_eq!(v["passed"], true);
    let res = &v["result"];
    for key in ["max_contour_residual", "max_lemma_residual", "max_truncated_residual"] {
        assert!(res[key].as_f64().unwrap() < 1e-8, "{key}");
    }
}

#[test]
fn csv_output_carries_schema_version() {
    let r = bin(&["--format", "csv", "eisenstein", "--points", "3"]);
    assert_eq!(r.status.code(), Some(0));
    let text = String::from_utf8(r.stdout).unwrap();
    assert!(text.lines().next().unwrap().contains("schema_version"));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn exit_codes() {
    assert_eq!(bin(&["--alpha", "foo", "orbits"]).status.code(), Some(2));
    assert_eq!(bin(&["no-such-command"]).status.code(), Some(2));
    let missing = bin(&["--maass", "/nonexistent/m.json", "eigenvalues"]);
    assert_eq!(missing.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("/nonexistent/m.json"));
}

#[test]
fn trace_report_without_dataset_is_degraded_not_failed() {
    let d = temp_dir("trace");
    let r = bin(&["--radius", "9", "--cache-dir", d.to_str().unwrap(), "trace-report"]);
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    let text = String::from_utf8(r.stdout).unwrap();
    assert!(text.contains("unavailable"));
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert!(v["result"]["diffractive_terms"].as_array().unwrap().len() == 6);
    std::fs::remove_dir_all(&d).unwrap();
}

#[test]
fn eigenvalues_with_dataset() {
    let d = temp_dir("eig");
    let r = bin(&["--radius", "9", "--cache-dir", d.to_str().unwrap(), "--maass", dataset_path().to_str().unwrap(), "eigenvalues"]);
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    std::fs::remove_dir_all(&d).unwrap();
}
