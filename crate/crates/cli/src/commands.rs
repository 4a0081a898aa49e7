//! Subcommand execution, orbit-table cache and output envelopes.

use crate::config::{Command, Format, RunConfig};
use pscatter::eisenstein::{eisenstein, phi_scatter};
use pscatter::green::SpectralFunctionHandle;
use pscatter::maass::{critical_zero_scan, find_small_eigenvalues, load_maass_dataset, CriticalEvaluator, MaassDataset, SpectralFunction};
use pscatter::orbits::{enumerate_orbits, OrbitTable};
use pscatter::residue::run_synthetic_suite;
use pscatter::trace::{choose_sigma, first_term_direct, geometric_identity_check, sample_ratio, trace_report, DiffractiveParams, SigmaChoice, TraceParams};
use pscatter::transform::{LineQuad, TestFunction};
use pscatter::{c64, Error, CODE_VERSION};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use std::path::PathBuf;
use std::sync::Arc;

pub const SCHEMA_VERSION: u32 = 1;
pub const MIN_COEFFS: usize = 50;

/// Flat rows for CSV next to the structured JSON result.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(columns: &[&str]) -> Self {
        Table { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }
}

#[derive(Debug, Clone)]
pub struct Artifact {
    pub command: &'static str,
    pub result: Value,
    pub table: Table,
    pub passed: bool,
}

#[derive(Debug)]
pub enum RunError {
    Data(String),
    Failed(String),
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        match e {
            Error::Data(_) | Error::Io(_) | Error::Json(_) => RunError::Data(e.to_string()),
            _ => RunError::Failed(e.to_string()),
        }
    }
}

fn f(x: f64) -> String {
    format!("{x:?}")
}

pub fn cache_path(cfg: &RunConfig) -> PathBuf {
    let key = format!("{CODE_VERSION}|{:?}|{:?}|{:?}", cfg.z0.x, cfg.z0.y, cfg.radius);
    let digest = hex::encode(Sha256::digest(key.as_bytes()));
    cfg.cache_dir.join(format!("orbits-{}.txt", &digest[..16]))
}

/// Orbit table from the cache, enumerating and storing it on a miss.
pub fn orbit_table(cfg: &RunConfig) -> Result<(Arc<OrbitTable>, bool), RunError> {
    let path = cache_path(cfg);
    if let Ok(t) = OrbitTable::load(&path) {
        return Ok((Arc::new(t), true));
    }
    let t = enumerate_orbits(&cfg.z0, cfg.radius)?;
    std::fs::create_dir_all(&cfg.cache_dir).map_err(|e| RunError::Data(format!("cache dir {}: {e}", cfg.cache_dir.display())))?;
    t.save(&path)?;
    Ok((Arc::new(t), false))
}

fn handle(cfg: &RunConfig) -> Result<SpectralFunctionHandle, RunError> {
    let (t, hit) = orbit_table(cfg)?;
    eprintln!("orbit table: {} ({})", cache_path(cfg).display(), if hit { "cache hit" } else { "computed" });
    Ok(SpectralFunctionHandle::from_table(t, cfg.alpha)?)
}

fn dataset(cfg: &RunConfig) -> Result<Option<MaassDataset>, RunError> {
    match &cfg.maass {
        Some(p) => load_maass_dataset(p, MIN_COEFFS).map(Some).map_err(|e| RunError::Data(format!("maass dataset {}: {e}", p.display()))),
        None => Ok(None),
    }
}

pub fn run(cmd: &Command, cfg: &RunConfig) -> Result<Artifact, RunError> {
    match cmd {
        Command::Orbits => orbits(cfg),
        Command::Spectral { re, im_from, im_to, points } => spectral(cfg, *re, *im_from, *im_to, *points),
        Command::Eisenstein { re, im_from, im_to, points } => eisenstein_cmd(cfg, *re, *im_from, *im_to, *points),
        Command::Eigenvalues => eigenvalues(cfg),
        Command::GeometricCheck => geometric(cfg),
        Command::SyntheticCheck { configurations } => synthetic(cfg, *configurations),
        Command::TraceReport => trace(cfg),
    }
}

fn grid(from: f64, to: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![from];
    }
    (0..n).map(|i| from + (to - from) * i as f64 / (n - 1) as f64).collect()
}

fn orbits(cfg: &RunConfig) -> Result<Artifact, RunError> {
    let (t, hit) = orbit_table(cfg)?;
    eprintln!("orbit table: {}", if hit { "cache hit" } else { "computed" });
    let groups = t.length_groups();
    let mut table = Table::new(&["length", "multiplicity"]);
    for g in &groups {
        table.push(vec![f(g.length), g.multiplicity.to_string()]);
    }
    let result = json!({
        "z0": [t.z0.x, t.z0.y],
        "radius": t.radius,
        "stabilizer_order": t.stabilizer_order,
        "count": t.entries.len(),
        "lengths": groups.iter().map(|g| json!([g.length, g.multiplicity])).collect::<Vec<_>>(),
    });
    Ok(Artifact { command: "orbits", result, table, passed: true })
}

fn spectral(cfg: &RunConfig, re: f64, im_from: f64, im_to: f64, n: usize) -> Result<Artifact, RunError> {
    let h = handle(cfg)?;
    let ds = dataset(cfg)?;
    let critical = match &ds {
        Some(d) => Some(CriticalEvaluator::new(&h, d, Default::default())?),
        None => None,
    };
    let sf = SpectralFunction::new(h.clone(), critical);
    let mut table = Table::new(&["s_re", "s_im", "value_re", "value_im", "error_estimate", "status"]);
    let mut rows = Vec::new();
    for im in grid(im_from, im_to, n) {
        let s = c64(re, im);
        let err = if re > 1.0 { h.s_alpha_orbit(s).map(|o| o.corrected_error).unwrap_or(f64::NAN) } else { f64::NAN };
        match sf.eval(s) {
            Ok(v) => {
                table.push(vec![f(re), f(im), f(v.re), f(v.im), f(err), "ok".into()]);
                rows.push(json!({"s": [re, im], "value": [v.re, v.im], "error_estimate": if err.is_nan() { Value::Null } else { json!(err) }}));
            }
            Err(e) => {
                table.push(vec![f(re), f(im), String::new(), String::new(), String::new(), e.to_string()]);
                rows.push(json!({"s": [re, im], "error": e.to_string()}));
            }
        }
    }
    let result = json!({"beta": h.beta, "c0": h.c0, "c0_error_estimate": h.c0_error, "coupling_phase": h.coupling_phase(), "values": rows});
    Ok(Artifact { command: "spectral", result, table, passed: true })
}

fn eisenstein_cmd(cfg: &RunConfig, re: f64, im_from: f64, im_to: f64, n: usize) -> Result<Artifact, RunError> {
    let mut table = Table::new(&["s_re", "s_im", "value_re", "value_im", "fe_residual"]);
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for im in grid(im_from, im_to, n) {
        let s = c64(re, im);
        let e = eisenstein(&cfg.z0, s)?;
        let refl = phi_scatter(s)? * eisenstein(&cfg.z0, c64(1.0, 0.0) - s)?;
        let res = (e - refl).norm() / e.norm().max(1.0);
        worst = worst.max(res);
        table.push(vec![f(re), f(im), f(e.re), f(e.im), f(res)]);
        rows.push(json!({"s": [re, im], "value": [e.re, e.im], "fe_residual": res}));
    }
    let passed = worst < cfg.tolerance.max(1e-8);
    Ok(Artifact { command: "eisenstein", result: json!({"z": [cfg.z0.x, cfg.z0.y], "max_fe_residual": worst, "values": rows}), table, passed })
}

fn eigenvalues(cfg: &RunConfig) -> Result<Artifact, RunError> {
    let h = handle(cfg)?;
    let roots = find_small_eigenvalues(&h, 0.52, 8.0, 60)?;
    let mut table = Table::new(&["kind", "v_or_r", "lambda", "residual"]);
    let mut passed = true;
    for r in &roots {
        passed &= r.residual < 1e-10;
        table.push(vec!["small".into(), f(r.v), f(0.25 - r.v * r.v), f(r.residual)]);
    }
    let scan = match dataset(cfg)? {
        Some(d) => {
            let ev = CriticalEvaluator::new(&h, &d, Default::default())?;
            let z = critical_zero_scan(&ev, 0.05, d.r_max(), 600, 1e-8, 1e-3)?;
            for r in &z {
                table.push(vec!["critical".into(), f(*r), f(0.25 + r * r), String::new()]);
            }
            json!(z)
        }
        None => Value::String("unavailable: no Maass dataset".into()),
    };
    let small: Vec<Value> = roots.iter().map(|r| json!({"v": r.v, "s": 0.5 + r.v, "lambda": 0.25 - r.v * r.v, "bracket": [r.bracket.0, r.bracket.1], "residual": r.residual})).collect();
    Ok(Artifact { command: "eigenvalues", result: json!({"small_eigenvalues": small, "critical_zero_scan": scan}), table, passed })
}

fn sigma_choice(cfg: &RunConfig, h: &SpectralFunctionHandle) -> Result<SigmaChoice, RunError> {
    Ok(match cfg.sigma {
        Some(s) => SigmaChoice { sigma: s, margin: sample_ratio(h, s, 40.0, 200)?, tested: vec![] },
        None => choose_sigma(h)?,
    })
}

fn geometric(cfg: &RunConfig) -> Result<Artifact, RunError> {
    let h = handle(cfg)?;
    let test = TestFunction::gaussian(cfg.a)?;
    let q = LineQuad::default();
    let sigma = sigma_choice(cfg, &h)?;
    let lmax = cfg.lmax.unwrap_or(h.lengths.radius);
    let params = DiffractiveParams::for_test_function(&test, cfg.kmax, lmax);
    let g = geometric_identity_check(&test, &h, &sigma, params, &q)?;
    let k1 = first_term_direct(&test, &h, lmax, sigma.sigma, &q)?;
    let k1_residual = g.diffractive.terms.first().map_or(0.0, |t| (t - k1).abs());
    let mut table = Table::new(&["quantity", "value"]);
    table.push(vec!["log_side".into(), f(g.log_side.value)]);
    table.push(vec!["smooth".into(), f(g.diffractive.smooth)]);
    for (k, t) in g.diffractive.terms.iter().enumerate() {
        table.push(vec![format!("k{}", k + 1), f(*t)]);
    }
    table.push(vec!["k1_direct".into(), f(k1)]);
    table.push(vec!["residual".into(), f(g.residual)]);
    table.push(vec!["budget".into(), f(g.budget)]);
    let passed = g.passed;
    let result = json!({"check": g, "k1_direct": k1, "k1_residual": k1_residual});
    Ok(Artifact { command: "geometric-check", result, table, passed })
}

fn synthetic(cfg: &RunConfig, n: usize) -> Result<Artifact, RunError> {
    let s = run_synthetic_suite(cfg.seed, n)?;
    let tol = 1e-8;
    let passed = s.winding_mismatches == 0 && s.max_contour_residual < tol && s.max_lemma_residual < tol && s.max_truncated_residual < tol;
    let mut table = Table::new(&["quantity", "value"]);
    table.push(vec!["seed".into(), s.seed.to_string()]);
    table.push(vec!["configurations".into(), s.configurations.to_string()]);
    table.push(vec!["max_contour_residual".into(), f(s.max_contour_residual)]);
    table.push(vec!["winding_mismatches".into(), s.winding_mismatches.to_string()]);
    table.push(vec!["max_lemma_residual".into(), f(s.max_lemma_residual)]);
    table.push(vec!["max_truncated_residual".into(), f(s.max_truncated_residual)]);
    Ok(Artifact { command: "synthetic-check", result: serde_json::to_value(&s).map_err(Error::from)?, table, passed })
}

fn trace(cfg: &RunConfig) -> Result<Artifact, RunError> {
    let h = handle(cfg)?;
    let ds = dataset(cfg)?;
    let test = TestFunction::gaussian(cfg.a)?;
    let params = TraceParams { kmax: cfg.kmax, lmax: cfg.lmax, delta: cfg.delta, sigma: cfg.sigma };
    let r = trace_report(&test, &h, ds.as_ref(), params, &LineQuad::default())?;
    let opt = |v: Option<f64>| v.map(f).unwrap_or_else(|| "unavailable".into());
    let mut table = Table::new(&["quantity", "value"]);
    table.push(vec!["lhs".into(), opt(r.lhs.as_ref().map(|l| l.total))]);
    table.push(vec!["smooth_term".into(), f(r.smooth_term)]);
    table.push(vec!["delta_term".into(), f(r.delta_term)]);
    table.push(vec!["scattering_term".into(), opt(r.scattering_term)]);
    table.push(vec!["diffractive_sum".into(), f(r.diffractive_sum)]);
    table.push(vec!["rhs".into(), opt(r.rhs)]);
    table.push(vec!["residual".into(), opt(r.residual)]);
    table.push(vec!["budget".into(), f(r.budget.total)]);
    let passed = r.passed().unwrap_or(true);
    let mut result = serde_json::to_value(&r).map_err(Error::from)?;
    if r.lhs.is_none() {
        result["lhs"] = Value::String("unavailable".into());
    }
    Ok(Artifact { command: "trace-report", result, table, passed })
}

/// Bytes of the artifact in the requested format.
pub fn render(a: &Artifact, cfg: &RunConfig) -> String {
    match cfg.format {
        Format::Json => {
            let env = json!({
                "schema_version": SCHEMA_VERSION,
                "code_version": CODE_VERSION,
                "command": a.command,
                "config": cfg,
                "passed": a.passed,
                "result": a.result,
            });
            serde_json::to_string_pretty(&env).unwrap_or_default() + "\n"
        }
        Format::Csv => {
            let mut out = String::new();
            out.push_str("schema_version,");
            out.push_str(&a.table.columns.join(","));
            out.push('\n');
            for row in &a.table.rows {
                out.push_str(&SCHEMA_VERSION.to_string());
                for cell in row {
                    out.push(',');
                    if cell.contains(',') || cell.contains('"') {
                        out.push_str(&format!("\"{}\"", cell.replace('"', "\"\"")));
                    } else {
                        out.push_str(cell);
                    }
                }
                out.push('\n');
            }
            out
        }
    }
}
