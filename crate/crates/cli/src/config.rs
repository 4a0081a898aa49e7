//! Run configuration: defaults, optional JSON file, command-line overrides.

use clap::{Args, Parser, Subcommand, ValueEnum};
use pscatter::geometry::{reduce_fund_domain, GroupElement, Point};
use pscatter::green::Coupling;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

pub const CACHE_ENV: &str = "PSCATTER_CACHE_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "pscatter", version, about = "Point scatterer on the modular surface")]
pub struct Cli {
    #[command(flatten)]
    pub opts: ConfigArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Enumerate orbit displacements of z0.
    Orbits,
    /// Spectral function along a vertical line.
    Spectral {
        #[arg(long, default_value_t = 1.5, allow_hyphen_values = true)]
        re: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        im_from: f64,
        #[arg(long, default_value_t = 10.0, allow_hyphen_values = true)]
        im_to: f64,
        #[arg(long, default_value_t = 21)]
        points: usize,
    },
    /// Eisenstein series at z0 along a vertical line with functional-equation residuals.
    Eisenstein {
        #[arg(long, default_value_t = 1.5, allow_hyphen_values = true)]
        re: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        im_from: f64,
        #[arg(long, default_value_t = 10.0, allow_hyphen_values = true)]
        im_to: f64,
        #[arg(long, default_value_t = 21)]
        points: usize,
    },
    /// Small perturbed eigenvalues and near-zeros on the critical line.
    Eigenvalues,
    /// Log-derivative line against its orbit expansion.
    GeometricCheck,
    /// Planted-spectrum contour identities.
    SyntheticCheck {
        #[arg(long, default_value_t = 100)]
        configurations: usize,
    },
    /// Both sides of the trace formula.
    TraceReport,
}

/// Flags shared by all subcommands; each overrides the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// JSON config file with the same keys as the flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, num_args = 2, value_names = ["X", "Y"], allow_hyphen_values = true, global = true)]
    pub z0: Option<Vec<f64>>,
    /// Real coupling or `inf`.
    #[arg(long, allow_hyphen_values = true, global = true)]
    pub alpha: Option<String>,
    #[arg(long, global = true)]
    pub sigma: Option<f64>,
    #[arg(long, global = true)]
    pub radius: Option<f64>,
    #[arg(long, global = true)]
    pub kmax: Option<u32>,
    #[arg(long, global = true)]
    pub lmax: Option<f64>,
    /// Gaussian width of the test function.
    #[arg(long, global = true)]
    pub a: Option<f64>,
    #[arg(long, global = true)]
    pub maass: Option<PathBuf>,
    #[arg(long, global = true)]
    pub cache_dir: Option<PathBuf>,
    #[arg(long, value_enum, global = true)]
    pub format: Option<Format>,
    #[arg(long, global = true)]
    pub tolerance: Option<f64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Override for the `h(0)/2` coefficient (0 or 1).
    #[arg(long, global = true)]
    pub delta: Option<u8>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub z0: Option<[f64; 2]>,
    pub alpha: Option<serde_json::Value>,
    pub sigma: Option<f64>,
    pub radius: Option<f64>,
    pub kmax: Option<u32>,
    pub lmax: Option<f64>,
    pub a: Option<f64>,
    pub maass: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
    pub format: Option<Format>,
    pub tolerance: Option<f64>,
    pub seed: Option<u64>,
    pub delta: Option<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub z0_input: [f64; 2],
    pub z0: Point,
    /// Element taking the input point to `z0`.
    pub reduction: GroupElement,
    pub alpha: Coupling,
    pub sigma: Option<f64>,
    pub radius: f64,
    pub kmax: u32,
    pub lmax: Option<f64>,
    pub a: f64,
    pub maass: Option<PathBuf>,
    #[serde(skip)]
    pub cache_dir: PathBuf,
    pub format: Format,
    pub tolerance: f64,
    pub seed: u64,
    pub delta: Option<u8>,
}

#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

pub fn parse_alpha(text: &str) -> Result<Coupling, UsageError> {
    match text.trim().to_ascii_lowercase().as_str() {
        "inf" | "+inf" | "-inf" | "infinity" => Ok(Coupling::Infinite),
        t => t
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .map(Coupling::Finite)
            .ok_or_else(|| UsageError(format!("alpha must be a real number or 'inf', got '{text}'"))),
    }
}

fn alpha_from_json(v: &serde_json::Value) -> Result<Coupling, UsageError> {
    match v {
        serde_json::Value::Number(n) => n.as_f64().map(Coupling::Finite).ok_or_else(|| UsageError("alpha: bad number".into())),
        serde_json::Value::String(s) => parse_alpha(s),
        _ => Err(UsageError("alpha must be a number or \"inf\"".into())),
    }
}

/// Defaults, then the config file, then flags.
pub fn parse_config(args: &ConfigArgs) -> Result<RunConfig, UsageError> {
    let file = match &args.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| UsageError(format!("config file {}: {e}", p.display())))?;
            serde_json::from_str::<FileConfig>(&text).map_err(|e| UsageError(format!("config file {}: {e}", p.display())))?
        }
        None => FileConfig::default(),
    };
    let z0_input = match (&args.z0, file.z0) {
        (Some(v), _) => [v[0], v[1]],
        (None, Some(v)) => v,
        (None, None) => [0.0, 2.0],
    };
    let p = Point::new(z0_input[0], z0_input[1]).map_err(|e| UsageError(format!("z0: {e}")))?;
    let (z0, reduction) = reduce_fund_domain(&p);
    let alpha = match (&args.alpha, &file.alpha) {
        (Some(t), _) => parse_alpha(t)?,
        (None, Some(v)) => alpha_from_json(v)?,
        (None, None) => Coupling::Finite(1.0),
    };
    let cache_dir = std::env::var_os(CACHE_ENV)
        .map(PathBuf::from)
        .or_else(|| args.cache_dir.clone())
        .or(file.cache_dir)
        .unwrap_or_else(|| PathBuf::from(".pscatter-cache"));
    let cfg = RunConfig {
        z0_input,
        z0,
        reduction,
        alpha,
        sigma: args.sigma.or(file.sigma),
        radius: args.radius.or(file.radius).unwrap_or(10.0),
        kmax: args.kmax.or(file.kmax).unwrap_or(6),
        lmax: args.lmax.or(file.lmax),
        a: args.a.or(file.a).unwrap_or(1.0),
        maass: args.maass.clone().or(file.maass),
        cache_dir,
        format: args.format.or(file.format).unwrap_or(Format::Json),
        tolerance: args.tolerance.or(file.tolerance).unwrap_or(1e-8),
        seed: args.seed.or(file.seed).unwrap_or(7),
        delta: args.delta.or(file.delta),
    };
    validate(&cfg)?;
    Ok(cfg)
}

fn validate(c: &RunConfig) -> Result<(), UsageError> {
    let bad = |m: String| Err(UsageError(m));
    if !(c.radius > 0.0 && c.radius <= 16.0) {
        return bad(format!("radius must lie in (0, 16], got {}", c.radius));
    }
    if c.kmax == 0 {
        return bad("kmax must be at least 1".into());
    }
    if !(c.a > 0.0 && c.a.is_finite()) {
        return bad(format!("test-function width a must be positive, got {}", c.a));
    }
    if let Some(s) = c.sigma {
        if !(s > 0.5) {
            return bad(format!("sigma must exceed 1/2, got {s}"));
        }
    }
    if let Some(l) = c.lmax {
        if !(l > 0.0 && l <= c.radius) {
            return bad(format!("lmax must lie in (0, radius], got {l}"));
        }
    }
    if !(c.tolerance > 0.0) {
        return bad("tolerance must be positive".into());
    }
    if let Some(d) = c.delta {
        if d > 1 {
            return bad(format!("delta must be 0 or 1, got {d}"));
        }
    }
    Ok(())
}
