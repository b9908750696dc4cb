//! Command-line flags, the optional TOML config file, and their merge.
//! Flags win over the file, the file over built-in defaults.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use gaussbound::expansion::Scheme;
use gaussbound::probe::{Oscillator, RadialProfile, DEFAULT_DELTA};
use gaussbound::reconstruct::Interval;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "GAUSSBOUND_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "gaussbound", version, about = "Bounded-basis expansions of the Gaussian kernel")]
pub struct Cli {
    /// Worker threads (results do not depend on it)
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// TOML file with the same keys as the flags
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Output directory [default: $GAUSSBOUND_OUT_DIR or .]
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Series against the closed-form kernel on a grid
    Reconstruct(SchemeArgs),
    /// Sup-norms against their asymptotic laws
    Norms(SchemeArgs),
    /// Block weight masses G(n, p) and the divergence fit
    Weights(WeightsArgs),
    /// Sign matrix of one block as CSV
    Signs(SignsArgs),
    /// Build and verify an impossibility certificate
    Probe(ProbeArgs),
    /// Verify a certificate file
    Verify(VerifyArgs),
    /// Error of the Gaussian bump approximation
    Bumpcheck(BumpArgs),
    /// Write an expansion as JSON
    Expand(SchemeArgs),
}

#[derive(Debug, Default, Args)]
pub struct SchemeArgs {
    /// raw, bounded or combo
    #[arg(long)]
    pub scheme: Option<String>,
    #[arg(long)]
    pub horizon: Option<u64>,
    #[arg(long)]
    pub max_block: Option<u32>,
    #[arg(long)]
    pub domain_edge: Option<f64>,
    /// Grid range `lo:hi` for both coordinates
    #[arg(long, allow_hyphen_values = true)]
    pub range: Option<String>,
    /// Separate range for the second coordinate
    #[arg(long, allow_hyphen_values = true)]
    pub y_range: Option<String>,
    #[arg(long)]
    pub step: Option<f64>,
    /// Allowed relative deviation of norm ratios
    #[arg(long)]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Default, Args)]
pub struct WeightsArgs {
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub max_block: Option<u32>,
}

#[derive(Debug, Default, Args)]
pub struct SignsArgs {
    #[arg(long)]
    pub n: Option<u32>,
}

#[derive(Debug, Default, Args)]
pub struct ProbeArgs {
    /// gaussian, laplace or cauchy
    #[arg(long)]
    pub kernel: Option<String>,
    /// cos or square
    #[arg(long)]
    pub psi: Option<String>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Certificate written by `probe`
    pub certificate: PathBuf,
}

#[derive(Debug, Default, Args)]
pub struct BumpArgs {
    /// Indices to check, comma separated
    #[arg(long, value_delimiter = ',')]
    pub k: Option<Vec<u64>>,
    #[arg(long)]
    pub window: Option<f64>,
}

/// Keys accepted in the config file.
#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct FileConfig {
    pub threads: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub format: Option<Format>,
    pub scheme: Option<String>,
    pub horizon: Option<u64>,
    pub max_block: Option<u32>,
    pub domain_edge: Option<f64>,
    pub range: Option<String>,
    pub y_range: Option<String>,
    pub step: Option<f64>,
    pub tolerance: Option<f64>,
    pub p: Option<f64>,
    pub n: Option<u64>,
    pub kernel: Option<String>,
    pub psi: Option<String>,
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
    pub k: Option<Vec<u64>>,
    pub window: Option<f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| format!("invalid config {}: {e}", path.display()))
    }
}

/// Settings shared by every command.
#[derive(Clone, Debug, PartialEq)]
pub struct Common {
    pub threads: Option<usize>,
    pub out_dir: PathBuf,
    pub format: Format,
}

pub fn resolve_common(cli: &Cli, file: &FileConfig, env_out_dir: Option<PathBuf>) -> Result<Common, String> {
    let threads = cli.threads.or(file.threads);
    if threads == Some(0) {
        return Err("--threads must be at least 1".into());
    }
    let out_dir = cli
        .out_dir
        .clone()
        .or_else(|| file.out_dir.clone())
        .or(env_out_dir)
        .unwrap_or_else(|| PathBuf::from("."));
    Ok(Common { threads, out_dir, format: cli.format.or(file.format).unwrap_or(Format::Csv) })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SchemeConfig {
    pub scheme: Scheme,
    pub horizon: u64,
    pub max_block: u32,
    pub domain_edge: f64,
    pub x_range: Interval,
    pub y_range: Interval,
    pub step: f64,
    pub tolerance: f64,
}

pub const DEFAULT_HORIZON: u64 = 200;
pub const DEFAULT_BOUNDED_HORIZON: u64 = 300;
pub const DEFAULT_DOMAIN_EDGE: f64 = 3.0;
pub const DEFAULT_STEP: f64 = 0.25;
pub const DEFAULT_TOLERANCE: f64 = 0.05;

pub fn parse_range(s: &str) -> Result<Interval, String> {
    let (lo, hi) = s.split_once(':').ok_or_else(|| format!("range '{s}' is not of the form lo:hi"))?;
    let parse = |v: &str| v.trim().parse::<f64>().map_err(|_| format!("range '{s}': '{v}' is not a number"));
    Interval::new(parse(lo)?, parse(hi)?).map_err(|e| e.to_string())
}

fn positive(name: &str, v: f64) -> Result<f64, String> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("--{name} must be positive, got {v}"))
    }
}

pub fn resolve_scheme(args: &SchemeArgs, file: &FileConfig, default_scheme: Option<Scheme>) -> Result<SchemeConfig, String> {
    let scheme = match args.scheme.as_ref().or(file.scheme.as_ref()) {
        Some(s) => s.parse::<Scheme>().map_err(|_| format!("unknown scheme '{s}' (expected raw, bounded or combo)"))?,
        None => default_scheme.ok_or("--scheme is required")?,
    };
    let domain_edge = positive("domain-edge", args.domain_edge.or(file.domain_edge).unwrap_or(DEFAULT_DOMAIN_EDGE))?;
    let default_horizon = if scheme == Scheme::Bounded { DEFAULT_BOUNDED_HORIZON } else { DEFAULT_HORIZON };
    let horizon = args.horizon.or(file.horizon).unwrap_or(default_horizon);
    if horizon == 0 {
        return Err("--horizon must be at least 1".into());
    }
    let max_block = args.max_block.or(file.max_block).unwrap_or(3);
    if !(1..=gaussbound::blocks::DEFAULT_MAX_BLOCK).contains(&max_block) {
        return Err(format!("--max-block must lie in 1..={}", gaussbound::blocks::DEFAULT_MAX_BLOCK));
    }
    let default_range = if scheme == Scheme::Bounded {
        Interval::new(0.0, domain_edge).map_err(|e| e.to_string())?
    } else {
        Interval::new(-3.0, 3.0).map_err(|e| e.to_string())?
    };
    let x_range = match args.range.as_ref().or(file.range.as_ref()) {
        Some(r) => parse_range(r)?,
        None => default_range,
    };
    let y_range = match args.y_range.as_ref().or(file.y_range.as_ref()) {
        Some(r) => parse_range(r)?,
        None => x_range,
    };
    let step = positive("step", args.step.or(file.step).unwrap_or(DEFAULT_STEP))?;
    let tolerance = positive("tolerance", args.tolerance.or(file.tolerance).unwrap_or(DEFAULT_TOLERANCE))?;
    Ok(SchemeConfig { scheme, horizon, max_block, domain_edge, x_range, y_range, step, tolerance })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightsConfig {
    pub p: f64,
    pub max_block: u32,
}

pub fn resolve_weights(args: &WeightsArgs, file: &FileConfig) -> Result<WeightsConfig, String> {
    let p = args.p.or(file.p).unwrap_or(1.0);
    if !(p >= 1.0) || !p.is_finite() {
        return Err(format!("--p must be at least 1, got {p}"));
    }
    let max_block = args.max_block.or(file.max_block).unwrap_or(gaussbound::blocks::DEFAULT_MAX_BLOCK);
    if !(4..=gaussbound::blocks::DEFAULT_MAX_BLOCK).contains(&max_block) {
        return Err(format!("--max-block must lie in 4..={}", gaussbound::blocks::DEFAULT_MAX_BLOCK));
    }
    Ok(WeightsConfig { p, max_block })
}

/// Largest block whose sign matrix `signs` writes out.
pub const MAX_SIGNS_BLOCK: u32 = 11;

pub fn resolve_signs(args: &SignsArgs, file: &FileConfig) -> Result<u32, String> {
    let n = match args.n {
        Some(n) => n,
        None => file.n.map(|n| u32::try_from(n).map_err(|_| format!("--n {n} too large"))).transpose()?.unwrap_or(4),
    };
    if n == 0 || n > MAX_SIGNS_BLOCK {
        return Err(format!("--n must lie in 1..={MAX_SIGNS_BLOCK}, got {n}"));
    }
    Ok(n)
}

#[derive(Clone, Debug)]
pub struct ProbeConfig {
    pub kernel: RadialProfile,
    pub psi: Oscillator,
    pub epsilon: f64,
    pub delta: f64,
    pub n: usize,
}

pub fn resolve_probe(args: &ProbeArgs, file: &FileConfig) -> Result<ProbeConfig, String> {
    let kernel_name = args.kernel.as_deref().or(file.kernel.as_deref()).unwrap_or("gaussian");
    let kernel = kernel_name
        .parse::<RadialProfile>()
        .map_err(|_| format!("unknown kernel '{kernel_name}' (expected gaussian, laplace or cauchy)"))?;
    let psi_name = args.psi.as_deref().or(file.psi.as_deref()).unwrap_or("cos");
    let psi = Oscillator::builtin(psi_name).map_err(|_| format!("unknown template '{psi_name}' (expected cos or square)"))?;
    let epsilon = args.epsilon.or(file.epsilon).unwrap_or(0.1);
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(format!("--epsilon must lie in (0, 1), got {epsilon}"));
    }
    let delta = positive("delta", args.delta.or(file.delta).unwrap_or(DEFAULT_DELTA))?;
    let n = match args.n {
        Some(n) => n,
        None => file.n.map(|n| n as usize).unwrap_or(100),
    };
    if n == 0 {
        return Err("--n must be at least 1".into());
    }
    Ok(ProbeConfig { kernel, psi, epsilon, delta, n })
}

#[derive(Clone, Debug, PartialEq)]
pub struct BumpConfig {
    pub ks: Vec<u64>,
    pub window: f64,
}

pub const DEFAULT_BUMP_KS: [u64; 5] = [100, 1_000, 10_000, 100_000, 1_000_000];

pub fn resolve_bump(args: &BumpArgs, file: &FileConfig) -> Result<BumpConfig, String> {
    let ks = args.k.clone().or_else(|| file.k.clone()).unwrap_or_else(|| DEFAULT_BUMP_KS.to_vec());
    if ks.is_empty() || ks.contains(&0) {
        return Err("--k needs positive indices".into());
    }
    let window = positive("window", args.window.or(file.window).unwrap_or(2.0))?;
    Ok(BumpConfig { ks, window })
}
