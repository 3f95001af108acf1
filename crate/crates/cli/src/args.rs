//! Command-line surface and config-file handling.  Flags override config
//! file values; both resolve into one validated `Resolved` bundle.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use orey::conditions::PhiFunction;
use orey::{Partition, ProcessSpec, Real};

#[derive(Parser, Debug)]
#[command(
    name = "orey",
    version,
    about = "Gaussian process simulation, second-order quadratic variations and roughness-index estimation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Simulate sample paths and write them as CSV
    Simulate(CommonOpts),
    /// Normalized and raw second-order quadratic variations per replica
    Qv(CommonOpts),
    /// Exact expected variation vs. its limit over an N-ladder
    Expect(CommonOpts),
    /// Two-scale roughness estimate from a single simulated path
    Estimate(CommonOpts),
    /// Monte Carlo study of the estimator (bias, RMSE, per-replica table)
    Mc(CommonOpts),
    /// Numerical diagnostics of the scaling conditions
    #[command(subcommand)]
    Diagnose(DiagnoseCommand),
}

#[derive(Subcommand, Debug)]
pub enum DiagnoseCommand {
    /// Uniform-ratio deviation sweep against the closed-form bounds
    Lambda(CommonOpts),
    /// Sub-fractional non-uniformity lower-bound check
    Remark(CommonOpts),
    /// Log-ratio curves of the scaling exponent
    Logratio(CommonOpts),
    /// Row-sum / eigenvalue diagnostics of the increment covariance
    Rowsum(CommonOpts),
}

#[derive(Args, Debug, Clone, Default)]
pub struct CommonOpts {
    /// Process family: fbm | subfbm | bifbm | fracou | fbridge
    #[arg(long)]
    pub family: Option<String>,
    /// Hurst-type exponent in (0, 1)
    #[arg(long = "H")]
    pub hurst: Option<f64>,
    /// Second bifractional exponent in (0, 1]
    #[arg(long = "K")]
    pub k: Option<f64>,
    /// Mean-reversion rate of the O-U family
    #[arg(long)]
    pub mu: Option<f64>,
    /// Noise scale of the O-U family
    #[arg(long)]
    pub theta: Option<f64>,
    /// Initial value of the O-U family
    #[arg(long)]
    pub x0: Option<f64>,
    /// Internal integration grid multiplier of the O-U family
    #[arg(long)]
    pub refine: Option<usize>,
    /// Step count; `expect` accepts a comma-separated ladder
    #[arg(long = "N")]
    pub n: Option<String>,
    /// Horizon of the time interval
    #[arg(long = "T")]
    pub t: Option<f64>,
    /// Coarse-grid stride of the estimator
    #[arg(long)]
    pub stride: Option<usize>,
    /// Replica count
    #[arg(long)]
    pub replicas: Option<usize>,
    /// Master seed; fully determines all stochastic output
    #[arg(long)]
    pub seed: Option<u64>,
    /// Partition recipe: regular | alternating | perturbed
    #[arg(long)]
    pub partition: Option<String>,
    /// Step ratio of the alternating recipe
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Step-ratio cap of the perturbed recipe
    #[arg(long)]
    pub cmax: Option<f64>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON config file; flags given on the command line take precedence
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Boundary-layer shape: power | logpower
    #[arg(long)]
    pub phi: Option<String>,
    /// Boundary-layer parameter (beta for power, alpha for logpower)
    #[arg(long)]
    pub phi_param: Option<f64>,
    /// Comma-separated delta grid for sweeps (defaults scale with T)
    #[arg(long)]
    pub deltas: Option<String>,
    /// Comma-separated h grid for the log-ratio curves
    #[arg(long)]
    pub h_grid: Option<String>,
    /// Grid resolution along t
    #[arg(long)]
    pub t_points: Option<usize>,
    /// Grid resolution along h
    #[arg(long)]
    pub h_points: Option<usize>,
    /// Grid resolution along s
    #[arg(long)]
    pub s_points: Option<usize>,
}

/// JSON mirror of the flags (all optional, flat or with a nested `params`
/// object).  Accepts both the hand-written form (`"N": 4096`, `"deltas":
/// "0.04,0.02"`) and the resolved form embedded in output headers
/// (`"n_ladder": [256, 512]`, `"deltas": [0.04, 0.02]`), so a config
/// round-trips through its serialized form losslessly.
#[derive(Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    family: Option<String>,
    #[serde(default)]
    params: FileParams,
    #[serde(rename = "H", alias = "hurst")]
    hurst: Option<f64>,
    #[serde(rename = "K", alias = "k")]
    k: Option<f64>,
    mu: Option<f64>,
    theta: Option<f64>,
    x0: Option<f64>,
    refine: Option<usize>,
    #[serde(rename = "N", alias = "n", alias = "n_fine", alias = "n_ladder")]
    n: Option<serde_json::Value>,
    #[serde(rename = "T", alias = "t")]
    t: Option<f64>,
    stride: Option<usize>,
    replicas: Option<usize>,
    seed: Option<u64>,
    partition: Option<String>,
    alpha: Option<f64>,
    cmax: Option<f64>,
    out: Option<PathBuf>,
    phi: Option<String>,
    phi_param: Option<f64>,
    deltas: Option<serde_json::Value>,
    h_grid: Option<serde_json::Value>,
    t_points: Option<usize>,
    h_points: Option<usize>,
    s_points: Option<usize>,
}

#[derive(Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
struct FileParams {
    #[serde(rename = "H")]
    hurst: Option<f64>,
    #[serde(rename = "K")]
    k: Option<f64>,
    mu: Option<f64>,
    theta: Option<f64>,
    x0: Option<f64>,
    refine: Option<usize>,
}

/// Fully resolved experiment configuration (defaults applied); this is what
/// gets embedded in every output header.
#[derive(Serialize, Debug, Clone)]
pub struct Resolved {
    pub family: String,
    pub hurst: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub refine: Option<usize>,
    pub n_ladder: Vec<usize>,
    pub t: f64,
    pub stride: usize,
    pub replicas: usize,
    pub seed: u64,
    pub partition: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cmax: Option<f64>,
    pub phi: String,
    pub phi_param: f64,
    pub deltas: Vec<f64>,
    pub h_grid: Vec<f64>,
    pub t_points: usize,
    pub h_points: usize,
    pub s_points: usize,
    #[serde(skip)]
    pub out: PathBuf,
}

impl CommonOpts {
    pub fn resolve(&self) -> Result<Resolved> {
        let file: FileConfig = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading config {}", path.display()))?;
                serde_json::from_str(&text)
                    .with_context(|| format!("parsing config {}", path.display()))?
            }
            None => FileConfig::default(),
        };

        let family = self
            .family
            .clone()
            .or(file.family)
            .unwrap_or_else(|| "fbm".to_string())
            .to_lowercase();
        let hurst = self
            .hurst
            .or(file.hurst)
            .or(file.params.hurst)
            .unwrap_or(0.5);
        let t = self.t.or(file.t).unwrap_or(1.0);
        let n_ladder = match (&self.n, &file.n) {
            (Some(s), _) => parse_usize_list(s).context("parsing --N")?,
            (None, Some(v)) => value_as_list(v)
                .context("parsing N from config")?
                .into_iter()
                .map(|x| {
                    if x.fract() == 0.0 && x > 0.0 {
                        Ok(x as usize)
                    } else {
                        bail!("step counts must be positive integers, got {x}")
                    }
                })
                .collect::<Result<Vec<_>>>()?,
            (None, None) => vec![1024],
        };
        if n_ladder.is_empty() {
            bail!("--N must name at least one step count");
        }

        let resolved = Resolved {
            family,
            hurst,
            k: self.k.or(file.k).or(file.params.k),
            mu: self.mu.or(file.mu).or(file.params.mu),
            theta: self.theta.or(file.theta).or(file.params.theta),
            x0: self.x0.or(file.x0).or(file.params.x0),
            refine: self.refine.or(file.refine).or(file.params.refine),
            n_ladder,
            t,
            stride: self.stride.or(file.stride).unwrap_or(2),
            replicas: self.replicas.or(file.replicas).unwrap_or(100),
            seed: self.seed.or(file.seed).unwrap_or(0),
            partition: self
                .partition
                .clone()
                .or(file.partition)
                .unwrap_or_else(|| "regular".to_string())
                .to_lowercase(),
            alpha: self.alpha.or(file.alpha),
            cmax: self.cmax.or(file.cmax),
            phi: self
                .phi
                .clone()
                .or(file.phi)
                .unwrap_or_else(|| "power".to_string())
                .to_lowercase(),
            phi_param: self.phi_param.or(file.phi_param).unwrap_or(0.2),
            deltas: match (&self.deltas, &file.deltas) {
                (Some(s), _) => parse_f64_list(s).context("parsing --deltas")?,
                (None, Some(v)) => value_as_list(v).context("parsing deltas from config")?,
                (None, None) => [0.04, 0.02, 0.01, 0.005].iter().map(|d| d * t).collect(),
            },
            h_grid: match (&self.h_grid, &file.h_grid) {
                (Some(s), _) => parse_f64_list(s).context("parsing --h-grid")?,
                (None, Some(v)) => value_as_list(v).context("parsing h_grid from config")?,
                (None, None) => vec![1e-2, 1e-3, 1e-4],
            },
            t_points: self.t_points.or(file.t_points).unwrap_or(64),
            h_points: self.h_points.or(file.h_points).unwrap_or(16),
            s_points: self.s_points.or(file.s_points).unwrap_or(64),
            out: self.out.clone().or(file.out).unwrap_or_else(|| ".".into()),
        };
        Ok(resolved)
    }
}

impl Resolved {
    pub fn spec(&self) -> Result<ProcessSpec<Real>> {
        let spec = match self.family.as_str() {
            "fbm" => ProcessSpec::Fbm { hurst: self.hurst },
            "subfbm" => ProcessSpec::SubFbm { hurst: self.hurst },
            "bifbm" => ProcessSpec::BiFbm {
                hurst: self.hurst,
                k: self.k.unwrap_or(1.0),
            },
            "fracou" => ProcessSpec::FracOu {
                hurst: self.hurst,
                mu: self.mu.unwrap_or(1.0),
                theta: self.theta.unwrap_or(1.0),
                x0: self.x0.unwrap_or(0.0),
                refine: self.refine.unwrap_or(8),
            },
            "fbridge" => ProcessSpec::FBridge {
                hurst: self.hurst,
                horizon: self.t,
            },
            other => bail!("unknown family `{other}` (expected fbm | subfbm | bifbm | fracou | fbridge)"),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn single_n(&self) -> Result<usize> {
        if self.n_ladder.len() != 1 {
            bail!("this subcommand takes a single --N, got {:?}", self.n_ladder);
        }
        Ok(self.n_ladder[0])
    }

    pub fn build_partition(&self, n: usize) -> Result<Partition<Real>> {
        let p = match self.partition.as_str() {
            "regular" => Partition::regular(n, self.t)?,
            "alternating" => {
                let alpha = self.alpha.unwrap_or(2.0);
                if n % 2 != 0 {
                    bail!("alternating partitions need an even --N, got {n}");
                }
                Partition::alternating(alpha, n / 2, self.t)?
            }
            "perturbed" => Partition::perturbed(n, self.t, self.cmax.unwrap_or(2.0), self.seed)?,
            other => bail!("unknown partition recipe `{other}`"),
        };
        Ok(p)
    }

    pub fn phi_function(&self) -> Result<PhiFunction<Real>> {
        let phi = match self.phi.as_str() {
            "power" => PhiFunction::Power {
                beta: self.phi_param,
            },
            "logpower" => PhiFunction::LogPower {
                alpha: self.phi_param,
            },
            other => bail!("unknown phi shape `{other}` (expected power | logpower)"),
        };
        phi.validate()?;
        Ok(phi)
    }

    /// Header comment block carried by every CSV artifact.
    pub fn csv_header(&self) -> String {
        format!(
            "# orey {}\n# config: {}\n",
            env!("CARGO_PKG_VERSION"),
            serde_json::to_string(self).expect("config serializes")
        )
    }
}

fn parse_usize_list(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|p| p.trim().parse::<usize>().map_err(Into::into))
        .collect()
}

fn parse_f64_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(Into::into))
        .collect()
}

/// A JSON number, comma-separated string, or array of numbers.
fn value_as_list(v: &serde_json::Value) -> Result<Vec<f64>> {
    match v {
        serde_json::Value::String(s) => parse_f64_list(s),
        serde_json::Value::Number(n) => Ok(vec![n
            .as_f64()
            .context("numeric value out of range")?]),
        serde_json::Value::Array(items) => items
            .iter()
            .map(|x| x.as_f64().context("array entries must be numbers"))
            .collect(),
        other => bail!("expected number, string or array, got {other}"),
    }
}
