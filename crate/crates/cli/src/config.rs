//! Run configuration: command-line flags over an optional `key=value` file
//! over built-in defaults.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use clap::Args;

use chemovar::Builtin;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => bail!("unknown format `{other}` (expected json or csv)"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Probe {
    DirichletSlope,
    Mt,
    ExpLower,
    L2Upper,
}

impl FromStr for Probe {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dirichlet_slope" => Ok(Probe::DirichletSlope),
            "mt" => Ok(Probe::Mt),
            "exp_lower" => Ok(Probe::ExpLower),
            "l2_upper" => Ok(Probe::L2Upper),
            other => bail!("unknown probe `{other}` (expected dirichlet_slope, mt, exp_lower or l2_upper)"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fixture {
    Boundary,
    Interior,
    Mixed,
}

impl FromStr for Fixture {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "boundary" => Ok(Fixture::Boundary),
            "interior" => Ok(Fixture::Interior),
            "mixed" => Ok(Fixture::Mixed),
            other => bail!("unknown fixture `{other}` (expected boundary, interior or mixed)"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DomainSpec {
    Builtin { kind: Builtin, res: usize },
    File(PathBuf),
}

/// Flags shared by every subcommand. Every flag can also be given as a
/// `key=value` line in the `--config` file, with the flag name as key.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// key=value configuration file; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Builtin domain: unit_square, disk or annulus [default: unit_square].
    #[arg(long, global = true)]
    pub domain: Option<String>,
    /// Mesh file; overrides --domain.
    #[arg(long, global = true)]
    pub mesh: Option<PathBuf>,
    /// Builtin mesh resolution [default: 32].
    #[arg(long, global = true)]
    pub res: Option<usize>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub beta: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub rho: Option<f64>,
    /// Initial number of eigenpairs; grown until the indices are bracketed [default: 8].
    #[arg(long, global = true)]
    pub eigs: Option<usize>,
    /// Output file [default: stdout].
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// json or csv.
    #[arg(long, global = true)]
    pub format: Option<String>,
    /// Comma-separated Λ values [default: 10,20,40,80].
    #[arg(long, global = true)]
    pub lambda_grid: Option<String>,
    /// dirichlet_slope, mt, exp_lower or l2_upper [default: dirichlet_slope].
    #[arg(long, global = true)]
    pub probe: Option<String>,
    /// Probe atoms: boundary, interior or mixed [default: boundary].
    #[arg(long, global = true)]
    pub fixture: Option<String>,
    /// Join parameter t of the probed test function [default: 0].
    #[arg(long, global = true)]
    pub t: Option<f64>,
    /// Continuation steps [default: 10].
    #[arg(long, global = true)]
    pub steps: Option<usize>,
    /// Continuation end point for β [default: --beta].
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub beta_end: Option<f64>,
    /// Continuation end point for ρ [default: --rho].
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub rho_end: Option<f64>,
    /// Flow steps before Newton [default: 20].
    #[arg(long, global = true)]
    pub flow_budget: Option<usize>,
    /// Try every seed instead of stopping at the first nontrivial solution.
    #[arg(long, global = true)]
    pub exhaustive: bool,
    /// Continue the trivial branch instead of a solved one.
    #[arg(long, global = true)]
    pub trivial: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub domain: DomainSpec,
    pub beta: f64,
    pub rho: f64,
    pub eigen_count: usize,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub lambda_grid: Vec<f64>,
    pub probe: Probe,
    pub fixture: Fixture,
    pub t: f64,
    pub steps: usize,
    pub beta_end: f64,
    pub rho_end: f64,
    pub flow_budget: usize,
    pub exhaustive: bool,
    pub trivial: bool,
}

/// Parses `key=value` lines; blank lines and `#` comments are skipped.
pub fn parse_config_file(text: &str) -> Result<HashMap<String, String>> {
    let mut out = HashMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("config line {}: expected key=value", n + 1))?;
        out.insert(k.trim().replace('_', "-"), v.trim().to_string());
    }
    Ok(out)
}

fn parse_grid(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|x| x.trim().parse::<f64>().with_context(|| format!("bad Λ value `{x}`")))
        .collect()
}

fn parse_bool(s: &str) -> Result<bool> {
    match s {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => bail!("bad boolean `{other}`"),
    }
}

struct Layer<'a> {
    file: &'a HashMap<String, String>,
}

impl Layer<'_> {
    fn get<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.file.get(key) {
            Some(v) => v
                .parse::<T>()
                .map(Some)
                .map_err(|e| anyhow!("config key `{key}`: {e}")),
            None => Ok(None),
        }
    }
}

impl RunConfig {
    pub fn resolve(args: &RunArgs) -> Result<RunConfig> {
        let file = match &args.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading config {}", path.display()))?;
                parse_config_file(&text)?
            }
            None => HashMap::new(),
        };
        RunConfig::merge(args, &file)
    }

    pub fn merge(args: &RunArgs, file: &HashMap<String, String>) -> Result<RunConfig> {
        let known = [
            "domain", "mesh", "res", "beta", "rho", "eigs", "out", "format", "lambda-grid", "probe", "fixture",
            "t", "steps", "beta-end", "rho-end", "flow-budget", "exhaustive", "trivial",
        ];
        if let Some(k) = file.keys().find(|k| !known.contains(&k.as_str())) {
            bail!("unknown config key `{k}`");
        }
        let l = Layer { file };
        let mesh: Option<PathBuf> = l.get(args.mesh.clone(), "mesh")?;
        let domain = match mesh {
            Some(path) => DomainSpec::File(path),
            None => {
                let name: String = l.get(args.domain.clone(), "domain")?.unwrap_or_else(|| "unit_square".into());
                DomainSpec::Builtin {
                    kind: name.parse::<Builtin>()?,
                    res: l.get(args.res, "res")?.unwrap_or(32),
                }
            }
        };
        let beta = l.get(args.beta, "beta")?.unwrap_or(0.0);
        let rho = l.get(args.rho, "rho")?.unwrap_or(1.0);
        let eigen_count = l.get(args.eigs, "eigs")?.unwrap_or(8);
        if eigen_count == 0 {
            bail!("--eigs must be positive");
        }
        let lambda_grid = match l.get(args.lambda_grid.clone(), "lambda-grid")? {
            Some(s) => parse_grid(&s)?,
            None => vec![10.0, 20.0, 40.0, 80.0],
        };
        let flag_bool = |flag: bool, key: &str| -> Result<bool> {
            if flag {
                return Ok(true);
            }
            file.get(key).map_or(Ok(false), |v| parse_bool(v))
        };
        Ok(RunConfig {
            domain,
            beta,
            rho,
            eigen_count,
            out: l.get(args.out.clone(), "out")?,
            format: l.get::<String>(args.format.clone(), "format")?.map(|s| s.parse()).transpose()?,
            lambda_grid,
            probe: l
                .get::<String>(args.probe.clone(), "probe")?
                .map_or(Ok(Probe::DirichletSlope), |s| s.parse())?,
            fixture: l
                .get::<String>(args.fixture.clone(), "fixture")?
                .map_or(Ok(Fixture::Boundary), |s| s.parse())?,
            t: l.get(args.t, "t")?.unwrap_or(0.0),
            steps: l.get(args.steps, "steps")?.unwrap_or(10),
            beta_end: l.get(args.beta_end, "beta-end")?.unwrap_or(beta),
            rho_end: l.get(args.rho_end, "rho-end")?.unwrap_or(rho),
            flow_budget: l.get(args.flow_budget, "flow-budget")?.unwrap_or(20),
            exhaustive: flag_bool(args.exhaustive, "exhaustive")?,
            trivial: flag_bool(args.trivial, "trivial")?,
        })
    }
}

pub fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let file = parse_config_file("# run\nbeta = -5\nrho=13\ndomain=disk\nres = 64\nlambda_grid=1,2,4\n").unwrap();
        let args = RunArgs {
            rho: Some(2.0),
            ..RunArgs::default()
        };
        let cfg = RunConfig::merge(&args, &file).unwrap();
        assert_eq!(cfg.beta, -5.0);
        assert_eq!(cfg.rho, 2.0);
        assert_eq!(cfg.domain, DomainSpec::Builtin { kind: Builtin::Disk, res: 64 });
        assert_eq!(cfg.lambda_grid, vec![1.0, 2.0, 4.0]);
        assert_eq!(cfg.rho_end, 2.0);
    }

    #[test]
    fn defaults_and_errors() {
        let cfg = RunConfig::merge(&RunArgs::default(), &HashMap::new()).unwrap();
        assert_eq!(cfg.domain, DomainSpec::Builtin { kind: Builtin::UnitSquare, res: 32 });
        assert_eq!((cfg.beta, cfg.rho, cfg.eigen_count, cfg.steps), (0.0, 1.0, 8, 10));
        assert!(parse_config_file("beta").is_err());
        let bad = parse_config_file("colour=blue").unwrap();
        assert!(RunConfig::merge(&RunArgs::default(), &bad).is_err());
        let bad = parse_config_file("probe=nope").unwrap();
        assert!(RunConfig::merge(&RunArgs::default(), &bad).is_err());
    }
}
