use anyhow::{Context, Result};
use plm_core::dataset::write_csv;
use plm_core::montecarlo::{simulate_replication, Dgp, GFunction, McConfig};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

use super::required;
use crate::config::resolve;
use crate::output::{Manifest, Outputs};

#[derive(clap::Args, Serialize, Debug)]
pub struct Args {
    /// Config file with keys matching the long flag names.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Sample size.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Regressor design: h_zero (X = U) or h_identity (X = V + U).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dgp: Option<String>,
    /// Nonparametric component: identity or zero.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta0: Option<f64>,
    /// Standard deviation of the random-walk increments.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub increment_sd: Option<f64>,
    /// AR(1) coefficient of the errors.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_rho: Option<f64>,
    /// Innovation standard deviation of the errors.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_sd: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Output CSV path; the manifest is written next to it.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

#[derive(Deserialize, Serialize, Debug)]
#[serde(deny_unknown_fields)]
struct Resolved {
    #[serde(default = "default_n")]
    n: usize,
    #[serde(default = "default_dgp")]
    dgp: String,
    #[serde(default = "default_g")]
    g: String,
    #[serde(default = "one")]
    theta0: f64,
    #[serde(default = "default_increment_sd")]
    increment_sd: f64,
    #[serde(default = "default_rho")]
    eps_rho: f64,
    #[serde(default = "one")]
    eps_sd: f64,
    #[serde(default = "default_seed")]
    seed: u64,
    #[serde(skip_serializing)]
    out: Option<PathBuf>,
}

fn default_n() -> usize {
    200
}

fn default_dgp() -> String {
    "h_zero".into()
}

fn default_g() -> String {
    "identity".into()
}

fn one() -> f64 {
    1.0
}

fn default_increment_sd() -> f64 {
    0.1
}

fn default_rho() -> f64 {
    0.5
}

pub fn default_seed() -> u64 {
    20_100_401
}

#[derive(Serialize)]
struct Truth {
    theta0: f64,
    g0: String,
    dgp: String,
    rows: usize,
}

pub fn run(args: Args) -> Result<()> {
    let cfg: Resolved = resolve(&args, args.config.as_deref())?;
    let out = required(cfg.out.clone(), "out")?;
    let dgp: Dgp = cfg.dgp.parse()?;
    let g0: GFunction = cfg.g.parse()?;
    if !(cfg.eps_rho.abs() < 1.0) {
        anyhow::bail!("eps_rho must lie in (-1, 1), got {}", cfg.eps_rho);
    }
    let mut mc = McConfig::new(cfg.n, 1, dgp);
    mc.theta0 = cfg.theta0;
    mc.g0 = g0;
    mc.increment_sd = cfg.increment_sd;
    mc.eps_rho = cfg.eps_rho;
    mc.eps_sd = cfg.eps_sd;
    mc.master_seed = cfg.seed;
    mc.check()?;
    let ds = simulate_replication(&mc, 0)?;

    let file_name = out
        .file_name()
        .and_then(|s| s.to_str())
        .context("--out must name a file")?
        .to_owned();
    let stem = out
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("data")
        .to_owned();
    let parent = out.parent().map(PathBuf::from).unwrap_or_default();
    let mut outputs = Outputs::dir(&parent)?;
    let mut csv = Vec::new();
    write_csv(&ds, &mut csv)?;
    let data_path = outputs.write(&file_name, &csv)?;
    let truth = Truth {
        theta0: cfg.theta0,
        g0: g0.to_string(),
        dgp: dgp.to_string(),
        rows: ds.len(),
    };
    outputs.write_json(
        &format!("{stem}.manifest.json"),
        &Manifest::new("simulate", Some(cfg.seed), &cfg, truth),
    )?;
    outputs.commit();
    eprintln!("wrote {} rows to {}", ds.len(), data_path.display());
    Ok(())
}
