use anyhow::{Context, Result};
use plm_core::bandwidth::{cv_select, default_grid};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

use super::estimate::cv_table;
use super::{
    default_kernel, default_small_set, default_v, default_x, default_y, kernel_family, required,
    truncation, DataFlags, DataSource,
};
use crate::config::resolve;
use crate::output::{Manifest, Outputs};

#[derive(clap::Args, Serialize, Debug)]
pub struct Args {
    /// Config file with keys matching the long flag names.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub data: DataFlags,
    /// Kernel family: uniform or epanechnikov.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernel: Option<String>,
    /// Candidate bandwidths, comma separated; defaults to 12 log-spaced
    /// points over [0.1, 3] n^(-1/4).
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<f64>>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bn: Option<f64>,
    /// Small set bounds as LO,HI.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub small_set: Option<Vec<f64>>,
    /// Optional output directory for the criterion table and manifest.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

#[derive(Deserialize, Serialize, Debug)]
#[serde(deny_unknown_fields)]
struct Resolved {
    data: Option<PathBuf>,
    #[serde(default = "default_y")]
    y: String,
    #[serde(default = "default_x")]
    x: Vec<String>,
    #[serde(default = "default_v")]
    v: String,
    #[serde(default)]
    no_header: bool,
    #[serde(default = "default_kernel")]
    kernel: String,
    grid: Option<Vec<f64>>,
    bn: Option<f64>,
    #[serde(default = "default_small_set")]
    small_set: [f64; 2],
    #[serde(skip_serializing)]
    out: Option<PathBuf>,
}

pub fn run(args: Args) -> Result<()> {
    let cfg: Resolved = resolve(&args, args.config.as_deref())?;
    let source = DataSource {
        data: required(cfg.data.clone(), "data")?,
        y: cfg.y.clone(),
        x: cfg.x.clone(),
        v: cfg.v.clone(),
        no_header: cfg.no_header,
    };
    let ds = source.load()?;
    let family = kernel_family(&cfg.kernel)?;
    let trunc = truncation(ds.len(), cfg.bn, cfg.small_set)?;
    let grid = cfg.grid.clone().unwrap_or_else(|| default_grid(ds.len()));
    let cv = cv_select(&ds, &grid, family, &trunc).context("bandwidth selection")?;
    let table = cv_table(&cv)?;
    print!("{}", String::from_utf8_lossy(&table));
    eprintln!("selected h = {}", cv.h_star);
    if let Some(out) = &cfg.out {
        let mut outputs = Outputs::dir(out)?;
        outputs.write("cv.csv", &table)?;
        outputs.write_json(
            "manifest.json",
            &Manifest::new("bandwidth", None, &cfg, &cv),
        )?;
        outputs.commit();
    }
    Ok(())
}
