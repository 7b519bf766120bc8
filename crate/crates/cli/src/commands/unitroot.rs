use anyhow::{Context, Result};
use plm_core::unitroot::df_test;
use plm_core::DfResult;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

use super::simulate::default_seed;
use crate::config::{is_false, resolve};
use crate::output::{csv_text, Manifest, Outputs};

#[derive(clap::Args, Serialize, Debug)]
pub struct Args {
    /// Config file with keys matching the long flag names.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Input CSV file.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<PathBuf>,
    /// Series to test (name, or 0-based index with --no-header).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub column: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "is_false")]
    pub no_header: bool,
    /// Simulated null paths.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reps: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Output format on stdout: csv or json.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<String>,
    /// Optional output directory for the result and manifest.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

#[derive(Deserialize, Serialize, Debug)]
#[serde(deny_unknown_fields)]
struct Resolved {
    data: Option<PathBuf>,
    column: Option<String>,
    #[serde(default)]
    no_header: bool,
    #[serde(default = "default_reps")]
    reps: usize,
    #[serde(default = "default_seed")]
    seed: u64,
    #[serde(default = "default_format")]
    format: String,
    #[serde(skip_serializing)]
    out: Option<PathBuf>,
}

fn default_reps() -> usize {
    2000
}

fn default_format() -> String {
    "csv".into()
}

fn csv_row(r: &DfResult) -> Result<Vec<u8>> {
    let header = ["rho_hat", "t_stat", "p_value", "sim_reps"].map(String::from);
    csv_text(
        &header,
        [vec![
            super::fmt(r.rho_hat),
            super::fmt(r.t_stat),
            super::fmt(r.p_value),
            r.sim_reps.to_string(),
        ]],
    )
}

pub fn run(args: Args) -> Result<()> {
    let cfg: Resolved = resolve(&args, args.config.as_deref())?;
    let data = super::required(cfg.data.clone(), "data")?;
    let column = super::required(cfg.column.clone(), "column")?;
    let series = plm_core::load_series(&data, &column, !cfg.no_header)
        .with_context(|| format!("loading `{column}` from {}", data.display()))?;
    let result = df_test(&series, cfg.reps, cfg.seed)?;
    let csv = csv_row(&result)?;
    match cfg.format.as_str() {
        "csv" => print!("{}", String::from_utf8_lossy(&csv)),
        "json" => println!("{}", serde_json::to_string(&result)?),
        other => anyhow::bail!("format must be `csv` or `json`, got `{other}`"),
    }
    if let Some(out) = &cfg.out {
        let mut outputs = Outputs::dir(out)?;
        outputs.write("unitroot.csv", &csv)?;
        outputs.write_json(
            "manifest.json",
            &Manifest::new("unitroot", Some(cfg.seed), &cfg, result),
        )?;
        outputs.commit();
    }
    Ok(())
}
