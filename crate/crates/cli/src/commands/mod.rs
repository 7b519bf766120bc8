pub mod bandwidth;
pub mod estimate;
pub mod mc;
pub mod simulate;
pub mod unitroot;

use anyhow::{Context, Result};
use plm_core::{ColumnSchema, KernelFamily, TimeSeriesDataset, TruncationSpec};
use serde::Serialize;
use std::path::PathBuf;

use crate::config::is_false;

/// Dataset selection flags shared by `estimate` and `bandwidth`.
#[derive(clap::Args, Serialize, Debug, Default)]
pub struct DataFlags {
    /// Input CSV file.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<PathBuf>,
    /// Response column (name, or 0-based index with --no-header).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y: Option<String>,
    /// Regressor columns, comma separated.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<String>>,
    /// Covariate column entering the nonparametric part.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v: Option<String>,
    /// The file has no header row; columns are 0-based indices.
    #[arg(long)]
    #[serde(skip_serializing_if = "is_false")]
    pub no_header: bool,
}

/// Resolved form of [`DataFlags`].
#[derive(Serialize, Debug, Clone)]
pub struct DataSource {
    pub data: PathBuf,
    pub y: String,
    pub x: Vec<String>,
    pub v: String,
    pub no_header: bool,
}

impl DataSource {
    pub fn load(&self) -> Result<TimeSeriesDataset> {
        let mut schema = ColumnSchema::new(self.y.clone(), self.x.clone(), self.v.clone());
        schema.has_header = !self.no_header;
        let ds = plm_core::load_csv(&self.data, &schema)
            .with_context(|| format!("loading {}", self.data.display()))?;
        for w in ds.validate().warnings() {
            eprintln!("warning: {w}");
        }
        Ok(ds)
    }
}

pub fn default_y() -> String {
    "y".into()
}

pub fn default_x() -> Vec<String> {
    vec!["x".into()]
}

pub fn default_v() -> String {
    "v".into()
}

pub fn default_small_set() -> [f64; 2] {
    [-1.0, 1.0]
}

pub fn default_kernel() -> String {
    "uniform".into()
}

pub fn kernel_family(name: &str) -> Result<KernelFamily> {
    name.parse()
        .with_context(|| format!("unknown kernel `{name}`"))
}

pub fn truncation(n: usize, bn: Option<f64>, bounds: [f64; 2]) -> Result<TruncationSpec> {
    let c = crate::config::small_set(bounds)?;
    Ok(match bn {
        Some(b) => TruncationSpec::new(b, c).context("invalid --bn")?,
        None => TruncationSpec::default_for(n, c),
    })
}

pub fn span(v: &[f64]) -> (f64, f64) {
    v.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        })
}

pub fn required<T>(value: Option<T>, key: &str) -> Result<T> {
    value.with_context(|| {
        format!(
            "`{key}` is required (flag --{} or config key)",
            key.replace('_', "-")
        )
    })
}

pub fn fmt(x: f64) -> String {
    plm_core::montecarlo::fmt17(x)
}
