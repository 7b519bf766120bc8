use anyhow::{Context, Result};
use plm_core::bandwidth::{cv_select, default_grid, CvResult};
use plm_core::sls::{
    asymptotic_ci, default_max_lag, estimate_g, estimate_h, evaluation_grid,
    truncated_sls_with_lag, Interval,
};
use plm_core::KernelSpec;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

use super::{
    default_kernel, default_small_set, default_v, default_x, default_y, fmt, kernel_family,
    required, span, truncation, DataFlags, DataSource,
};
use crate::config::{is_false, resolve};
use crate::output::{csv_text, Manifest, Outputs};

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
    /// Bandwidth; defaults to n^(-1/4).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    /// Select the bandwidth by leave-one-out cross-validation.
    #[arg(long)]
    #[serde(skip_serializing_if = "is_false")]
    pub cv: bool,
    /// Bandwidth grid for --cv, comma separated.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cv_grid: Option<Vec<f64>>,
    /// Density truncation threshold; defaults to 0.05 / ln n.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bn: Option<f64>,
    /// Small set bounds as LO,HI.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub small_set: Option<Vec<f64>>,
    /// Confidence level of the intervals for θ.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub level: Option<f64>,
    /// Points in the curve grid over [min V, max V).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_points: Option<usize>,
    /// Lag truncation of the long-run covariance; defaults to floor(n^(1/3)).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_lag: Option<usize>,
    /// Output directory.
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
    h: Option<f64>,
    #[serde(default)]
    cv: bool,
    cv_grid: Option<Vec<f64>>,
    bn: Option<f64>,
    #[serde(default = "default_small_set")]
    small_set: [f64; 2],
    #[serde(default = "default_level")]
    level: f64,
    #[serde(default = "default_grid_points")]
    grid_points: usize,
    max_lag: Option<usize>,
    #[serde(skip_serializing)]
    out: Option<PathBuf>,
}

fn default_level() -> f64 {
    0.95
}

fn default_grid_points() -> usize {
    300
}

#[derive(Serialize)]
struct Report {
    n: usize,
    dim: usize,
    theta_hat: Vec<f64>,
    ci: Vec<Interval>,
    level: f64,
    kernel: String,
    h: f64,
    h_selected_by_cv: bool,
    b_n: f64,
    small_set: [f64; 2],
    beta_hat: f64,
    n_visits: usize,
    n_blocks: usize,
    effective_n: usize,
    dropped: usize,
    sigma_hat_sq: f64,
    avar: Vec<Vec<f64>>,
    max_lag: usize,
    psd_projected: bool,
    condition: f64,
}

pub fn cv_table(cv: &CvResult) -> Result<Vec<u8>> {
    let header = ["h", "criterion", "dropped"].map(String::from);
    csv_text(
        &header,
        cv.grid
            .iter()
            .zip(&cv.criterion)
            .zip(&cv.dropped)
            .map(|((h, c), d)| vec![fmt(*h), fmt(*c), d.to_string()]),
    )
}

pub fn run(args: Args) -> Result<()> {
    let cfg: Resolved = resolve(&args, args.config.as_deref())?;
    let out = required(cfg.out.clone(), "out")?;
    let source = DataSource {
        data: required(cfg.data.clone(), "data")?,
        y: cfg.y.clone(),
        x: cfg.x.clone(),
        v: cfg.v.clone(),
        no_header: cfg.no_header,
    };
    if !(cfg.level > 0.0 && cfg.level < 1.0) {
        anyhow::bail!("level must lie in (0, 1), got {}", cfg.level);
    }
    if cfg.grid_points == 0 {
        anyhow::bail!("grid_points must be positive");
    }
    let ds = source.load()?;
    let n = ds.len();
    let family = kernel_family(&cfg.kernel)?;
    let trunc = truncation(n, cfg.bn, cfg.small_set)?;

    let (h, cv) = if cfg.cv {
        if cfg.h.is_some() {
            eprintln!("note: --cv given, ignoring h");
        }
        let grid = cfg.cv_grid.clone().unwrap_or_else(|| default_grid(n));
        let cv = cv_select(&ds, &grid, family, &trunc).context("bandwidth selection")?;
        eprintln!("selected h = {}", cv.h_star);
        (cv.h_star, Some(cv))
    } else {
        let h = cfg
            .h
            .unwrap_or_else(|| plm_core::kernel::default_bandwidth(n, 1.0, 0.25));
        (h, None)
    };
    let spec = KernelSpec::new(family, h).context("invalid bandwidth")?;
    let max_lag = cfg.max_lag.unwrap_or_else(|| default_max_lag(n));
    let fit = truncated_sls_with_lag(&ds, &spec, &trunc, max_lag)?;
    if fit.psd_projected {
        eprintln!("warning: long-run covariance projected to the nearest PSD matrix");
    }
    let ci = asymptotic_ci(&fit, cfg.level)?;

    let (lo, hi) = span(ds.v());
    let grid = evaluation_grid(lo, hi, cfg.grid_points);
    let g = estimate_g(&ds, &fit.theta_hat, &grid, &spec);
    let hs = estimate_h(&ds, &grid, &spec);

    let mut outputs = Outputs::dir(&out)?;
    let g_header = ["v", "g_hat", "local_mass", "valid"].map(String::from);
    outputs.write(
        "g_curve.csv",
        &csv_text(
            &g_header,
            (0..grid.len()).map(|i| {
                vec![
                    fmt(grid[i]),
                    fmt(g.values[i]),
                    fmt(g.local_mass[i]),
                    u8::from(g.valid[i]).to_string(),
                ]
            }),
        )?,
    )?;
    let mut h_header = vec!["v".to_string()];
    h_header.extend(cfg.x.iter().map(|c| format!("h_{c}")));
    h_header.extend(["local_mass", "valid"].map(String::from));
    outputs.write(
        "h_curve.csv",
        &csv_text(
            &h_header,
            (0..grid.len()).map(|i| {
                let mut row = vec![fmt(grid[i])];
                row.extend(hs.iter().map(|c| fmt(c.values[i])));
                row.push(fmt(hs[0].local_mass[i]));
                row.push(u8::from(hs[0].valid[i]).to_string());
                row
            }),
        )?,
    )?;
    if let Some(cv) = &cv {
        outputs.write("cv.csv", &cv_table(cv)?)?;
    }

    let report = Report {
        n,
        dim: ds.dim(),
        theta_hat: fit.theta_hat.clone(),
        ci: ci.clone(),
        level: cfg.level,
        kernel: family.to_string(),
        h,
        h_selected_by_cv: cv.is_some(),
        b_n: trunc.b_n(),
        small_set: cfg.small_set,
        beta_hat: fit.beta_hat,
        n_visits: fit.n_visits,
        n_blocks: fit.n_blocks,
        effective_n: fit.effective_n,
        dropped: n - fit.effective_n,
        sigma_hat_sq: fit.sigma_hat_sq,
        avar: fit
            .avar
            .row_iter()
            .map(|r| r.iter().cloned().collect())
            .collect(),
        max_lag: fit.max_lag,
        psd_projected: fit.psd_projected,
        condition: fit.condition,
    };
    outputs.write_json("report.json", &report)?;
    outputs.write_json("manifest.json", &Manifest::new("estimate", None, &cfg, ()))?;
    let dir = outputs.path().to_path_buf();
    outputs.commit();

    for (j, name) in cfg.x.iter().enumerate() {
        println!(
            "theta[{name}] = {:.6}  {:.0}% CI [{:.6}, {:.6}]",
            fit.theta_hat[j],
            100.0 * cfg.level,
            ci[j].lower,
            ci[j].upper
        );
    }
    println!(
        "h = {h:.6}, b_n = {:.6}, beta_hat = {:.4}, N_C = {}, effective n = {} of {n}",
        trunc.b_n(),
        fit.beta_hat,
        fit.n_visits,
        fit.effective_n
    );
    eprintln!("wrote {}", dir.display());
    Ok(())
}
