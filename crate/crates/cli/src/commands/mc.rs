use anyhow::{Context, Result};
use plm_core::montecarlo::{
    emit_curve_data, run_cell, write_table_csv, BandwidthRule, Dgp, GFunction, McCellResult,
    McConfig,
};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

use super::simulate::default_seed;
use super::{default_kernel, default_small_set, kernel_family, required};
use crate::config::{is_false, resolve};
use crate::output::{Manifest, Outputs};

#[derive(clap::Args, Serialize, Debug)]
pub struct Args {
    /// Experiment config (for example configs/table1.cfg).
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Sample sizes, comma separated.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sizes: Option<Vec<usize>>,
    /// Designs, comma separated: h_zero, h_identity.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dgps: Option<Vec<String>>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reps: Option<usize>,
    /// Master seed.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Fixed bandwidth for every replication.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    /// Calibrate the bandwidth by cross-validation on a pilot replication.
    #[arg(long)]
    #[serde(skip_serializing_if = "is_false")]
    pub cv: bool,
    /// Density truncation threshold; defaults to 0.05 / ln n.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bn: Option<f64>,
    /// Small set bounds as LO,HI.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub small_set: Option<Vec<f64>>,
    /// Which estimator the table summarizes: theta or g.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table: Option<String>,
    /// Output directory.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

#[derive(Deserialize, Serialize, Debug)]
#[serde(deny_unknown_fields)]
struct Resolved {
    #[serde(default = "default_sizes")]
    sizes: Vec<usize>,
    #[serde(default = "default_dgps")]
    dgps: Vec<String>,
    #[serde(default = "default_reps")]
    reps: usize,
    #[serde(default = "default_seed")]
    seed: u64,
    #[serde(default = "one")]
    theta0: f64,
    #[serde(default = "default_g")]
    g: String,
    #[serde(default = "default_increment_sd")]
    increment_sd: f64,
    #[serde(default = "default_rho")]
    eps_rho: f64,
    #[serde(default = "one")]
    eps_sd: f64,
    #[serde(default = "default_kernel")]
    kernel: String,
    /// pilot_cv, rule_of_thumb or fixed.
    bandwidth: Option<String>,
    h: Option<f64>,
    #[serde(default)]
    cv: bool,
    #[serde(default = "one")]
    c_h: f64,
    bn: Option<f64>,
    #[serde(default = "default_small_set")]
    small_set: [f64; 2],
    #[serde(default = "default_grid_points")]
    grid_points: usize,
    #[serde(default = "default_level")]
    level: f64,
    #[serde(default = "default_table")]
    table: String,
    /// Replications whose curve estimates are written per cell.
    #[serde(default)]
    curve_reps: Vec<u64>,
    #[serde(skip_serializing)]
    out: Option<PathBuf>,
}

fn default_sizes() -> Vec<usize> {
    vec![200, 700, 1200]
}

fn default_dgps() -> Vec<String> {
    vec!["h_zero".into(), "h_identity".into()]
}

fn default_reps() -> usize {
    1000
}

fn one() -> f64 {
    1.0
}

fn default_g() -> String {
    "identity".into()
}

fn default_increment_sd() -> f64 {
    0.1
}

fn default_rho() -> f64 {
    0.5
}

fn default_grid_points() -> usize {
    300
}

fn default_level() -> f64 {
    0.95
}

fn default_table() -> String {
    "theta".into()
}

impl Resolved {
    fn bandwidth_rule(&self) -> Result<BandwidthRule> {
        let named = match (self.cv, self.bandwidth.as_deref()) {
            (true, _) => Some("pilot_cv"),
            (false, b) => b,
        };
        match (named, self.h) {
            (None | Some("fixed"), Some(h)) => Ok(BandwidthRule::Fixed(h)),
            (Some("fixed"), None) => anyhow::bail!("bandwidth = \"fixed\" needs h"),
            (None | Some("pilot_cv"), None) => Ok(BandwidthRule::PilotCv),
            (Some("rule_of_thumb"), None) => Ok(BandwidthRule::RuleOfThumb(self.c_h)),
            (Some(other @ ("pilot_cv" | "rule_of_thumb")), Some(_)) => {
                anyhow::bail!("h conflicts with bandwidth = \"{other}\"")
            }
            (Some(other), _) => anyhow::bail!("unknown bandwidth rule `{other}`"),
        }
    }

    fn cell(&self, n: usize, dgp: Dgp) -> Result<McConfig> {
        let mut cfg = McConfig::new(n, self.reps, dgp);
        cfg.theta0 = self.theta0;
        cfg.g0 = self.g.parse::<GFunction>()?;
        cfg.increment_sd = self.increment_sd;
        cfg.eps_rho = self.eps_rho;
        cfg.eps_sd = self.eps_sd;
        cfg.master_seed = self.seed;
        cfg.family = kernel_family(&self.kernel)?;
        cfg.bandwidth = self.bandwidth_rule()?;
        cfg.b_n = self.bn;
        cfg.small_set = (self.small_set[0], self.small_set[1]);
        cfg.g_grid_points = self.grid_points;
        cfg.ci_level = self.level;
        cfg.check()?;
        Ok(cfg)
    }
}

#[derive(Serialize)]
struct CellSummary {
    n: usize,
    dgp: String,
    h: f64,
    b_n: f64,
    pilot_h: Option<f64>,
    theta: McCellResult,
    g: McCellResult,
    ci_coverage: f64,
}

pub fn run(args: Args) -> Result<()> {
    let cfg: Resolved = resolve(&args, args.config.as_deref())?;
    let out = required(cfg.out.clone(), "out")?;
    if !matches!(cfg.table.as_str(), "theta" | "g") {
        anyhow::bail!("table must be `theta` or `g`, got `{}`", cfg.table);
    }
    let dgps: Vec<Dgp> = cfg
        .dgps
        .iter()
        .map(|d| d.parse::<Dgp>())
        .collect::<plm_core::Result<_>>()?;
    if cfg.reps == 1 {
        eprintln!("warning: a single replication; se is reported as 0");
    }

    let mut outputs = Outputs::dir(&out)?;
    let mut rows = Vec::new();
    let mut cells = Vec::new();
    for &dgp in &dgps {
        for &n in &cfg.sizes {
            let mc = cfg.cell(n, dgp)?;
            let report = run_cell(&mc).with_context(|| format!("cell n={n}, {dgp}"))?;
            let mut summary = match cfg.table.as_str() {
                "theta" => report.theta,
                _ => report.g,
            };
            if cfg.reps == 1 {
                summary.se = 0.0;
            }
            if summary.failures > 0 {
                eprintln!(
                    "warning: n={n}, {dgp}: {} failed replications excluded",
                    summary.failures
                );
            }
            eprintln!(
                "n={n} {dgp}: AE {:.4} SE {:.4} (h = {:.4})",
                summary.ae,
                summary.se,
                report.kernel.bandwidth()
            );
            rows.push((n, dgp, summary));
            cells.push(CellSummary {
                n,
                dgp: dgp.to_string(),
                h: report.kernel.bandwidth(),
                b_n: report.b_n,
                pilot_h: report.pilot.as_ref().map(|p| p.h_star),
                theta: report.theta,
                g: report.g,
                ci_coverage: report.ci_coverage,
            });
            for &rep in &cfg.curve_reps {
                let path = outputs
                    .path()
                    .join(format!("curve_n{n}_{dgp}_rep{rep}.csv"));
                outputs.track(path.clone());
                emit_curve_data(&mc, rep, &path)?;
            }
        }
    }

    let mut table = Vec::new();
    write_table_csv(&rows, &mut table)?;
    outputs.write("table.csv", &table)?;
    outputs.write_json(
        "manifest.json",
        &Manifest::new("mc", Some(cfg.seed), &cfg, cells),
    )?;
    let dir = outputs.path().to_path_buf();
    outputs.commit();
    eprintln!("wrote {}", dir.join("table.csv").display());
    Ok(())
}
