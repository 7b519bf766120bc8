//! Replication engine for the partially linear random-walk design
//!
//! ```text
//! V_t = V_{t-1} + N(0, increment_sd^2),  V_0 = 0
//! ε_t = eps_rho ε_{t-1} + N(0, eps_sd^2)
//! U_t ~ N(0, 1) i.i.d.
//! X_t = U_t            (H ≡ 0)   or   V_t + U_t   (H(v) = v)
//! Y_t = θ0 X_t + g0(V_t) + ε_t
//! ```
//!
//! Replication `r` draws `V`, `U` and `ε` from seeds derived from
//! `(master_seed, r, component)`, so each replication is reproducible in
//! isolation and results do not depend on the thread schedule.

use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::bandwidth::{self, CvResult};
use crate::dataset::TimeSeriesDataset;
use crate::error::{Error, Result};
use crate::kernel::{self, KernelFamily, KernelSpec, TruncationSpec};
use crate::markov::{self, SmallSet};
use crate::rng::{derive_seed, CounterRng};
use crate::sls;
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Dgp {
    /// Case (i): `X_t = U_t`.
    HZero,
    /// Case (ii): `X_t = V_t + U_t`.
    HIdentity,
}

impl Dgp {
    pub fn label(self) -> &'static str {
        match self {
            Dgp::HZero => "H(v)=0",
            Dgp::HIdentity => "H(v)=v",
        }
    }
}

impl std::str::FromStr for Dgp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "h_zero" | "zero" | "i" => Ok(Dgp::HZero),
            "h_identity" | "identity" | "ii" => Ok(Dgp::HIdentity),
            other => Err(Error::param(format!("unknown dgp `{other}`"))),
        }
    }
}

impl std::fmt::Display for Dgp {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Dgp::HZero => "h_zero",
            Dgp::HIdentity => "h_identity",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GFunction {
    Identity,
    Zero,
}

impl GFunction {
    #[inline]
    pub fn eval(self, v: f64) -> f64 {
        match self {
            GFunction::Identity => v,
            GFunction::Zero => 0.0,
        }
    }
}

impl std::str::FromStr for GFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "identity" => Ok(GFunction::Identity),
            "zero" => Ok(GFunction::Zero),
            other => Err(Error::param(format!("unknown g function `{other}`"))),
        }
    }
}

impl std::fmt::Display for GFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            GFunction::Identity => "identity",
            GFunction::Zero => "zero",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BandwidthRule {
    /// One fixed bandwidth for every replication.
    Fixed(f64),
    /// `c_h n^(-1/4)`.
    RuleOfThumb(f64),
    /// Cross-validation on a pilot replication, then fixed for the cell.
    PilotCv,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McConfig {
    pub n: usize,
    pub reps: usize,
    pub dgp: Dgp,
    pub theta0: f64,
    pub g0: GFunction,
    pub increment_sd: f64,
    pub eps_rho: f64,
    pub eps_sd: f64,
    pub master_seed: u64,
    pub family: KernelFamily,
    pub bandwidth: BandwidthRule,
    /// `None` selects `0.05 / ln n`.
    pub b_n: Option<f64>,
    pub small_set: (f64, f64),
    pub g_grid_points: usize,
    /// Confidence level for the per-replication interval on `θ`.
    pub ci_level: f64,
}

impl McConfig {
    pub fn new(n: usize, reps: usize, dgp: Dgp) -> Self {
        Self {
            n,
            reps,
            dgp,
            theta0: 1.0,
            g0: GFunction::Identity,
            increment_sd: 0.1,
            eps_rho: 0.5,
            eps_sd: 1.0,
            master_seed: 20_100_401,
            family: KernelFamily::Uniform,
            bandwidth: BandwidthRule::PilotCv,
            b_n: None,
            small_set: (-1.0, 1.0),
            g_grid_points: 300,
            ci_level: 0.95,
        }
    }

    pub fn check(&self) -> Result<()> {
        if self.n < 10 {
            return Err(Error::param(format!(
                "n must be at least 10, got {}",
                self.n
            )));
        }
        if self.reps < 1 {
            return Err(Error::param("reps must be at least 1"));
        }
        if self.g_grid_points < 1 {
            return Err(Error::param("g_grid_points must be at least 1"));
        }
        SmallSet::new(self.small_set.0, self.small_set.1)?;
        Ok(())
    }

    pub fn truncation(&self) -> Result<TruncationSpec> {
        let c = SmallSet::new(self.small_set.0, self.small_set.1)?;
        match self.b_n {
            Some(b) => TruncationSpec::new(b, c),
            None => Ok(TruncationSpec::default_for(self.n, c)),
        }
    }

    /// Long-run marginal variance `σ² = eps_sd² / (1 - rho²)`.
    pub fn eps_variance(&self) -> f64 {
        self.eps_sd * self.eps_sd / (1.0 - self.eps_rho * self.eps_rho)
    }
}

/// Replication index reserved for bandwidth calibration.
pub const PILOT_REPLICATION: u64 = u64::MAX;

/// Simulated data for replication `rep`.
pub fn simulate_replication(cfg: &McConfig, rep: u64) -> Result<TimeSeriesDataset> {
    let n = cfg.n;
    let v = markov::simulate_random_walk(
        n,
        cfg.increment_sd,
        0.0,
        derive_seed(cfg.master_seed, &[rep, 0]),
    )?;
    let mut rng = CounterRng::new(derive_seed(cfg.master_seed, &[rep, 1]), 0);
    let u: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
    let eps = markov::simulate_ar1(
        n,
        cfg.eps_rho,
        cfg.eps_sd,
        derive_seed(cfg.master_seed, &[rep, 2]),
    )?;
    let x: Vec<f64> = match cfg.dgp {
        Dgp::HZero => u,
        Dgp::HIdentity => v.iter().zip(&u).map(|(a, b)| a + b).collect(),
    };
    let y = (0..n)
        .map(|t| cfg.theta0 * x[t] + cfg.g0.eval(v[t]) + eps[t])
        .collect();
    TimeSeriesDataset::new(y, DMatrix::from_vec(n, 1, x), v)
}

/// Kernel used for every replication of the cell, plus the pilot CV run
/// when one was needed.
pub fn resolve_kernel(cfg: &McConfig) -> Result<(KernelSpec, Option<CvResult>)> {
    match cfg.bandwidth {
        BandwidthRule::Fixed(h) => Ok((KernelSpec::new(cfg.family, h)?, None)),
        BandwidthRule::RuleOfThumb(c_h) => {
            let h = kernel::default_bandwidth(cfg.n, c_h, kernel::DEFAULT_ZETA);
            Ok((KernelSpec::new(cfg.family, h)?, None))
        }
        BandwidthRule::PilotCv => {
            let pilot = simulate_replication(cfg, PILOT_REPLICATION)?;
            let cv = bandwidth::cv_select(
                &pilot,
                &bandwidth::default_grid(cfg.n),
                cfg.family,
                &cfg.truncation()?,
            )?;
            Ok((KernelSpec::new(cfg.family, cv.h_star)?, Some(cv)))
        }
    }
}

/// Per-replication results.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicationOutcome {
    pub rep: u64,
    pub theta_hat: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
    /// Mean `|ĝ(v_j) - g0(v_j)|` over valid grid points.
    pub g_abs_error: f64,
    pub g_invalid: usize,
}

pub fn run_replication(
    cfg: &McConfig,
    rep: u64,
    spec: &KernelSpec,
    trunc: &TruncationSpec,
) -> Result<ReplicationOutcome> {
    let ds = simulate_replication(cfg, rep)?;
    let fit = sls::truncated_sls(&ds, spec, trunc)?;
    let ci = sls::asymptotic_ci(&fit, cfg.ci_level)?[0];
    let (lo, hi) = min_max(ds.v());
    let grid = sls::evaluation_grid(lo, hi, cfg.g_grid_points);
    let g = sls::estimate_g(&ds, &fit.theta_hat, &grid, spec);
    let (mut sum, mut used) = (0.0, 0usize);
    for ((&v, &gh), &ok) in g.grid.iter().zip(&g.values).zip(&g.valid) {
        if ok {
            sum += (gh - cfg.g0.eval(v)).abs();
            used += 1;
        }
    }
    if used == 0 {
        return Err(Error::InsufficientData("no valid grid point for ĝ".into()));
    }
    Ok(ReplicationOutcome {
        rep,
        theta_hat: fit.theta_hat[0],
        ci_lower: ci.lower,
        ci_upper: ci.upper,
        g_abs_error: sum / used as f64,
        g_invalid: cfg.g_grid_points - used,
    })
}

/// One cell of a results table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McCellResult {
    pub ae: f64,
    pub se: f64,
    pub reps_used: usize,
    pub failures: usize,
    /// Grid points skipped for an empty kernel window, summed over replications.
    pub invalid_points: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct CellReport {
    pub theta: McCellResult,
    pub g: McCellResult,
    pub kernel: KernelSpec,
    pub b_n: f64,
    #[serde(skip)]
    pub pilot: Option<CvResult>,
    pub ci_coverage: f64,
    #[serde(skip)]
    pub outcomes: Vec<ReplicationOutcome>,
}

impl CellReport {
    pub fn theta_draws(&self) -> Vec<f64> {
        self.outcomes.iter().map(|o| o.theta_hat).collect()
    }
}

fn run_all<T, F>(cfg: &McConfig, f: F) -> Result<(Vec<T>, usize)>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync,
{
    let results: Vec<Result<T>> = (0..cfg.reps as u64).into_par_iter().map(&f).collect();
    let mut ok = Vec::with_capacity(results.len());
    let mut failures = 0;
    for r in results {
        match r {
            Ok(x) => ok.push(x),
            Err(_) => failures += 1,
        }
    }
    if failures * 10 > cfg.reps {
        return Err(Error::TooManyFailures {
            failures,
            reps: cfg.reps,
        });
    }
    Ok((ok, failures))
}

/// Runs every replication once and summarizes both `θ̂` and `ĝ`.
pub fn run_cell(cfg: &McConfig) -> Result<CellReport> {
    cfg.check()?;
    let trunc = cfg.truncation()?;
    let (spec, pilot) = resolve_kernel(cfg)?;
    let (outcomes, failures) = run_all(cfg, |rep| run_replication(cfg, rep, &spec, &trunc))?;

    let thetas: Vec<f64> = outcomes.iter().map(|o| o.theta_hat).collect();
    let theta_err: Vec<f64> = thetas.iter().map(|t| (t - cfg.theta0).abs()).collect();
    let g_err: Vec<f64> = outcomes.iter().map(|o| o.g_abs_error).collect();
    let covered = outcomes
        .iter()
        .filter(|o| o.ci_lower <= cfg.theta0 && cfg.theta0 <= o.ci_upper)
        .count();
    let used = outcomes.len();
    Ok(CellReport {
        theta: McCellResult {
            ae: stats::mean(&theta_err),
            se: stats::std_dev(&thetas),
            reps_used: used,
            failures,
            invalid_points: 0,
        },
        g: McCellResult {
            ae: stats::mean(&g_err),
            se: stats::std_dev(&g_err),
            reps_used: used,
            failures,
            invalid_points: outcomes.iter().map(|o| o.g_invalid).sum(),
        },
        kernel: spec,
        b_n: trunc.b_n(),
        pilot,
        ci_coverage: covered as f64 / used as f64,
        outcomes,
    })
}

/// `AE = mean |θ̂(j) - θ0|`, `SE = sd{θ̂(j)}`.
pub fn run_theta_experiment(cfg: &McConfig) -> Result<McCellResult> {
    Ok(run_cell(cfg)?.theta)
}

/// `AE = mean_j (1/m) Σ_i |ĝ(v_i) - g0(v_i)|` over the per-replication grid.
pub fn run_g_experiment(cfg: &McConfig) -> Result<McCellResult> {
    Ok(run_cell(cfg)?.g)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormalityDiagnostics {
    pub draws: usize,
    /// `mean(draws) - theta0`.
    pub bias: f64,
    pub ks_distance: f64,
    pub ks_pvalue: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
}

/// KS distance of the standardized draws to `N(0, 1)`, with skewness and
/// excess kurtosis.
pub fn normality_check(theta_draws: &[f64], theta0: f64) -> Result<NormalityDiagnostics> {
    let m = theta_draws.len();
    if m < 200 {
        return Err(Error::InsufficientData(format!(
            "normality check needs at least 200 draws, got {m}"
        )));
    }
    let mean = stats::mean(theta_draws);
    let sd = stats::std_dev(theta_draws);
    if !(sd > 0.0) {
        return Err(Error::InsufficientData("draws have zero spread".into()));
    }
    let z: Vec<f64> = theta_draws.iter().map(|t| (t - mean) / sd).collect();
    let d = stats::ks_distance_std_normal(&z);
    let (skewness, excess_kurtosis) = stats::shape(theta_draws);
    Ok(NormalityDiagnostics {
        draws: m,
        bias: mean - theta0,
        ks_distance: d,
        ks_pvalue: stats::ks_pvalue(d, m),
        skewness,
        excess_kurtosis,
    })
}

/// Where to evaluate the pointwise limit law of `ĝ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CltPoint {
    Fixed(f64),
    /// The median of each replication's own `V` path.
    SampleMedian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GCltDiagnostics {
    /// Sample variance of `sqrt(local_mass) (ĝ(v) - g0(v))`.
    pub empirical_variance: f64,
    /// Normal-theory standard error of `empirical_variance`.
    pub variance_se: f64,
    /// `σ² ∫K²`.
    pub target: f64,
    pub mean: f64,
    pub reps_used: usize,
    pub invalid: usize,
    pub failures: usize,
}

pub fn g_clt_check(cfg: &McConfig, point: CltPoint) -> Result<GCltDiagnostics> {
    cfg.check()?;
    let trunc = cfg.truncation()?;
    let (spec, _) = resolve_kernel(cfg)?;
    let (draws, failures) = run_all(cfg, |rep| {
        let ds = simulate_replication(cfg, rep)?;
        let est = sls::truncated_theta(&ds, &spec, &trunc)?;
        let v = match point {
            CltPoint::Fixed(v) => v,
            CltPoint::SampleMedian => median(ds.v()),
        };
        let g = sls::estimate_g(&ds, &est.theta, &[v], &spec);
        Ok(g.valid[0].then(|| g.local_mass[0].sqrt() * (g.values[0] - cfg.g0.eval(v))))
    })?;
    let invalid = draws.iter().filter(|d| d.is_none()).count();
    if invalid * 5 > cfg.reps {
        return Err(Error::InsufficientData(format!(
            "evaluation point invalid in {invalid} of {} replications",
            cfg.reps
        )));
    }
    let s: Vec<f64> = draws.into_iter().flatten().collect();
    let var = stats::variance(&s);
    let m = s.len();
    Ok(GCltDiagnostics {
        empirical_variance: var,
        variance_se: if m > 1 {
            var * (2.0 / (m - 1) as f64).sqrt()
        } else {
            0.0
        },
        target: cfg.eps_variance() * cfg.family.roughness(),
        mean: stats::mean(&s),
        reps_used: m,
        invalid,
        failures,
    })
}

/// Writes `v,g_true,g_hat,valid` for replication `rep` over the
/// `g_grid_points` evaluation grid.
pub fn emit_curve_data(cfg: &McConfig, rep: u64, out: &Path) -> Result<()> {
    cfg.check()?;
    let trunc = cfg.truncation()?;
    let (spec, _) = resolve_kernel(cfg)?;
    let ds = simulate_replication(cfg, rep)?;
    let est = sls::truncated_theta(&ds, &spec, &trunc)?;
    let (lo, hi) = min_max(ds.v());
    let grid = sls::evaluation_grid(lo, hi, cfg.g_grid_points);
    let g = sls::estimate_g(&ds, &est.theta, &grid, &spec);
    let file = std::fs::File::create(out).map_err(|e| Error::io(out, e))?;
    let mut w = std::io::BufWriter::new(file);
    let io = |e| Error::io(out, e);
    writeln!(w, "v,g_true,g_hat,valid").map_err(io)?;
    for (i, &v) in grid.iter().enumerate() {
        writeln!(
            w,
            "{},{},{},{}",
            fmt17(v),
            fmt17(cfg.g0.eval(v)),
            fmt17(g.values[i]),
            u8::from(g.valid[i])
        )
        .map_err(io)?;
    }
    w.flush().map_err(io)
}

/// 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Table rows `n,dgp,ae,se,reps_used,failures`.
pub fn write_table_csv<W: Write>(
    rows: &[(usize, Dgp, McCellResult)],
    mut w: W,
) -> std::io::Result<()> {
    writeln!(w, "n,dgp,ae,se,reps_used,failures")?;
    for (n, dgp, cell) in rows {
        writeln!(
            w,
            "{n},{dgp},{},{},{},{}",
            fmt17(cell.ae),
            fmt17(cell.se),
            cell.reps_used,
            cell.failures
        )?;
    }
    Ok(())
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        })
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len();
    if m % 2 == 1 {
        s[m / 2]
    } else {
        0.5 * (s[m / 2 - 1] + s[m / 2])
    }
}
