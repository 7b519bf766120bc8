//! No-intercept AR(1) fit and Dickey–Fuller test with simulated p-values.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::CounterRng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DfResult {
    pub rho_hat: f64,
    pub t_stat: f64,
    pub p_value: f64,
    pub sim_reps: usize,
}

struct Ar1Ols {
    rho: f64,
    sxx: f64,
    rss: f64,
    scale: f64,
    m: usize,
}

fn ar1_ols(z: &[f64]) -> Result<Ar1Ols> {
    if z.len() < 3 {
        return Err(Error::param("AR(1) fit needs at least 3 observations"));
    }
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for w in z.windows(2) {
        sxy += w[0] * w[1];
        sxx += w[0] * w[0];
        syy += w[1] * w[1];
    }
    if !(sxx > 0.0) {
        return Err(Error::param("lagged regressor is identically zero"));
    }
    let rho = sxy / sxx;
    let rss: f64 = z.windows(2).map(|w| (w[1] - rho * w[0]).powi(2)).sum();
    Ok(Ar1Ols {
        rho,
        sxx,
        rss,
        scale: syy,
        m: z.len() - 1,
    })
}

/// `ρ̂ = Σ Z_{t-1} Z_t / Σ Z_{t-1}^2`.
pub fn fit_ar1(z: &[f64]) -> Result<f64> {
    Ok(ar1_ols(z)?.rho)
}

/// `(ρ̂ - 1) / se(ρ̂)` with `se^2 = s^2 / Σ Z_{t-1}^2`, `s^2 = RSS / (n - 2)`.
pub fn df_statistic(z: &[f64]) -> Result<f64> {
    let fit = ar1_ols(z)?;
    // Relative to the response energy; exact recursions leave only round-off.
    if fit.rss <= 1e-24 * fit.scale {
        return Err(Error::Deterministic);
    }
    let s2 = fit.rss / (fit.m - 1) as f64;
    Ok((fit.rho - 1.0) / (s2 / fit.sxx).sqrt())
}

/// Sorted DF statistics of simulated driftless Gaussian random walks.
#[derive(Debug, Clone)]
pub struct DfNullDistribution {
    pub n: usize,
    sorted: Vec<f64>,
}

impl DfNullDistribution {
    /// Simulates `reps` paths `Z_t = Z_{t-1} + e_t`, `Z_0 = 0`, `t = 1..n`,
    /// path `r` drawn from stream `r` of `seed`.
    pub fn simulate(n: usize, reps: usize, seed: u64) -> Result<Self> {
        if reps < 100 {
            return Err(Error::param(format!(
                "need at least 100 simulated paths, got {reps}"
            )));
        }
        if n < 3 {
            return Err(Error::param("path length must be at least 3"));
        }
        let mut sorted: Vec<f64> = (0..reps)
            .into_par_iter()
            .map(|r| {
                let path = unit_root_path(n, seed, r as u64);
                df_statistic(&path).unwrap_or(0.0)
            })
            .collect();
        sorted.sort_by(f64::total_cmp);
        Ok(Self { n, sorted })
    }

    pub fn reps(&self) -> usize {
        self.sorted.len()
    }

    /// Fraction of simulated statistics `<= t`.
    pub fn p_value(&self, t: f64) -> f64 {
        self.sorted.partition_point(|&s| s <= t) as f64 / self.sorted.len() as f64
    }
}

pub fn unit_root_path(n: usize, seed: u64, stream: u64) -> Vec<f64> {
    let mut rng = CounterRng::new(seed, stream);
    let mut level = 0.0;
    (0..n)
        .map(|_| {
            level += rng.normal();
            level
        })
        .collect()
}

pub fn simulated_pvalue(t_stat: f64, n: usize, reps: usize, seed: u64) -> Result<f64> {
    Ok(DfNullDistribution::simulate(n, reps, seed)?.p_value(t_stat))
}

/// Fit, statistic and simulated p-value for one series.
pub fn df_test(z: &[f64], reps: usize, seed: u64) -> Result<DfResult> {
    let rho_hat = fit_ar1(z)?;
    let t_stat = df_statistic(z)?;
    let p_value = simulated_pvalue(t_stat, z.len(), reps, seed)?;
    Ok(DfResult {
        rho_hat,
        t_stat,
        p_value,
        sim_reps: reps,
    })
}
