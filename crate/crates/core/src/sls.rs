//! Semi-parametric least squares for `Y_t = X_t'θ + g(V_t) + ε_t`.
//!
//! Both `Y` and every column of `X` are detrended by their Nadaraya–Watson
//! fit on `V` at the sample points; `θ` is the least-squares coefficient of
//! the detrended response on the detrended regressors. The truncated
//! estimator keeps only observations whose scaled local density `p_n(V_t)`
//! exceeds `b_n`. `g` is then recovered by smoothing `Y - X'θ̂`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::dataset::TimeSeriesDataset;
use crate::error::{Error, Result};
use crate::kernel::{self, KernelSpec, TruncationSpec};
use crate::linalg;
use crate::markov;

/// `X - E_h[X | V]` and `Y - E_h[Y | V]` at the sample points.
#[derive(Debug, Clone)]
pub struct Detrended {
    pub x_tilde: DMatrix<f64>,
    pub y_tilde: Vec<f64>,
}

pub fn detrend(ds: &TimeSeriesDataset, spec: &KernelSpec) -> Detrended {
    let n = ds.len();
    let d = ds.dim();
    let targets = DMatrix::from_fn(n, d + 1, |t, j| {
        if j == 0 {
            ds.y()[t]
        } else {
            ds.x()[(t, j - 1)]
        }
    });
    let s = kernel::smooth(ds.v(), &targets, spec);
    // Every sample point lies in its own window, so all rows are valid.
    let y_tilde = (0..n).map(|t| ds.y()[t] - s.values[(t, 0)]).collect();
    let x_tilde = DMatrix::from_fn(n, d, |t, j| ds.x()[(t, j)] - s.values[(t, j + 1)]);
    Detrended { x_tilde, y_tilde }
}

fn masked_solve(
    det: &Detrended,
    raw_x: &DMatrix<f64>,
    mask: Option<&[bool]>,
) -> Result<(DVector<f64>, f64)> {
    let d = det.x_tilde.ncols();
    let mut a = DMatrix::<f64>::zeros(d, d);
    let mut b = DVector::<f64>::zeros(d);
    let mut raw_energy = 0.0;
    for t in 0..det.x_tilde.nrows() {
        if mask.is_some_and(|m| !m[t]) {
            continue;
        }
        raw_energy += raw_x.row(t).norm_squared();
        let row = det.x_tilde.row(t);
        for i in 0..d {
            b[i] += row[i] * det.y_tilde[t];
            for j in 0..d {
                a[(i, j)] += row[i] * row[j];
            }
        }
    }
    // A regressor that is a function of V is annihilated by detrending up to
    // round-off; the condition number alone cannot see that when d = 1.
    if (0..d).any(|i| a[(i, i)] <= 1e-20 * raw_energy) {
        return Err(Error::Singular {
            condition: f64::INFINITY,
        });
    }
    linalg::solve_normal(&a, &b)
}

/// Untruncated estimator `θ̄ = (X̄'X̄)^{-1} X̄'Ȳ`.
pub fn naive_sls(ds: &TimeSeriesDataset, spec: &KernelSpec) -> Result<Vec<f64>> {
    let det = detrend(ds, spec);
    Ok(masked_solve(&det, ds.x(), None)?.0.as_slice().to_vec())
}

/// `θ̂` alone, without the covariance plug-ins.
#[derive(Debug, Clone)]
pub struct ThetaEstimate {
    pub theta: Vec<f64>,
    pub mask: Vec<bool>,
    pub n_blocks: usize,
    pub condition: f64,
    pub detrended: Detrended,
}

pub fn truncated_theta(
    ds: &TimeSeriesDataset,
    spec: &KernelSpec,
    trunc: &TruncationSpec,
) -> Result<ThetaEstimate> {
    let n_blocks = markov::complete_blocks(ds.v(), trunc.small_set())?;
    let mask = kernel::truncation_mask(ds.v(), spec, trunc)?;
    if !mask.iter().any(|&f| f) {
        return Err(Error::EmptyMask);
    }
    let detrended = detrend(ds, spec);
    let (theta, condition) = masked_solve(&detrended, ds.x(), Some(&mask))?;
    Ok(ThetaEstimate {
        theta: theta.as_slice().to_vec(),
        mask,
        n_blocks,
        condition,
        detrended,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SlsFit {
    pub theta_hat: Vec<f64>,
    pub mask: Vec<bool>,
    pub effective_n: usize,
    /// `N(n)`, complete blocks between small-set visits.
    pub n_blocks: usize,
    pub n_visits: usize,
    pub beta_hat: f64,
    pub sigma_hat_sq: f64,
    pub sigma_u: DMatrix<f64>,
    pub sigma_eps_u: DMatrix<f64>,
    /// `Σ̂^{-1} Σ̂_{ε,U} Σ̂^{-1}`.
    pub avar: DMatrix<f64>,
    pub max_lag: usize,
    pub psd_projected: bool,
    pub condition: f64,
}

/// `floor(n^(1/3))`.
pub fn default_max_lag(n: usize) -> usize {
    let mut l = (n as f64).cbrt().floor() as usize;
    // guard against cbrt rounding just below an integer
    while (l + 1).pow(3) <= n {
        l += 1;
    }
    l
}

pub fn truncated_sls(
    ds: &TimeSeriesDataset,
    spec: &KernelSpec,
    trunc: &TruncationSpec,
) -> Result<SlsFit> {
    truncated_sls_with_lag(ds, spec, trunc, default_max_lag(ds.len()))
}

pub fn truncated_sls_with_lag(
    ds: &TimeSeriesDataset,
    spec: &KernelSpec,
    trunc: &TruncationSpec,
    max_lag: usize,
) -> Result<SlsFit> {
    let est = truncated_theta(ds, spec, trunc)?;
    let res = residuals_from(&est.detrended, &est.theta, &est.mask);
    let lr = longrun_covariance(&res.eps_hat, &res.u_hat, &res.valid, max_lag)?;
    let sigma_inv = linalg::inverse_spd(&lr.sigma_u)?;
    let avar = linalg::symmetrize(&(&sigma_inv * &lr.sigma_eps_u * &sigma_inv));
    let n_visits = markov::count_small_set_visits(ds.v(), trunc.small_set());
    let beta_hat = markov::estimate_beta(ds.v(), trunc.small_set())?;
    Ok(SlsFit {
        effective_n: est.mask.iter().filter(|&&f| f).count(),
        theta_hat: est.theta,
        mask: est.mask,
        n_blocks: est.n_blocks,
        n_visits,
        beta_hat,
        sigma_hat_sq: lr.sigma_sq,
        sigma_u: lr.sigma_u,
        sigma_eps_u: lr.sigma_eps_u,
        avar,
        max_lag,
        psd_projected: lr.projected,
        condition: est.condition,
    })
}

/// `ĝ` or `Ĥ` on an evaluation grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveEstimate {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    /// `Σ_t K((V_t - v) / h)`.
    pub local_mass: Vec<f64>,
    pub valid: Vec<bool>,
}

fn curve_from(grid: &[f64], s: &kernel::Smoothed, column: usize) -> CurveEstimate {
    CurveEstimate {
        grid: grid.to_vec(),
        values: (0..grid.len()).map(|i| s.values[(i, column)]).collect(),
        local_mass: s.local_mass.clone(),
        valid: s.valid.clone(),
    }
}

/// `g_n(v; θ) = Σ_t w_nt(v) (Y_t - X_t'θ)` at each grid point.
pub fn estimate_g(
    ds: &TimeSeriesDataset,
    theta: &[f64],
    grid: &[f64],
    spec: &KernelSpec,
) -> CurveEstimate {
    let r = partial_residual(ds, theta);
    let s = kernel::smooth_at(ds.v(), &DMatrix::from_vec(ds.len(), 1, r), grid, spec);
    curve_from(grid, &s, 0)
}

/// Kernel regression of each regressor column on `V`.
pub fn estimate_h(ds: &TimeSeriesDataset, grid: &[f64], spec: &KernelSpec) -> Vec<CurveEstimate> {
    let s = kernel::smooth_at(ds.v(), ds.x(), grid, spec);
    (0..ds.dim()).map(|j| curve_from(grid, &s, j)).collect()
}

/// `Y_t - X_t'θ`.
pub fn partial_residual(ds: &TimeSeriesDataset, theta: &[f64]) -> Vec<f64> {
    assert_eq!(theta.len(), ds.dim(), "theta length must equal d");
    (0..ds.len())
        .map(|t| {
            let fit: f64 = theta
                .iter()
                .enumerate()
                .map(|(j, th)| ds.x()[(t, j)] * th)
                .sum();
            ds.y()[t] - fit
        })
        .collect()
}

/// Grid `lo + (j - 1) / m (hi - lo)` for `j = 1..=m`; `hi` itself is excluded.
pub fn evaluation_grid(lo: f64, hi: f64, m: usize) -> Vec<f64> {
    (0..m)
        .map(|j| lo + (j as f64 / m as f64) * (hi - lo))
        .collect()
}

#[derive(Debug, Clone)]
pub struct Residuals {
    /// `Y_t - X_t'θ̂ - ĝ(V_t)`.
    pub eps_hat: Vec<f64>,
    /// `X_t - Ĥ(V_t)`.
    pub u_hat: DMatrix<f64>,
    /// Smoothing valid and retained by the truncation mask.
    pub valid: Vec<bool>,
}

pub fn residuals(ds: &TimeSeriesDataset, fit: &SlsFit, spec: &KernelSpec) -> Residuals {
    let n = ds.len();
    let d = ds.dim();
    let r = partial_residual(ds, &fit.theta_hat);
    let targets = DMatrix::from_fn(
        n,
        d + 1,
        |t, j| if j == 0 { r[t] } else { ds.x()[(t, j - 1)] },
    );
    let s = kernel::smooth(ds.v(), &targets, spec);
    let eps_hat = (0..n).map(|t| r[t] - s.values[(t, 0)]).collect();
    let u_hat = DMatrix::from_fn(n, d, |t, j| ds.x()[(t, j)] - s.values[(t, j + 1)]);
    let valid = s
        .valid
        .iter()
        .zip(&fit.mask)
        .map(|(&a, &b)| a && b)
        .collect();
    Residuals {
        eps_hat,
        u_hat,
        valid,
    }
}

fn residuals_from(det: &Detrended, theta: &[f64], mask: &[bool]) -> Residuals {
    let th = DVector::from_column_slice(theta);
    let fitted = &det.x_tilde * th;
    Residuals {
        eps_hat: det
            .y_tilde
            .iter()
            .zip(fitted.iter())
            .map(|(y, f)| y - f)
            .collect(),
        u_hat: det.x_tilde.clone(),
        valid: mask.to_vec(),
    }
}

#[derive(Debug, Clone)]
pub struct LongRunCovariance {
    pub sigma_sq: f64,
    pub sigma_u: DMatrix<f64>,
    pub sigma_eps_u: DMatrix<f64>,
    /// Set when the tapered sum was not PSD and had to be projected.
    pub projected: bool,
    pub n_used: usize,
}

/// Plug-in `Σ_{ε,U} = σ²Σ + 2 Σ_{l=1}^{L} (1 - l/L) γ_ε(l) Γ_U(l)`, with
/// `Γ_U(l)` symmetrized and all moments averaged over valid observations.
/// Lag products only pair observations that are both valid.
pub fn longrun_covariance(
    eps_hat: &[f64],
    u_hat: &DMatrix<f64>,
    valid: &[bool],
    max_lag: usize,
) -> Result<LongRunCovariance> {
    let n = eps_hat.len();
    assert_eq!(u_hat.nrows(), n, "u_hat rows must equal eps_hat length");
    assert_eq!(valid.len(), n, "valid length must equal eps_hat length");
    let d = u_hat.ncols();
    let m = valid.iter().filter(|&&b| b).count();
    if m < max_lag + 2 {
        return Err(Error::InsufficientData(format!(
            "{m} valid residuals, need at least {}",
            max_lag + 2
        )));
    }
    let mf = m as f64;
    let mean = (0..n)
        .filter(|&t| valid[t])
        .map(|t| eps_hat[t])
        .sum::<f64>()
        / mf;
    let e: Vec<f64> = eps_hat.iter().map(|x| x - mean).collect();

    let sigma_sq = (0..n)
        .filter(|&t| valid[t])
        .map(|t| e[t] * e[t])
        .sum::<f64>()
        / mf;
    let mut sigma_u = DMatrix::<f64>::zeros(d, d);
    for t in (0..n).filter(|&t| valid[t]) {
        let row = u_hat.row(t);
        sigma_u += row.transpose() * row;
    }
    sigma_u /= mf;

    let mut sigma_eps_u = &sigma_u * sigma_sq;
    for lag in 1..=max_lag {
        let weight = 1.0 - lag as f64 / max_lag as f64;
        if weight == 0.0 {
            continue;
        }
        let mut gamma_e = 0.0;
        let mut gamma_u = DMatrix::<f64>::zeros(d, d);
        for t in 0..n - lag {
            if valid[t] && valid[t + lag] {
                gamma_e += e[t] * e[t + lag];
                gamma_u += u_hat.row(t).transpose() * u_hat.row(t + lag);
            }
        }
        gamma_e /= mf;
        gamma_u /= mf;
        sigma_eps_u += linalg::symmetrize(&gamma_u) * (2.0 * weight * gamma_e);
    }
    let (sigma_eps_u, projected) = linalg::nearest_psd(&sigma_eps_u);
    Ok(LongRunCovariance {
        sigma_sq,
        sigma_u: linalg::symmetrize(&sigma_u),
        sigma_eps_u,
        projected,
        n_used: m,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

/// `θ̂_i ± z_{(1+level)/2} sqrt(avar_ii / n_eff)`.
pub fn asymptotic_ci(fit: &SlsFit, level: f64) -> Result<Vec<Interval>> {
    if !(0.0..1.0).contains(&level) {
        return Err(Error::param(format!(
            "level must lie in [0, 1), got {level}"
        )));
    }
    let z = if level == 0.0 {
        0.0
    } else {
        Normal::standard().inverse_cdf(0.5 * (1.0 + level))
    };
    let n = fit.effective_n as f64;
    fit.theta_hat
        .iter()
        .enumerate()
        .map(|(i, &th)| {
            let var = fit.avar[(i, i)];
            if !var.is_finite() || var < 0.0 {
                return Err(Error::param(format!(
                    "non-finite asymptotic variance {var}"
                )));
            }
            let half = z * (var / n).sqrt();
            Ok(Interval {
                lower: th - half,
                upper: th + half,
            })
        })
        .collect()
}
