//! Semi-parametric leave-one-out cross-validation for the bandwidth.
//!
//! For each candidate `h` the full-sample truncated `θ̂_h` is computed, and
//! each retained observation is predicted from the kernel average of the
//! partial residuals `Y_k - X_k'θ̂_h` over its neighbours, itself excluded:
//!
//! ```text
//! CV(h) = (1/m_h) Σ_t F_t (Y_t - X_t'θ̂_h - ĝ^{(-t)}(V_t; θ̂_h))^2
//! ```
//!
//! `m_h` counts the retained observations with a nonempty leave-one-out
//! window; the others are dropped and reported.

use serde::Serialize;

use crate::dataset::TimeSeriesDataset;
use crate::error::{Error, Result};
use crate::kernel::{self, KernelFamily, KernelSpec, SortedCovariate, TruncationSpec};
use crate::sls;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvResult {
    pub h_star: f64,
    /// `CV(h)` per grid point; `+inf` where `h` is degenerate.
    pub criterion: Vec<f64>,
    pub grid: Vec<f64>,
    /// Observations dropped for an empty leave-one-out window, per grid point.
    pub dropped: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvPoint {
    pub value: f64,
    pub used: usize,
    pub dropped: usize,
}

/// 12 log-spaced bandwidths spanning `[0.1 h0, 3 h0]` with `h0 = n^(-1/4)`.
pub fn default_grid(n: usize) -> Vec<f64> {
    let h0 = kernel::default_bandwidth(n, kernel::DEFAULT_C_H, kernel::DEFAULT_ZETA);
    log_grid(0.1 * h0, 3.0 * h0, 12)
}

pub fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..points)
                .map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp())
                .collect()
        }
    }
}

/// `CV(h)` for one bandwidth.
pub fn cv_criterion(
    ds: &TimeSeriesDataset,
    h: f64,
    family: KernelFamily,
    trunc: &TruncationSpec,
) -> Result<CvPoint> {
    let spec = KernelSpec::new(family, h)?;
    let est = sls::truncated_theta(ds, &spec, trunc)?;
    let r = sls::partial_residual(ds, &est.theta);
    let v = ds.v();
    let index = SortedCovariate::new(v);

    let mut sum = 0.0;
    let mut used = 0;
    let mut dropped = 0;
    for t in (0..ds.len()).filter(|&t| est.mask[t]) {
        let (mut num, mut den) = (0.0, 0.0);
        for &k in &index.order[index.window(v[t], &spec)] {
            if k != t {
                let w = spec.at(v[k], v[t]);
                num += w * r[k];
                den += w;
            }
        }
        if den > 0.0 {
            sum += (r[t] - num / den).powi(2);
            used += 1;
        } else {
            dropped += 1;
        }
    }
    if used == 0 {
        return Err(Error::InsufficientData(format!(
            "no leave-one-out neighbourhood is nonempty at h = {h}"
        )));
    }
    Ok(CvPoint {
        value: sum / used as f64,
        used,
        dropped,
    })
}

/// Minimizes `CV(h)` over `h_grid`; ties go to the smaller bandwidth.
pub fn cv_select(
    ds: &TimeSeriesDataset,
    h_grid: &[f64],
    family: KernelFamily,
    trunc: &TruncationSpec,
) -> Result<CvResult> {
    if h_grid.is_empty() {
        return Err(Error::param("bandwidth grid is empty"));
    }
    if h_grid.iter().any(|&h| !(h > 0.0 && h.is_finite())) {
        return Err(Error::param("bandwidth grid must be positive and finite"));
    }
    if h_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::param("bandwidth grid must be strictly increasing"));
    }
    let mut criterion = Vec::with_capacity(h_grid.len());
    let mut dropped = Vec::with_capacity(h_grid.len());
    for &h in h_grid {
        match cv_criterion(ds, h, family, trunc) {
            Ok(p) => {
                criterion.push(p.value);
                dropped.push(p.dropped);
            }
            Err(Error::Parameter(msg)) => return Err(Error::Parameter(msg)),
            Err(_) => {
                criterion.push(f64::INFINITY);
                dropped.push(0);
            }
        }
    }
    let mut best: Option<usize> = None;
    for (i, &c) in criterion.iter().enumerate() {
        if c.is_finite() && best.map_or(true, |b| c < criterion[b]) {
            best = Some(i);
        }
    }
    let best = best.ok_or(Error::DegenerateGrid)?;
    Ok(CvResult {
        h_star: h_grid[best],
        criterion,
        grid: h_grid.to_vec(),
        dropped,
    })
}
