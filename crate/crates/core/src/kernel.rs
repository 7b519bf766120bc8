//! Compact-support kernels, Nadaraya–Watson weights, the scaled local
//! density `p_n` and the truncation mask built from it.

use std::ops::Range;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::markov::{self, SmallSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelFamily {
    /// `K(u) = 1/2` on `[-1, 1]`.
    Uniform,
    /// `K(u) = 3/4 (1 - u^2)` on `[-1, 1]`.
    Epanechnikov,
}

impl KernelFamily {
    #[inline]
    pub fn eval(self, u: f64) -> f64 {
        if u.abs() > 1.0 {
            return 0.0;
        }
        match self {
            KernelFamily::Uniform => 0.5,
            KernelFamily::Epanechnikov => 0.75 * (1.0 - u * u),
        }
    }

    /// `∫ K(u)^2 du`.
    pub fn roughness(self) -> f64 {
        match self {
            KernelFamily::Uniform => 0.5,
            KernelFamily::Epanechnikov => 0.6,
        }
    }
}

impl std::str::FromStr for KernelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "uniform" => Ok(KernelFamily::Uniform),
            "epanechnikov" => Ok(KernelFamily::Epanechnikov),
            other => Err(Error::param(format!("unknown kernel family `{other}`"))),
        }
    }
}

impl std::fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            KernelFamily::Uniform => "uniform",
            KernelFamily::Epanechnikov => "epanechnikov",
        })
    }
}

/// Kernel family plus bandwidth `h > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    family: KernelFamily,
    bandwidth: f64,
}

impl KernelSpec {
    pub fn new(family: KernelFamily, bandwidth: f64) -> Result<Self> {
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(Error::param(format!(
                "bandwidth must be positive and finite, got {bandwidth}"
            )));
        }
        Ok(Self { family, bandwidth })
    }

    pub fn uniform(bandwidth: f64) -> Result<Self> {
        Self::new(KernelFamily::Uniform, bandwidth)
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    /// `K((x - v) / h)`, unscaled by `1/h`.
    #[inline]
    pub fn at(&self, x: f64, v: f64) -> f64 {
        self.family.eval((x - v) / self.bandwidth)
    }

    #[inline]
    fn in_support(&self, x: f64, v: f64) -> bool {
        ((x - v) / self.bandwidth).abs() <= 1.0
    }
}

/// Rule-of-thumb bandwidth `c_h n^(-zeta)`.
pub fn default_bandwidth(n: usize, c_h: f64, zeta: f64) -> f64 {
    c_h * (n as f64).powf(-zeta)
}

pub const DEFAULT_C_H: f64 = 1.0;
pub const DEFAULT_ZETA: f64 = 0.25;
pub const DEFAULT_C_B: f64 = 0.05;

/// Threshold `b_n` and the small set that defines `N(n)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationSpec {
    b_n: f64,
    small_set: SmallSet,
}

impl TruncationSpec {
    pub fn new(b_n: f64, small_set: SmallSet) -> Result<Self> {
        if !(b_n >= 0.0 && b_n.is_finite()) {
            return Err(Error::param(format!(
                "b_n must be finite and nonnegative, got {b_n}"
            )));
        }
        Ok(Self { b_n, small_set })
    }

    /// `b_n = c_b / ln n` with `c_b = 0.05`.
    pub fn default_for(n: usize, small_set: SmallSet) -> Self {
        let b_n = if n > 1 {
            DEFAULT_C_B / (n as f64).ln()
        } else {
            0.0
        };
        Self { b_n, small_set }
    }

    pub fn b_n(&self) -> f64 {
        self.b_n
    }

    pub fn small_set(&self) -> SmallSet {
        self.small_set
    }
}

pub fn kernel_eval(spec: &KernelSpec, u: f64) -> f64 {
    spec.family.eval(u)
}

/// Normalized weights `w_nt(v)`; `None` when no observation lies in the
/// kernel window around `v`.
pub fn weights(v_series: &[f64], v: f64, spec: &KernelSpec) -> Option<Vec<f64>> {
    let raw: Vec<f64> = v_series.iter().map(|&x| spec.at(x, v)).collect();
    let total: f64 = raw.iter().sum();
    if total > 0.0 {
        Some(raw.into_iter().map(|k| k / total).collect())
    } else {
        None
    }
}

/// `p_n(v) = (1 / (N(n) h)) Σ_k K((V_k - v) / h)`.
pub fn density_pn(v_series: &[f64], v: f64, spec: &KernelSpec, n_blocks: usize) -> Result<f64> {
    if n_blocks == 0 {
        return Err(Error::param("n_blocks must be at least 1"));
    }
    let mass: f64 = v_series.iter().map(|&x| spec.at(x, v)).sum();
    Ok(mass / (n_blocks as f64 * spec.bandwidth))
}

/// `F_t = 1{p_n(V_t) > b_n}` with `N(n)` taken from the small set in `trunc`.
pub fn truncation_mask(
    v_series: &[f64],
    spec: &KernelSpec,
    trunc: &TruncationSpec,
) -> Result<Vec<bool>> {
    let n_blocks = markov::complete_blocks(v_series, trunc.small_set)?;
    let index = SortedCovariate::new(v_series);
    let scale = 1.0 / (n_blocks as f64 * spec.bandwidth);
    Ok(v_series
        .iter()
        .map(|&v| index.local_mass(v, spec) * scale > trunc.b_n)
        .collect())
}

/// Kernel-weighted averages of target columns at a set of evaluation points.
#[derive(Debug, Clone, PartialEq)]
pub struct Smoothed {
    /// One row per evaluation point, one column per target. Zero where invalid.
    pub values: DMatrix<f64>,
    /// `Σ_t K((V_t - v) / h)` at each evaluation point.
    pub local_mass: Vec<f64>,
    /// False where the kernel window is empty.
    pub valid: Vec<bool>,
}

/// Row `t` holds `Σ_k w_nk(V_t) targets[k]` for each sample point `V_t`.
pub fn smooth(v_series: &[f64], targets: &DMatrix<f64>, spec: &KernelSpec) -> Smoothed {
    smooth_at(v_series, targets, v_series, spec)
}

/// Nadaraya–Watson smoothing of `targets` evaluated at arbitrary `points`.
///
/// Windows are located by binary search over the sorted covariate. The
/// uniform kernel then reduces to prefix-sum differences; other kernels sum
/// over the window only.
pub fn smooth_at(
    v_series: &[f64],
    targets: &DMatrix<f64>,
    points: &[f64],
    spec: &KernelSpec,
) -> Smoothed {
    assert_eq!(
        targets.nrows(),
        v_series.len(),
        "targets row count must equal n"
    );
    let index = SortedCovariate::new(v_series);
    let m = targets.ncols();
    let mut values = DMatrix::zeros(points.len(), m);
    let mut local_mass = vec![0.0; points.len()];
    let mut valid = vec![false; points.len()];

    match spec.family {
        KernelFamily::Uniform => {
            let prefix = index.prefix_sums(targets);
            for (i, &v) in points.iter().enumerate() {
                let w = index.window(v, spec);
                let count = w.len();
                local_mass[i] = 0.5 * count as f64;
                if count == 0 {
                    continue;
                }
                valid[i] = true;
                for j in 0..m {
                    values[(i, j)] = (prefix[j][w.end] - prefix[j][w.start]) / count as f64;
                }
            }
        }
        family => {
            for (i, &v) in points.iter().enumerate() {
                let w = index.window(v, spec);
                let mut mass = 0.0;
                let mut acc = vec![0.0; m];
                for &k in &index.order[w] {
                    let kv = family.eval((v_series[k] - v) / spec.bandwidth);
                    mass += kv;
                    for (j, a) in acc.iter_mut().enumerate() {
                        *a += kv * targets[(k, j)];
                    }
                }
                local_mass[i] = mass;
                if mass > 0.0 {
                    valid[i] = true;
                    for (j, a) in acc.into_iter().enumerate() {
                        values[(i, j)] = a / mass;
                    }
                }
            }
        }
    }
    Smoothed {
        values,
        local_mass,
        valid,
    }
}

/// Direct O(n·m) evaluation of [`smooth_at`]; the reference path for tests
/// and benchmarks.
pub fn smooth_naive_at(
    v_series: &[f64],
    targets: &DMatrix<f64>,
    points: &[f64],
    spec: &KernelSpec,
) -> Smoothed {
    assert_eq!(
        targets.nrows(),
        v_series.len(),
        "targets row count must equal n"
    );
    let m = targets.ncols();
    let mut values = DMatrix::zeros(points.len(), m);
    let mut local_mass = vec![0.0; points.len()];
    let mut valid = vec![false; points.len()];
    for (i, &v) in points.iter().enumerate() {
        let mass: f64 = v_series.iter().map(|&x| spec.at(x, v)).sum();
        local_mass[i] = mass;
        if mass > 0.0 {
            valid[i] = true;
            for j in 0..m {
                let num: f64 = v_series
                    .iter()
                    .enumerate()
                    .map(|(k, &x)| spec.at(x, v) * targets[(k, j)])
                    .sum();
                values[(i, j)] = num / mass;
            }
        }
    }
    Smoothed {
        values,
        local_mass,
        valid,
    }
}

/// The covariate sorted once, for window lookups.
#[derive(Debug, Clone)]
pub struct SortedCovariate {
    /// `order[i]` is the original index of the i-th smallest value.
    pub order: Vec<usize>,
    pub sorted: Vec<f64>,
}

impl SortedCovariate {
    pub fn new(v_series: &[f64]) -> Self {
        let mut order: Vec<usize> = (0..v_series.len()).collect();
        order.sort_by(|&a, &b| v_series[a].total_cmp(&v_series[b]));
        let sorted = order.iter().map(|&k| v_series[k]).collect();
        Self { order, sorted }
    }

    /// Positions in sorted order whose kernel argument satisfies `|u| <= 1`.
    /// `(x - v) / h` is monotone in `x`, so the set is a contiguous range and
    /// agrees exactly with the support test of the direct evaluation.
    pub fn window(&self, v: f64, spec: &KernelSpec) -> Range<usize> {
        let h = spec.bandwidth;
        let lo = self.sorted.partition_point(|&x| (x - v) / h < -1.0);
        let hi = lo + self.sorted[lo..].partition_point(|&x| spec.in_support(x, v));
        lo..hi
    }

    pub fn local_mass(&self, v: f64, spec: &KernelSpec) -> f64 {
        let w = self.window(v, spec);
        match spec.family {
            KernelFamily::Uniform => 0.5 * w.len() as f64,
            family => self.sorted[w]
                .iter()
                .map(|&x| family.eval((x - v) / spec.bandwidth))
                .sum(),
        }
    }

    /// Per-column prefix sums of `targets` taken in sorted order.
    fn prefix_sums(&self, targets: &DMatrix<f64>) -> Vec<Vec<f64>> {
        (0..targets.ncols())
            .map(|j| {
                let mut acc = 0.0;
                let mut p = Vec::with_capacity(self.order.len() + 1);
                p.push(0.0);
                for &k in &self.order {
                    acc += targets[(k, j)];
                    p.push(acc);
                }
                p
            })
            .collect()
    }
}
