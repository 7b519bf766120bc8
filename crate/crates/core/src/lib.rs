//! Semi-parametric least-squares estimation for partially linear models
//!
//! ```text
//! Y_t = X_t'θ + g(V_t) + ε_t
//! ```
//!
//! where the covariate `V_t` is a null recurrent Markov chain such as a
//! random walk. The crate provides the kernel machinery, the truncated SLS
//! estimator of `θ` with plug-in long-run covariance, curve estimates of `g`
//! and `H(v) = E[X | V = v]`, leave-one-out bandwidth selection, a
//! deterministic parallel Monte Carlo engine, and Dickey–Fuller diagnostics.

// NaN-rejecting guards are written as negated comparisons.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

/// Version of this crate, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub mod bandwidth;
pub mod dataset;
pub mod error;
pub mod kernel;
pub mod linalg;
pub mod markov;
pub mod montecarlo;
pub mod rng;
pub mod sls;
pub mod stats;
pub mod unitroot;

pub use dataset::{load_csv, load_series, ColumnSchema, TimeSeriesDataset, ValidationReport};
pub use error::{Error, Result};
pub use kernel::{KernelFamily, KernelSpec, TruncationSpec};
pub use markov::{BlockDecomposition, SmallSet};
pub use montecarlo::{McCellResult, McConfig};
pub use sls::{CurveEstimate, SlsFit};
pub use unitroot::DfResult;
