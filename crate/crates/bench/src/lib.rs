//! Fixtures shared by the benchmarks.

use plm_core::montecarlo::{simulate_replication, Dgp, McConfig};
use plm_core::TimeSeriesDataset;

/// One replication of the `X = U` random-walk design.
pub fn case_one(n: usize, seed: u64) -> TimeSeriesDataset {
    let mut cfg = McConfig::new(n, 1, Dgp::HZero);
    cfg.master_seed = seed;
    simulate_replication(&cfg, 0).expect("valid design")
}
