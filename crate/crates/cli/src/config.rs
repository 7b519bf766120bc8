//! Flag and config-file merging.
//!
//! Each subcommand has a flag struct whose set fields serialize to TOML keys,
//! and a resolved struct that deserializes from the config file with those
//! keys overlaid. Unknown keys are rejected.

use anyhow::{Context, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;
use std::path::Path;

pub fn resolve<F: Serialize, R: DeserializeOwned>(flags: &F, file: Option<&Path>) -> Result<R> {
    let mut table = match file {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            toml::from_str::<toml::Table>(&text)
                .with_context(|| format!("parsing config {}", path.display()))?
        }
        None => toml::Table::new(),
    };
    let overrides = toml::Table::try_from(flags).context("encoding command-line flags")?;
    table.extend(overrides);
    let resolved = toml::Value::Table(table)
        .try_into()
        .context("invalid configuration")?;
    Ok(resolved)
}

pub fn is_false(b: &bool) -> bool {
    !*b
}

/// Bounds of the small set `C` as `LO,HI`.
pub fn small_set(bounds: [f64; 2]) -> Result<plm_core::SmallSet> {
    plm_core::SmallSet::new(bounds[0], bounds[1]).context("invalid --small-set")
}
