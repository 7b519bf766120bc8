//! Output files that are removed again unless the run commits.

use anyhow::{Context, Result};
use serde::Serialize;
use std::path::{Path, PathBuf};

/// Environment variable naming the root for relative output paths.
pub const OUTPUT_ROOT_ENV: &str = "PLM_OUTPUT_ROOT";

pub fn resolve_path(path: &Path) -> PathBuf {
    match std::env::var_os(OUTPUT_ROOT_ENV) {
        Some(root) if path.is_relative() => Path::new(&root).join(path),
        _ => path.to_path_buf(),
    }
}

pub struct Outputs {
    dir: PathBuf,
    created: Vec<PathBuf>,
    files: Vec<PathBuf>,
    committed: bool,
}

impl Outputs {
    /// Output directory, created (with parents) if missing.
    pub fn dir(path: &Path) -> Result<Self> {
        let dir = resolve_path(path);
        let mut created = Vec::new();
        let mut probe = dir.as_path();
        while !probe.as_os_str().is_empty() && !probe.exists() {
            created.push(probe.to_path_buf());
            match probe.parent() {
                Some(p) => probe = p,
                None => break,
            }
        }
        std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self {
            dir,
            created,
            files: Vec::new(),
            committed: false,
        })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.dir.join(name);
        self.files.push(path.clone());
        std::fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }

    /// Registers a file written by other code.
    pub fn track(&mut self, path: PathBuf) {
        self.files.push(path);
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn commit(mut self) {
        self.committed = true;
    }
}

impl Drop for Outputs {
    fn drop(&mut self) {
        if self.committed {
            return;
        }
        for f in &self.files {
            let _ = std::fs::remove_file(f);
        }
        for d in &self.created {
            let _ = std::fs::remove_dir(d);
        }
    }
}

/// Self-description written next to every output.
#[derive(Serialize)]
pub struct Manifest<'a, C: Serialize, R: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub core_version: &'static str,
    pub command: &'static str,
    pub seed: Option<u64>,
    pub config: &'a C,
    pub results: R,
}

impl<'a, C: Serialize, R: Serialize> Manifest<'a, C, R> {
    pub fn new(command: &'static str, seed: Option<u64>, config: &'a C, results: R) -> Self {
        Self {
            tool: "plm",
            version: env!("CARGO_PKG_VERSION"),
            core_version: plm_core::VERSION,
            command,
            seed,
            config,
            results,
        }
    }
}

/// CSV text from a header and rows of preformatted cells.
pub fn csv_text(header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))
}
