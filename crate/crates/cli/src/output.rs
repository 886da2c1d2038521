//! CSV tables, SVG files and run metadata inside an output directory.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};

pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Shortest decimal that parses back to the same `f64`.
pub fn num(v: f64) -> String {
    format!("{v}")
}

pub struct OutputDir {
    root: PathBuf,
}

impl OutputDir {
    pub fn create(root: &Path) -> CliResult<Self> {
        std::fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(Self { root: root.to_path_buf() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn subdir(&self, name: &str) -> CliResult<Self> {
        Self::create(&self.root.join(name))
    }

    pub fn csv<I>(&self, name: &str, header: &[&str], rows: I) -> CliResult<PathBuf>
    where
        I: IntoIterator<Item = Vec<String>>,
    {
        let path = self.path(name);
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(header)?;
        for row in rows {
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }

    pub fn text(&self, name: &str, contents: &str) -> CliResult<PathBuf> {
        let path = self.path(name);
        std::fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }

    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> CliResult<PathBuf> {
        let text = serde_json::to_string_pretty(value).expect("output records serialize");
        self.text(name, &(text + "\n"))
    }

    pub fn metadata(&self, command: &str, cfg: &ExperimentConfig) -> CliResult<PathBuf> {
        self.json("metadata.json", &Metadata::new(command, cfg))
    }
}

/// Run provenance; contains nothing that varies between identical runs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metadata {
    pub command: String,
    pub code_version: String,
    pub config_hash: String,
    pub seed: u64,
}

impl Metadata {
    pub fn new(command: &str, cfg: &ExperimentConfig) -> Self {
        Self { command: command.into(), code_version: CODE_VERSION.into(), config_hash: cfg.hash(), seed: cfg.seed }
    }
}
