//! Project configuration file. Flags override every key.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Deserialize;

pub const DEFAULT_STORE: &str = "mutants.db.jsonl";
pub const DEFAULT_TIMEOUT_SECONDS: u64 = 60;

/// Keys accepted in a `mutsample.toml`. Relative paths resolve against the
/// file's directory.
#[derive(Debug, Clone, Default, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub project_root: Option<PathBuf>,
    pub include: Option<Vec<String>>,
    pub exclude: Option<Vec<String>>,
    pub test_command: Option<String>,
    pub build_command: Option<String>,
    pub timeout_seconds: Option<u64>,
    pub store: Option<PathBuf>,
    pub operators: Option<Vec<String>>,
    pub jobs: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<FileConfig> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut config: FileConfig =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut config.project_root, &mut config.store].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(config)
    }

    pub fn load_optional(path: Option<&Path>) -> Result<FileConfig> {
        path.map_or_else(|| Ok(FileConfig::default()), FileConfig::load)
    }

    pub fn store_path(&self, flag: Option<PathBuf>) -> PathBuf {
        flag.or_else(|| self.store.clone())
            .unwrap_or_else(|| PathBuf::from(DEFAULT_STORE))
    }

    pub fn project_root(&self, flag: Option<PathBuf>) -> PathBuf {
        flag.or_else(|| self.project_root.clone())
            .unwrap_or_else(|| PathBuf::from("."))
    }
}
