//! The `serve` configuration file.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use hangul_coach::dsp::MfccConfig;
use hangul_coach::scoring::LevelBands;
use hangul_coach::stt::SttConfig;
use serde::Deserialize;

/// TOML configuration for the service. Relative paths are resolved against
/// the directory holding the config file.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServeConfig {
    #[serde(default = "default_bind")]
    pub bind: SocketAddr,
    pub model: PathBuf,
    pub corpus: PathBuf,
    pub store: PathBuf,
    /// Directory of web UI files served at `/`.
    pub static_dir: Option<PathBuf>,
    /// Rank attempts only against attempts at the same sentence.
    #[serde(default)]
    pub rank_per_sentence: bool,
    #[serde(default)]
    pub stt: SttConfig,
    #[serde(default)]
    pub mfcc: MfccConfig,
    #[serde(default)]
    pub levels: LevelBands,
}

fn default_bind() -> SocketAddr {
    SocketAddr::from(([127, 0, 0, 1], 8080))
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid config {path}: {message}")]
    Parse { path: PathBuf, message: String },
}

impl ServeConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let mut config = Self::parse(&text).map_err(|message| ConfigError::Parse {
            path: path.to_path_buf(),
            message,
        })?;
        config.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        Ok(config)
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    /// Rebases every relative path onto `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        rebase(&mut self.model);
        rebase(&mut self.corpus);
        rebase(&mut self.store);
        if let Some(dir) = &mut self.static_dir {
            rebase(dir);
        }
        if let Some(table) = &mut self.stt.mock_table_path {
            rebase(table);
        }
    }
}
