//! Settings resolution: command-line flags override the optional TOML
//! config file, which overrides the `LATKERN_PRECISION_BITS` environment
//! variable, which overrides the built-in default.

use std::path::{Path, PathBuf};

use serde::Deserialize;

/// Default mantissa width for P-criterion work when nothing else is
/// configured. The P pipeline subtracts two nearly equal quantities, so
/// the default is deliberately generous; S-criterion work ignores it.
pub const DEFAULT_PRECISION_BITS: u32 = 256;

/// Environment variable consulted when neither a flag nor a config file
/// sets the precision.
pub const PRECISION_ENV_VAR: &str = "LATKERN_PRECISION_BITS";

/// Optional config file contents. Every field may be omitted.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub precision_bits: Option<u32>,
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub timings: Option<bool>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<FileConfig, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| format!("malformed config {}: {e}", path.display()))
    }
}

/// The environment variable's precision, if set and parseable.
pub fn env_precision() -> Option<u32> {
    std::env::var(PRECISION_ENV_VAR)
        .ok()
        .and_then(|s| s.parse().ok())
}

/// Precision resolution: flag, then file, then environment, then default.
pub fn resolve_precision(flag: Option<u32>, file: Option<u32>) -> u32 {
    flag.or(file)
        .or_else(env_precision)
        .unwrap_or(DEFAULT_PRECISION_BITS)
}
