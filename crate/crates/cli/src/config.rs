//! Pipeline configuration loading.

use std::path::Path;

use anyhow::Context;
use symground_core::eval::PipelineConfig;

/// Loads a config file (JSON, all keys optional) or the defaults, then
/// applies the seed override.
pub fn load(path: Option<&Path>, seed: Option<u64>) -> anyhow::Result<PipelineConfig> {
    let mut config = match path {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            serde_json::from_str(&text)
                .with_context(|| format!("parsing config {}", path.display()))?
        }
        None => PipelineConfig::default(),
    };
    if let Some(seed) = seed {
        config.seed = seed;
    }
    Ok(config)
}
