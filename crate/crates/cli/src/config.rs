use std::fs;
use std::path::Path;

use serde::Deserialize;

use spatter::eval::EvalConfig;
use spatter::features::FeatureConfig;
use spatter::pipeline::PipelineConfig;

use crate::error::CliError;
use crate::manifest;

/// Top-level run configuration, loaded from the `--config` JSON file.
///
/// Every section and every field is optional; missing pieces take the
/// built-in defaults. Command-line flags override whatever the file says.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub pipeline: PipelineConfig,
    pub features: FeatureConfig,
    pub eval: EvalConfig,
}

/// Loads the config file if given, along with a digest of its bytes for the
/// manifest. Without a file the defaults apply and the digest says so.
pub fn load(path: Option<&Path>) -> Result<(RunConfig, String), CliError> {
    let Some(path) = path else {
        return Ok((RunConfig::default(), "default".into()));
    };
    let bytes = fs::read(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let cfg: RunConfig = serde_json::from_slice(&bytes)
        .map_err(|e| CliError::Usage(format!("bad config {}: {e}", path.display())))?;
    cfg.pipeline.validate().map_err(CliError::from)?;
    Ok((cfg, manifest::sha256_hex(&bytes)))
}
