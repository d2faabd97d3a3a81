//! Command implementations and the HTTP service for the `repoctx` binary.
//!
//! The binary in `main.rs` only parses arguments and maps errors to exit
//! codes; everything observable lives here so integration tests can drive
//! the same code paths the binary does.

pub mod commands;
pub mod server;

use repoctx_core::{ConfigOverrides, PipelineConfig};
use std::path::Path;

/// Exit codes: 0 ok, 1 usage error, 2 data error.
pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

/// Resolve the effective config: defaults, then the config file, then flag
/// overrides.
pub fn effective_config(
    config_file: Option<&Path>,
    flags: &ConfigOverrides,
) -> anyhow::Result<PipelineConfig> {
    let mut config = PipelineConfig::default();
    if let Some(path) = config_file {
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("cannot read config {}: {e}", path.display()))?;
        let file_overrides = ConfigOverrides::from_json(&path.display().to_string(), &text)?;
        config = config.merged(&file_overrides);
    }
    config = config.merged(flags);
    config.validate()?;
    Ok(config)
}
