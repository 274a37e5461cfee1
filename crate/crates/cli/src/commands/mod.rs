//! Subcommand implementations. Every command takes a scenario config and an
//! output directory, echoes the resolved config, and writes deterministic
//! artifacts so a rerun with the same config and seed is byte-identical.

pub mod allocate;
pub mod decide;
pub mod experiment;
pub mod fit_survival;
pub mod report;
pub mod simulate;

use std::path::Path;

use anyhow::Result;

use crate::config::ScenarioConfig;
use crate::data::write_output;

pub(crate) fn echo_resolved_config(config: &ScenarioConfig, out: &Path) -> Result<()> {
    write_output(out, "resolved-config.toml", &config.to_resolved_toml()?)?;
    Ok(())
}
