pub mod benchgen;
pub mod decode;
pub mod hv;
pub mod search;

use crate::config::RawConfig;
use crate::CliError;
use std::path::Path;

pub fn validate_config(path: &Path) -> Result<(), CliError> {
    let resolved = RawConfig::load(path)?.resolve()?;
    println!(
        "ok: {:?} search, {} generations x {} population, beta {}, seed {}",
        resolved.params.space,
        resolved.params.generations,
        resolved.params.population,
        resolved.params.beta,
        resolved.params.seed
    );
    Ok(())
}
