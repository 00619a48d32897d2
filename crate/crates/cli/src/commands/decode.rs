//! The `decode` subcommand: genotype text to a DOT graph plus a cost
//! report under the configured macro.

use crate::config::RawConfig;
use crate::CliError;
use eenas_core::cost_model::{architecture_cost, MacroConfig};
use eenas_core::search_space::{decode, Genotype};
use std::path::Path;

pub fn run(
    genotype_text: &str,
    config: Option<&Path>,
    dot_out: Option<&Path>,
    cost_out: Option<&Path>,
) -> Result<(), CliError> {
    let genotype = Genotype::parse(genotype_text)
        .map_err(|e| CliError::Config(format!("cannot parse genotype: {e}")))?;
    let violations = genotype.validate();
    if !violations.is_empty() {
        let listed: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        return Err(CliError::Config(format!("invalid genotype: {}", listed.join("; "))));
    }

    let macro_cfg = match config {
        Some(path) => RawConfig::load(path)?.resolve()?.params.macro_cfg,
        None => MacroConfig::for_space(genotype.space()),
    };

    let graph = decode(&genotype)
        .map_err(|e| CliError::Config(format!("cannot decode genotype: {e}")))?;
    let dot = graph.to_dot();

    let report = architecture_cost(&genotype, &macro_cfg)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let mut cost_json = serde_json::to_string_pretty(&report.to_json())
        .expect("cost report serializes");
    cost_json.push('\n');

    match dot_out {
        Some(path) => std::fs::write(path, &dot)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?,
        None => print!("{dot}"),
    }
    match cost_out {
        Some(path) => std::fs::write(path, &cost_json)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?,
        None => print!("{cost_json}"),
    }
    Ok(())
}
