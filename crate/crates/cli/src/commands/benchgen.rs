//! The `benchgen` subcommand: enumerate the full NB201-style space
//! (15,625 genotypes), score each with the deterministic surrogate, and
//! write a benchmark table the tabular evaluator can load. The synthetic
//! test-error column adds a small seeded jitter to the validation error.

use crate::config::RawConfig;
use crate::CliError;
use eenas_core::cost_model::{architecture_cost, MacroConfig};
use eenas_core::evaluators::{hash01, BenchEntry, SurrogateEvaluator, TabularBenchmark};
use eenas_core::search_space::{enumerate_nb201, SpaceKind};
use std::io::Write;
use std::path::Path;

/// Half-width of the seeded validation-to-test jitter.
const TEST_JITTER: f64 = 0.01;

pub fn run(out: &Path, seed: u64, config: Option<&Path>) -> Result<(), CliError> {
    let macro_cfg = match config {
        Some(path) => RawConfig::load(path)?.resolve()?.params.macro_cfg,
        None => MacroConfig::for_space(SpaceKind::Nb201),
    };
    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| CliError::Io(format!("cannot create {}: {e}", parent.display())))?;
        }
    }
    let file = std::fs::File::create(out)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", out.display())))?;
    let mut writer = std::io::BufWriter::new(file);

    let mut surrogate = SurrogateEvaluator::new(macro_cfg);
    let mut lines = 0usize;
    for genotype in enumerate_nb201() {
        let report = architecture_cost(&genotype, &macro_cfg)
            .map_err(|e| CliError::Config(e.to_string()))?;
        let val_error = surrogate
            .error_for(&genotype)
            .map_err(|e| CliError::Config(e.to_string()))?;
        let jitter =
            (hash01(&format!("{seed}:{}", genotype.serialize())) - 0.5) * 2.0 * TEST_JITTER;
        let test_error = (val_error + jitter).clamp(0.0, 1.0);
        let entry = BenchEntry {
            val_error,
            test_error,
            params_m: report.params_m(),
            flops_m: report.flops_m(),
        };
        TabularBenchmark::write_line(&mut writer, &genotype, &entry)
            .map_err(|e| CliError::Io(e.to_string()))?;
        lines += 1;
    }
    writer.flush().map_err(|e| CliError::Io(e.to_string()))?;
    println!("{lines} entries -> {}", out.display());
    Ok(())
}
