//! The `hv` subcommand: re-derive the metrics CSVs from a run log. The
//! hypervolume series is recomputed from the logged front objectives
//! through the same code path the engine used, so the values match the
//! in-run ones exactly.

use crate::CliError;
use eenas_core::evolution::engine::GenerationRecord;
use eenas_core::evolution::ObjectiveVector;
use eenas_core::metrics::{
    hypervolume3, nadir_from_records, normalized_hv_series, write_scatter_csv,
};
use std::io::{BufRead, Write};
use std::path::Path;

pub fn read_log(path: &Path) -> Result<Vec<GenerationRecord>, CliError> {
    let file = std::fs::File::open(path)
        .map_err(|e| CliError::Io(format!("cannot open {}: {e}", path.display())))?;
    let mut records = Vec::new();
    for (line_no, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| CliError::Io(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: GenerationRecord = serde_json::from_str(&line).map_err(|e| {
            CliError::Config(format!("{}: line {}: {e}", path.display(), line_no + 1))
        })?;
        records.push(record);
    }
    if records.is_empty() {
        return Err(CliError::Config(format!("{}: run log is empty", path.display())));
    }
    Ok(records)
}

pub fn run(log_path: &Path, out_dir: Option<&Path>) -> Result<(), CliError> {
    let records = read_log(log_path)?;
    let out_dir = out_dir
        .map(Path::to_path_buf)
        .unwrap_or_else(|| log_path.parent().unwrap_or(Path::new(".")).to_path_buf());
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", out_dir.display())))?;

    let nadir = nadir_from_records(&records).map_err(|e| CliError::Config(e.to_string()))?;
    let normalized = normalized_hv_series(&records, &nadir);

    let mut generations_csv = Vec::new();
    writeln!(generations_csv, "generation,hv,normalized_hv,best_error,evals")
        .map_err(|e| CliError::Io(e.to_string()))?;
    for (record,nhv) in records.iter().zip(normalized.iter()) {
        let front: Vec<ObjectiveVector> = record
            .front0_objectives
            .iter()
            .map(|o| ObjectiveVector { error: o[0], flops: o[1], params: o[2] })
            .collect();
        let raw = hypervolume3(&front, &nadir);
        writeln!(
            generations_csv,
            "{},{},{},{},{}",
            record.generation, raw, nhv, record.best_error, record.evals_used
        )
        .map_err(|e| CliError::Io(e.to_string()))?;
    }
    std::fs::write(out_dir.join("generations.csv"), &generations_csv)
        .map_err(|e| CliError::Io(e.to_string()))?;

    let mut scatter_csv = Vec::new();
    write_scatter_csv(&records, &mut scatter_csv).map_err(|e| CliError::Io(e.to_string()))?;
    std::fs::write(out_dir.join("scatter.csv"), &scatter_csv)
        .map_err(|e| CliError::Io(e.to_string()))?;

    println!("{}", out_dir.display());
    Ok(())
}
