//! Report persistence: one JSON document plus the plain-text summary
//! table.

use std::path::{Path, PathBuf};

use super::BenchmarkReport;

/// Write `report.json` and `summary.txt` under `dir`, creating it if
/// needed. Returns the JSON path.
pub fn write_report(dir: &Path, report: &BenchmarkReport) -> std::io::Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let json_path = dir.join("report.json");
    std::fs::write(&json_path, report.to_json_bytes())?;
    std::fs::write(dir.join("summary.txt"), report.summary_table())?;
    Ok(json_path)
}
