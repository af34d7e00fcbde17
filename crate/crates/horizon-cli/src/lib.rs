//! Batch experiment harness over the random-horizon market laboratory:
//! configuration, deterministic parallel ensembles, statistical reports,
//! and the proposition-by-proposition verdict table.

pub mod config;
pub mod experiments;
pub mod table;

use std::path::Path;

use horizon_core::report::McReport;
use horizon_core::Result;

/// Serialize reports as pretty JSON (byte-stable given identical inputs).
pub fn reports_to_json(reports: &[McReport]) -> Result<String> {
    Ok(serde_json::to_string_pretty(reports)?)
}

/// Write one JSON file per report plus a combined `reports.json`.
pub fn write_reports(reports: &[McReport], dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for r in reports {
        let fname = format!("{}.json", r.name.replace(':', "_").replace('/', "_"));
        std::fs::write(dir.join(fname), serde_json::to_string_pretty(r)?)?;
    }
    std::fs::write(dir.join("reports.json"), reports_to_json(reports)?)?;
    Ok(())
}

/// Load every report from a directory's `reports.json` or per-report files.
pub fn read_reports(dir: &Path) -> Result<Vec<McReport>> {
    let combined = dir.join("reports.json");
    if combined.exists() {
        let text = std::fs::read_to_string(combined)?;
        return Ok(serde_json::from_str(&text)?);
    }
    let mut out = Vec::new();
    let mut names: Vec<_> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    names.sort();
    for p in names {
        let text = std::fs::read_to_string(&p)?;
        out.push(serde_json::from_str(&text)?);
    }
    Ok(out)
}
