use std::path::Path;

use crate::config::TrialRecord;
use crate::error::Result;

pub fn records_to_csv(records: &[TrialRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if records.is_empty() {
        w.write_record(header())?;
    }
    for rec in records {
        w.serialize(rec)?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn header() -> Vec<&'static str> {
    vec![
        "n",
        "r",
        "m",
        "eta",
        "seed",
        "trial",
        "rel_error",
        "success",
        "iterations",
        "wall_ms",
        "status",
        "objective",
        "truth_objective",
        "feasibility_gap",
        "b_norm",
        "error_ratio",
        "fidelity",
        "psd_trace_ok",
    ]
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    std::fs::write(path, text)?;
    Ok(())
}
