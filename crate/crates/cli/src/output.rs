use std::fs;
use std::path::{Path, PathBuf};

use composite_resolvent::descriptor::format_real;

use crate::error::{CliError, CliResult};

/// Writes through a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> CliResult<()> {
    let io = |e: std::io::Error| CliError::Config(format!("cannot write {}: {e}", path.display()));
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io)?;
    }
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp{}", std::process::id()));
    fs::write(&tmp, contents).map_err(io)?;
    fs::rename(&tmp, path).map_err(io)
}

pub fn out_path(out: &Path, configured: Option<&PathBuf>, default: &str) -> PathBuf {
    match configured {
        Some(p) if p.is_absolute() => p.clone(),
        Some(p) => out.join(p),
        None => out.join(default),
    }
}

/// CSV text from a header and rows of already formatted fields.
pub fn csv_text(header: &[String], rows: &[Vec<String>]) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| CliError::Config(format!("csv encoding failed: {e}"));
    w.write_record(header).map_err(fail)?;
    for row in rows {
        w.write_record(row).map_err(fail)?;
    }
    w.into_inner().map_err(|e| CliError::Config(format!("csv encoding failed: {e}")))
}

pub fn real(v: f64) -> String {
    format_real(v)
}

pub fn x_header(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("x{i}")).collect()
}

/// `k,step_norm` rows, `k` counting from 1.
pub fn history_csv(steps: &[f64]) -> CliResult<Vec<u8>> {
    let rows: Vec<Vec<String>> = steps
        .iter()
        .enumerate()
        .map(|(k, s)| vec![(k + 1).to_string(), real(*s)])
        .collect();
    csv_text(&["k".to_string(), "step_norm".to_string()], &rows)
}
