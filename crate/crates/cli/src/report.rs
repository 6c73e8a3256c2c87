//! Report envelope and deterministic, atomically written output files.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use fragility::numerics::{McSpec, QuadratureSpec};

use crate::error::CliError;

/// Bumped whenever report fields or CSV columns change meaning.
pub const SCHEMA_VERSION: u32 = 1;

/// A CSV grid; cells are already formatted.
#[derive(Debug, Clone)]
pub struct CsvTable {
    pub name: &'static str,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(name: &'static str, header: &[&'static str]) -> Self {
        Self { name, header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn render(&self) -> Result<Vec<u8>, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| CliError::Output(format!("{}: {e}", self.name));
        w.write_record(&self.header).map_err(err)?;
        for r in &self.rows {
            w.write_record(r).map_err(err)?;
        }
        w.into_inner().map_err(|e| CliError::Output(e.to_string()))
    }
}

/// Shortest round-trip decimal form, so grids are byte-identical across runs.
pub fn num(x: f64) -> String {
    format!("{x}")
}

#[derive(Debug, Serialize)]
pub struct FileEntry {
    pub name: &'static str,
    pub path: String,
    pub columns: Vec<&'static str>,
    pub rows: usize,
}

#[derive(Debug, Serialize)]
pub struct Envelope {
    pub schema_version: u32,
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config_sha256: String,
    pub seed_override: Option<u64>,
    pub quadrature: QuadratureSpec,
    pub monte_carlo: Option<McSpec>,
    pub inputs: Value,
    pub result: Value,
    pub files: Vec<FileEntry>,
}

/// `<dir>/<stem>.<table>.csv` next to the JSON report.
pub fn csv_path(out: &Path, table: &str) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("report");
    out.with_file_name(format!("{stem}.{table}.csv"))
}

/// Write via a temporary sibling and rename, so readers never see a
/// half-written file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let name = path.file_name().and_then(|s| s.to_str()).ok_or_else(|| CliError::Output(format!("bad path {}", path.display())))?;
    let tmp = path.with_file_name(format!(".{name}.tmp{}", std::process::id()));
    let fail = |e: std::io::Error| CliError::Output(format!("{}: {e}", path.display()));
    fs::write(&tmp, bytes).map_err(fail)?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        fail(e)
    })
}

/// Render everything first, then write: a failure leaves no partial set.
pub fn emit(mut envelope: Envelope, tables: &[CsvTable], out: Option<&Path>) -> Result<String, CliError> {
    let mut rendered = Vec::new();
    if let Some(out) = out {
        for t in tables {
            let path = csv_path(out, t.name);
            envelope.files.push(FileEntry {
                name: t.name,
                path: path.display().to_string(),
                columns: t.header.clone(),
                rows: t.rows.len(),
            });
            rendered.push((path, t.render()?));
        }
    }
    let mut json = serde_json::to_string_pretty(&envelope).map_err(|e| CliError::Output(e.to_string()))?;
    json.push('\n');
    if let Some(out) = out {
        for (path, bytes) in &rendered {
            write_atomic(path, bytes)?;
        }
        write_atomic(out, json.as_bytes())?;
    }
    Ok(json)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_names_follow_the_report() {
        assert_eq!(csv_path(Path::new("/tmp/run.json"), "v_sweep"), PathBuf::from("/tmp/run.v_sweep.csv"));
    }

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, -1.585201, 1e-300, 6.0] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn csv_has_header_row() {
        let mut t = CsvTable::new("g", &["K", "V"]);
        t.push(vec![num(-2.0), num(0.5)]);
        assert_eq!(String::from_utf8(t.render().unwrap()).unwrap(), "K,V\n-2,0.5\n");
    }
}
