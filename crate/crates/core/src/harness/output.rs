use std::io::Write;
use std::path::Path;

use tempfile::NamedTempFile;

use crate::error::{Error, Result};

/// Tabular result that can be written as CSV.
pub trait CsvRecords {
    fn header(&self) -> Vec<String>;
    fn rows(&self) -> Vec<Vec<String>>;
}

/// Seventeen significant digits in scientific notation; parses back to the same bits.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes `bytes` to a temporary file next to `path` and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// Renders `records` with each `echo` line prepended as a `# ` comment.
pub fn render_csv(records: &impl CsvRecords, echo: &[String]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    for line in echo {
        buf.extend_from_slice(format!("# {line}\n").as_bytes());
    }
    let mut w = csv::Writer::from_writer(buf);
    let csv_err = |e: csv::Error| Error::Numerical(format!("csv encoding failed: {e}"));
    w.write_record(records.header()).map_err(csv_err)?;
    for row in records.rows() {
        w.write_record(row).map_err(csv_err)?;
    }
    w.into_inner()
        .map_err(|e| Error::Numerical(format!("csv encoding failed: {e}")))
}

pub fn emit_csv(records: &impl CsvRecords, echo: &[String], path: &Path) -> Result<()> {
    write_atomic(path, &render_csv(records, echo)?)
}
