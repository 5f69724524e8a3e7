//! CSV series and plot-ready two-column files.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use super::IoError;

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn format_real(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

/// Streaming CSV writer with a fixed header.
pub struct SeriesWriter {
    inner: csv::Writer<BufWriter<File>>,
    width: usize,
    path: PathBuf,
}

impl SeriesWriter {
    pub fn create(path: &Path, header: &[String]) -> Result<Self, IoError> {
        let file = File::create(path).map_err(|e| IoError::io(path, e))?;
        let mut inner = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(BufWriter::new(file));
        inner.write_record(header).map_err(|e| csv_error(path, e))?;
        Ok(Self { inner, width: header.len(), path: path.to_path_buf() })
    }

    pub fn row(&mut self, values: &[f64]) -> Result<(), IoError> {
        assert_eq!(values.len(), self.width, "row width");
        self.inner.write_record(values.iter().map(|v| format_real(*v))).map_err(|e| csv_error(&self.path, e))
    }

    pub fn finish(mut self) -> Result<(), IoError> {
        self.inner.flush().map_err(|e| IoError::io(&self.path, e))
    }
}

fn csv_error(path: &Path, e: csv::Error) -> IoError {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => IoError::io(path, e),
        other => IoError::Misaligned(format!("{}: {other:?}", path.display())),
    }
}

pub fn header(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

pub fn write_series(path: &Path, header: &[String], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<(), IoError> {
    let mut w = SeriesWriter::create(path, header)?;
    for r in rows {
        w.row(&r)?;
    }
    w.finish()
}

/// Reads a CSV written by [`SeriesWriter`]. A missing file is a missing
/// input; a different header, ragged rows or unparsable numbers are
/// misaligned input.
pub fn read_series(path: &Path, expected: &[String]) -> Result<Vec<Vec<f64>>, IoError> {
    if !path.is_file() {
        return Err(IoError::MissingInput(path.display().to_string()));
    }
    let mut r = csv::ReaderBuilder::new().from_path(path).map_err(|e| csv_error(path, e))?;
    let got: Vec<String> = r.headers().map_err(|e| csv_error(path, e))?.iter().map(str::to_string).collect();
    if got != expected {
        return Err(IoError::Misaligned(format!("{}: header {got:?}, expected {expected:?}", path.display())));
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let row = rec
            .iter()
            .map(|s| s.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| IoError::Misaligned(format!("{}: row {}: {e}", path.display(), i + 1)))?;
        rows.push(row);
    }
    Ok(rows)
}

/// Whitespace-separated `x y` lines under a `# x y` comment.
pub fn write_two_column(path: &Path, names: [&str; 2], xs: &[f64], ys: &[f64]) -> Result<(), IoError> {
    let mut out = format!("# {} {}\n", names[0], names[1]);
    for (x, y) in xs.iter().zip(ys) {
        out.push_str(&format_real(*x));
        out.push(' ');
        out.push_str(&format_real(*y));
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| IoError::io(path, e))
}
