//! Header-named CSV tables of numbers.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::config::fmt_f64;

#[derive(Debug, Error)]
pub enum TableError {
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{path}: line {line}: {msg}")]
    Csv { path: String, line: u64, msg: String },
    #[error("{path}: missing column `{column}` (header has: {found})")]
    MissingColumn { path: String, column: String, found: String },
    #[error("{path}: line {line}, column `{column}`: cannot parse `{value}` as a number")]
    Parse { path: String, line: u64, column: String, value: String },
    #[error("{path}: line {line}, column `{column}`: {msg}")]
    Invalid { path: String, line: u64, column: String, msg: String },
    #[error("{path}: no data rows")]
    Empty { path: String },
}

fn open(path: &str) -> Result<Box<dyn Read>, TableError> {
    if path == "-" {
        return Ok(Box::new(io::stdin()));
    }
    File::open(path).map(|f| Box::new(f) as Box<dyn Read>).map_err(|source| TableError::Io { path: path.to_string(), source })
}

/// Raw cells with the 1-based file line of every row.
#[derive(Debug, Clone)]
pub struct Table {
    pub path: String,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub lines: Vec<u64>,
}

impl Table {
    /// Reads a CSV with a header row; `-` reads standard input.
    pub fn read(path: &str) -> Result<Table, TableError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(open(path)?);
        let csv_err = |e: csv::Error| TableError::Csv {
            path: path.to_string(),
            line: e.position().map_or(0, |p| p.line()),
            msg: e.to_string(),
        };
        let headers = rdr.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        let mut lines = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(csv_err)?;
            lines.push(rec.position().map_or(0, |p| p.line()));
            rows.push(rec.iter().map(str::to_string).collect());
        }
        Ok(Table { path: path.to_string(), headers, rows, lines })
    }

    fn index(&self, name: &str) -> Result<usize, TableError> {
        self.headers.iter().position(|h| h == name).ok_or_else(|| TableError::MissingColumn {
            path: self.path.clone(),
            column: name.to_string(),
            found: self.headers.join(", "),
        })
    }

    pub fn has(&self, name: &str) -> bool {
        self.headers.iter().any(|h| h == name)
    }

    /// Numeric column; empty cells are errors.
    pub fn column(&self, name: &str) -> Result<Vec<f64>, TableError> {
        self.column_opt(name)?
            .into_iter()
            .enumerate()
            .map(|(r, v)| {
                v.ok_or_else(|| TableError::Parse {
                    path: self.path.clone(),
                    line: self.lines[r],
                    column: name.to_string(),
                    value: String::new(),
                })
            })
            .collect()
    }

    /// Numeric column with empty cells as `None`.
    pub fn column_opt(&self, name: &str) -> Result<Vec<Option<f64>>, TableError> {
        let j = self.index(name)?;
        self.rows
            .iter()
            .zip(&self.lines)
            .map(|(row, &line)| {
                let cell = row[j].as_str();
                if cell.is_empty() {
                    return Ok(None);
                }
                cell.parse().map(Some).map_err(|_| TableError::Parse {
                    path: self.path.clone(),
                    line,
                    column: name.to_string(),
                    value: cell.to_string(),
                })
            })
            .collect()
    }

    /// Numeric column that must be finite throughout and nonempty.
    pub fn finite(&self, name: &str) -> Result<Vec<f64>, TableError> {
        let col = self.column(name)?;
        if col.is_empty() {
            return Err(TableError::Empty { path: self.path.clone() });
        }
        if let Some(r) = col.iter().position(|v| !v.is_finite()) {
            return Err(self.invalid(r, name, "value is not finite"));
        }
        Ok(col)
    }

    pub fn invalid(&self, row: usize, column: &str, msg: &str) -> TableError {
        TableError::Invalid {
            path: self.path.clone(),
            line: self.lines.get(row).copied().unwrap_or(0),
            column: column.to_string(),
            msg: msg.to_string(),
        }
    }
}

/// One number per nonempty line, no header.
pub fn read_raw(path: &str) -> Result<Vec<f64>, TableError> {
    let rdr = BufReader::new(open(path)?);
    let mut out = Vec::new();
    for (i, line) in rdr.lines().enumerate() {
        let line = line.map_err(|source| TableError::Io { path: path.to_string(), source })?;
        let cell = line.trim();
        if cell.is_empty() || cell.starts_with('#') {
            continue;
        }
        let v: f64 = cell.parse().map_err(|_| TableError::Parse {
            path: path.to_string(),
            line: i as u64 + 1,
            column: "1".to_string(),
            value: cell.to_string(),
        })?;
        out.push(v);
    }
    if out.is_empty() {
        return Err(TableError::Empty { path: path.to_string() });
    }
    Ok(out)
}

/// Streaming CSV writer; `-` writes standard output.
pub struct TableWriter {
    path: String,
    inner: csv::Writer<Box<dyn Write>>,
}

impl TableWriter {
    pub fn create(path: &str, headers: &[&str]) -> Result<TableWriter, TableError> {
        let sink: Box<dyn Write> = if path == "-" {
            Box::new(BufWriter::new(io::stdout()))
        } else {
            let f = File::create(Path::new(path)).map_err(|source| TableError::Io { path: path.to_string(), source })?;
            Box::new(BufWriter::new(f))
        };
        let mut w = TableWriter { path: path.to_string(), inner: csv::Writer::from_writer(sink) };
        w.record(headers.iter().copied())?;
        Ok(w)
    }

    pub fn record<I, S>(&mut self, cells: I) -> Result<(), TableError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.inner.write_record(cells).map_err(|e| TableError::Csv { path: self.path.clone(), line: 0, msg: e.to_string() })
    }

    /// Writes a row of numbers in shortest round-trip form.
    pub fn row(&mut self, values: &[f64]) -> Result<(), TableError> {
        self.record(values.iter().map(|v| fmt_f64(*v)))
    }

    pub fn finish(mut self) -> Result<(), TableError> {
        self.inner.flush().map_err(|source| TableError::Io { path: self.path.clone(), source })
    }
}
