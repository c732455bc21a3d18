//! Plain-text artifacts: comma-separated field tables (`x1,x2,value`) and
//! tab-separated summary tables.

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FieldTableError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("header must be x1,x2,{{name}}, found {0:?}")]
    Header(Vec<String>),
    #[error("row {row}: expected 3 columns, found {found}")]
    Columns { row: usize, found: usize },
    #[error("row {row}: bad number {text:?}")]
    BadNumber { row: usize, text: String },
}

#[derive(Debug, Error)]
#[error("cannot write {path}: {source}")]
pub struct WriteError {
    pub path: PathBuf,
    #[source]
    pub source: std::io::Error,
}

/// A node field with physical coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldTable {
    pub name: String,
    pub rows: Vec<[f64; 3]>,
}

impl FieldTable {
    pub fn new(name: &str, nodes: &[[f64; 2]], values: &[f64]) -> Self {
        assert_eq!(nodes.len(), values.len());
        Self { name: name.to_string(), rows: nodes.iter().zip(values).map(|(x, v)| [x[0], x[1], *v]).collect() }
    }

    /// Shortest round-trip decimal representation, so output is
    /// deterministic and parses back exactly.
    pub fn render(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["x1", "x2", self.name.as_str()]).expect("write to memory");
        for r in &self.rows {
            w.write_record(r.iter().map(|v| format!("{v:e}"))).expect("write to memory");
        }
        String::from_utf8(w.into_inner().expect("flush to memory")).expect("ascii output")
    }

    pub fn parse(text: &str) -> Result<Self, FieldTableError> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(text.as_bytes());
        let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        if header.len() != 3 || header[0] != "x1" || header[1] != "x2" || header[2].is_empty() {
            return Err(FieldTableError::Header(header));
        }
        let mut rows = Vec::new();
        for (n, rec) in r.records().enumerate() {
            let rec = rec?;
            if rec.len() != 3 {
                return Err(FieldTableError::Columns { row: n + 1, found: rec.len() });
            }
            let mut row = [0.0; 3];
            for (k, field) in rec.iter().enumerate() {
                row[k] = field
                    .trim()
                    .parse()
                    .map_err(|_| FieldTableError::BadNumber { row: n + 1, text: field.to_string() })?;
            }
            rows.push(row);
        }
        Ok(Self { name: header[2].clone(), rows })
    }
}

/// Writes `text` to `dir/name` and records the path.
pub fn write_artifact(dir: &Path, name: &str, text: &str, manifest: &mut Vec<PathBuf>) -> Result<(), WriteError> {
    let path = dir.join(name);
    fs::write(&path, text).map_err(|source| WriteError { path: path.clone(), source })?;
    manifest.push(path);
    Ok(())
}

/// Tab-separated table with a header row.
pub fn render_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut s = header.join("\t");
    s.push('\n');
    for r in rows {
        s.push_str(&r.join("\t"));
        s.push('\n');
    }
    s
}
