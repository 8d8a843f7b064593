//! Report emission: every report is written twice, as CSV carrying full
//! float precision for downstream analysis and as Markdown rounded to four
//! decimals for reading. Undefined values render as `undef` in both.

use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::Result;

/// One report cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Text(String),
    Int(u64),
    Float(f64),
    /// An explicitly undefined value (zero denominator, empty family, ...).
    Undef,
}

impl Cell {
    pub fn opt_float(v: Option<f64>) -> Cell {
        match v {
            Some(v) => Cell::Float(v),
            None => Cell::Undef,
        }
    }

    fn csv_string(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => format!("{v}"),
            Cell::Undef => "undef".to_string(),
        }
    }

    fn markdown_string(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => format!("{v:.4}"),
            Cell::Undef => "undef".to_string(),
        }
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Cell {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Cell {
        Cell::Text(s)
    }
}

/// A rectangular report table.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Table {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

pub fn write_csv(path: &Path, table: &Table) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(&table.columns)?;
    for row in &table.rows {
        writer.write_record(row.iter().map(|c| c.csv_string()))?;
    }
    writer.flush()?;
    Ok(())
}

/// Provenance footer embedded in every Markdown report.
#[derive(Debug, Clone, Default)]
pub struct ReportProvenance {
    pub config_hash: Option<String>,
    pub input_hashes: Vec<(String, String)>,
}

pub fn write_markdown(
    path: &Path,
    title: &str,
    tables: &[(&str, &Table)],
    provenance: &ReportProvenance,
) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let mut out = String::new();
    writeln!(out, "# {title}\n").expect("write to string");
    for (heading, table) in tables {
        if !heading.is_empty() {
            writeln!(out, "## {heading}\n").expect("write to string");
        }
        writeln!(out, "| {} |", table.columns.join(" | ")).expect("write to string");
        writeln!(
            out,
            "|{}|",
            table.columns.iter().map(|_| " --- ").collect::<Vec<_>>().join("|")
        )
        .expect("write to string");
        for row in &table.rows {
            writeln!(
                out,
                "| {} |",
                row.iter().map(|c| c.markdown_string()).collect::<Vec<_>>().join(" | ")
            )
            .expect("write to string");
        }
        out.push('\n');
    }
    if provenance.config_hash.is_some() || !provenance.input_hashes.is_empty() {
        writeln!(out, "---\n").expect("write to string");
        if let Some(hash) = &provenance.config_hash {
            writeln!(out, "- config: `{hash}`").expect("write to string");
        }
        for (name, hash) in &provenance.input_hashes {
            writeln!(out, "- {name}: `{hash}`").expect("write to string");
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Hex SHA-256 of a file's bytes, for report provenance footers.
pub fn file_hash(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path)?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    Ok(hex::encode(hasher.finalize()))
}
