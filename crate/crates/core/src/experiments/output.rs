//! Tabular records and their CSV/JSON emission.
//!
//! Floats are written in scientific notation with nine significant digits.
//! JSON is built from the same rounded values, so parsing a CSV file back and
//! re-emitting it as JSON reproduces the direct JSON output exactly.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Bool(bool),
    Text(String),
}

impl Cell {
    pub fn to_csv_field(&self) -> String {
        match self {
            Cell::Float(x) if x.is_finite() => format!("{x:.8e}"),
            Cell::Float(x) if x.is_nan() => "NaN".to_string(),
            Cell::Float(x) if *x > 0.0 => "inf".to_string(),
            Cell::Float(_) => "-inf".to_string(),
            Cell::Int(i) => i.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    /// Inverse of [`Cell::to_csv_field`]. Floats always carry an exponent,
    /// which separates them from integers.
    pub fn parse_csv_field(field: &str) -> Cell {
        match field {
            "true" => return Cell::Bool(true),
            "false" => return Cell::Bool(false),
            "NaN" => return Cell::Float(f64::NAN),
            "inf" => return Cell::Float(f64::INFINITY),
            "-inf" => return Cell::Float(f64::NEG_INFINITY),
            _ => {}
        }
        if let Ok(i) = field.parse::<i64>() {
            return Cell::Int(i);
        }
        if field.contains('e') {
            if let Ok(x) = field.parse::<f64>() {
                return Cell::Float(x);
            }
        }
        Cell::Text(field.to_string())
    }

    /// JSON value of the CSV representation. Non-finite floats become null.
    pub fn to_json(&self) -> Value {
        match self {
            Cell::Float(x) => {
                let rounded: f64 = self.to_csv_field().parse().unwrap_or(*x);
                serde_json::Number::from_f64(rounded).map_or(Value::Null, Value::Number)
            }
            Cell::Int(i) => Value::from(*i),
            Cell::Bool(b) => Value::Bool(*b),
            Cell::Text(s) => Value::String(s.clone()),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Bool(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

/// One output file's worth of records with a fixed column order.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Table {
        Table {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(
            row.len(),
            self.columns.len(),
            "row width mismatch in table {}",
            self.name
        );
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Appends `seed` and `config_hash` columns to every row.
    pub fn with_provenance(mut self, seed: u64, config_hash: &str) -> Table {
        self.columns.push("seed".to_string());
        self.columns.push("config_hash".to_string());
        for row in &mut self.rows {
            row.push(Cell::Int(seed as i64));
            row.push(Cell::Text(config_hash.to_string()));
        }
        self
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let ser = |e: csv::Error| Error::Serialization(e.to_string());
        w.write_record(&self.columns).map_err(ser)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::to_csv_field)).map_err(ser)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Serialization(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn from_csv(name: &str, text: &str) -> Result<Table> {
        let mut r = csv::ReaderBuilder::new().from_reader(text.as_bytes());
        let ser = |e: csv::Error| Error::Serialization(e.to_string());
        let columns = r.headers().map_err(ser)?.iter().map(str::to_string).collect();
        let rows = r
            .records()
            .map(|rec| {
                rec.map(|rec| rec.iter().map(Cell::parse_csv_field).collect())
                    .map_err(ser)
            })
            .collect::<Result<_>>()?;
        Ok(Table {
            name: name.to_string(),
            columns,
            rows,
        })
    }

    /// Array of objects, keys in column order.
    pub fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let obj: Map<String, Value> = self
                        .columns
                        .iter()
                        .cloned()
                        .zip(row.iter().map(Cell::to_json))
                        .collect();
                    Value::Object(obj)
                })
                .collect(),
        )
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json()).expect("JSON values serialize");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub config_hash: String,
    pub format: OutputFormat,
    pub files: Vec<String>,
    pub config: Value,
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes one file per table plus `manifest.json` and returns the paths in
/// that order.
pub fn emit_outputs(
    tables: &[Table],
    format: OutputFormat,
    out_dir: &Path,
    command: &str,
    seed: u64,
    config_hash: &str,
    config: Value,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|source| Error::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let mut written = Vec::new();
    for table in tables {
        let path = out_dir.join(format!("{}.{}", table.name, format.extension()));
        let body = match format {
            OutputFormat::Csv => table.to_csv()?,
            OutputFormat::Json => table.to_json_string(),
        };
        write_file(&path, &body)?;
        written.push(path);
    }
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        command: command.to_string(),
        seed,
        config_hash: config_hash.to_string(),
        format,
        files: written
            .iter()
            .map(|p| {
                p.file_name()
                    .map(|f| f.to_string_lossy().into_owned())
                    .unwrap_or_default()
            })
            .collect(),
        config,
    };
    let path = out_dir.join("manifest.json");
    let mut body = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Serialization(e.to_string()))?;
    body.push('\n');
    write_file(&path, &body)?;
    written.push(path);
    Ok(written)
}
