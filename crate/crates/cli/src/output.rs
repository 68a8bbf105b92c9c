use anyhow::{Context, Result};
use serde_json::{json, Map, Value};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const SCHEMA_VERSION: u32 = 1;
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Seed and replicate count of a stochastic run.
#[derive(Clone, Copy, Debug)]
pub struct Provenance {
    pub seed: u64,
    pub reps: Option<usize>,
}

impl Provenance {
    fn comment(&self) -> String {
        match self.reps {
            Some(reps) => format!("# laad {VERSION} seed={} reps={reps}", self.seed),
            None => format!("# laad {VERSION} seed={}", self.seed),
        }
    }
}

/// A named rectangular result. Cells are JSON values so the same table can
/// be written as CSV or embedded in a JSON report.
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Table {
            name: name.to_string(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn to_json(&self) -> Value {
        let rows = self
            .rows
            .iter()
            .map(|row| {
                let obj: Map<String, Value> = self.header.iter().cloned().zip(row.iter().cloned()).collect();
                Value::Object(obj)
            })
            .collect();
        Value::Array(rows)
    }
}

fn cell_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

/// Everything one command produces.
pub struct Report {
    pub command: &'static str,
    pub provenance: Option<Provenance>,
    pub fields: Map<String, Value>,
    pub tables: Vec<Table>,
}

impl Report {
    pub fn new(command: &'static str) -> Self {
        Report {
            command,
            provenance: None,
            fields: Map::new(),
            tables: Vec::new(),
        }
    }

    pub fn field(&mut self, key: &str, value: impl Into<Value>) {
        self.fields.insert(key.to_string(), value.into());
    }

    /// Writes the report under `dir` and returns the paths written.
    pub fn write(&self, dir: &Path, format: Format) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        match format {
            Format::Csv => self.tables.iter().map(|t| self.write_csv(dir, t)).collect(),
            Format::Json => Ok(vec![self.write_json(dir)?]),
        }
    }

    fn write_csv(&self, dir: &Path, table: &Table) -> Result<PathBuf> {
        let path = dir.join(format!("{}.csv", table.name));
        let mut file = fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        if let Some(p) = &self.provenance {
            writeln!(file, "{}", p.comment())?;
        }
        let mut w = csv::Writer::from_writer(file);
        w.write_record(&table.header)?;
        for row in &table.rows {
            w.write_record(row.iter().map(cell_text))?;
        }
        w.flush()?;
        Ok(path)
    }

    fn write_json(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(format!("{}.json", self.command));
        let mut doc = Map::new();
        doc.insert("schema_version".into(), json!(SCHEMA_VERSION));
        doc.insert("version".into(), json!(VERSION));
        doc.insert("command".into(), json!(self.command));
        if let Some(p) = &self.provenance {
            doc.insert("seed".into(), json!(p.seed));
            if let Some(reps) = p.reps {
                doc.insert("reps".into(), json!(reps));
            }
        }
        doc.extend(self.fields.clone());
        let tables: Map<String, Value> = self.tables.iter().map(|t| (t.name.clone(), t.to_json())).collect();
        doc.insert("tables".into(), Value::Object(tables));
        let text = serde_json::to_string_pretty(&Value::Object(doc))?;
        fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}

/// Finite floats as numbers, anything else as null.
pub fn num(v: f64) -> Value {
    serde_json::Number::from_f64(v).map_or(Value::Null, Value::Number)
}
