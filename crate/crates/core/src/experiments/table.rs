use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::config::SCHEMA_VERSION;
use crate::error::{Error, Result};
use crate::netparams::NetworkParams;
use crate::simkernel::McSettings;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub unit: String,
    pub description: String,
}

impl Column {
    pub fn new(name: impl Into<String>, unit: &str, description: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            unit: unit.to_string(),
            description: description.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(u64),
    Text(String),
    Empty,
}

impl Cell {
    fn csv_field(&self) -> String {
        match self {
            Cell::Float(x) => x.to_string(),
            Cell::Int(n) => n.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Float(x) => serde_json::Number::from_f64(*x).map_or(Value::Null, Value::Number),
            Cell::Int(n) => json!(n),
            Cell::Text(s) => json!(s),
            Cell::Empty => Value::Null,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Float(x) => Some(*x),
            Cell::Int(n) => Some(*n as f64),
            _ => None,
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<u64> for Cell {
    fn from(n: u64) -> Self {
        Cell::Int(n)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

/// Where a table came from: enough to regenerate it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub schema_version: u32,
    pub generator: String,
    pub params: NetworkParams,
    pub mc: Option<McSettings>,
    /// SHA-256 of the parameters and sweep definition.
    pub config_hash: String,
    /// Figure-level results such as maxima or the swap-limited distance.
    pub notes: BTreeMap<String, String>,
}

impl Provenance {
    pub fn new(params: &NetworkParams, mc: Option<McSettings>, config_hash: String) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            generator: format!("qmux {}", env!("CARGO_PKG_VERSION")),
            params: *params,
            mc,
            config_hash,
            notes: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Cell>>,
    pub provenance: Provenance,
}

impl Table {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    /// Numeric values of column `name`, `None` where a cell is empty.
    pub fn floats(&self, name: &str) -> Option<Vec<Option<f64>>> {
        let i = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[i].as_f64()).collect())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(self.columns.iter().map(|c| c.name.as_str()))?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::csv_field))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Sidecar describing each CSV column.
    pub fn schema_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["column", "unit", "description"])?;
        for c in &self.columns {
            w.write_record([&c.name, &c.unit, &c.description])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn to_json(&self) -> String {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                let obj: Map<String, Value> = self.columns.iter().zip(r).map(|(c, v)| (c.name.clone(), v.json())).collect();
                Value::Object(obj)
            })
            .collect();
        let doc = json!({
            "name": self.name,
            "provenance": self.provenance,
            "columns": self.columns,
            "rows": rows,
        });
        serde_json::to_string_pretty(&doc).expect("tables serialise")
    }

    /// Writes `path` as CSV plus a `.schema.csv` sidecar, and a `.json`
    /// variant when asked. Returns the paths written.
    pub fn write(&self, path: &Path, with_json: bool) -> Result<Vec<PathBuf>> {
        let io = |p: &Path, e: std::io::Error| Error::Io(format!("{}: {e}", p.display()));
        let schema = path.with_extension("schema.csv");
        std::fs::write(path, self.to_csv()?).map_err(|e| io(path, e))?;
        std::fs::write(&schema, self.schema_csv()?).map_err(|e| io(&schema, e))?;
        let mut written = vec![path.to_path_buf(), schema];
        if with_json {
            let j = path.with_extension("json");
            std::fs::write(&j, self.to_json()).map_err(|e| io(&j, e))?;
            written.push(j);
        }
        Ok(written)
    }
}
