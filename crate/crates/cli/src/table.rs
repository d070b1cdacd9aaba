//! Result tables and their CSV / JSON forms.

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

pub const SCHEMA: &str = "isactrack.result/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    /// "1" for dimensionless, "-" for labels
    pub unit: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Num(f64),
    Text(String),
    /// value not produced for this row (infeasible point or skipped Monte Carlo)
    Missing,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        if v.is_finite() {
            Cell::Num(v)
        } else if v.is_nan() {
            Cell::Missing
        } else {
            Cell::Text(if v > 0.0 { "inf" } else { "-inf" }.into())
        }
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Missing, Cell::from)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Int(i) => Some(*i as f64),
            Cell::Num(x) => Some(*x),
            Cell::Text(t) if t == "inf" => Some(f64::INFINITY),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Cell::Text(t) => Some(t),
            _ => None,
        }
    }

    fn csv(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Num(x) => format_num(*x),
            Cell::Text(t) => t.clone(),
            Cell::Missing => String::new(),
        }
    }
}

/// Shortest round-trip form; exponent notation outside [1e-4, 1e9).
pub fn format_num(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-4..1e9).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub schema: String,
    pub experiment: String,
    pub metadata: BTreeMap<String, String>,
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Cell>>,
}

impl ResultTable {
    pub fn new(experiment: &str, columns: &[(&str, &str)]) -> Self {
        Self {
            schema: SCHEMA.into(),
            experiment: experiment.into(),
            metadata: BTreeMap::new(),
            columns: columns.iter().map(|(n, u)| Column { name: (*n).into(), unit: (*u).into() }).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width in {}", self.experiment);
        self.rows.push(row);
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) {
        self.metadata.insert(key.into(), value.to_string());
    }

    pub fn meta_num(&mut self, key: &str, value: f64) {
        self.meta(key, format_num(value));
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    /// Values of a numeric column (Missing becomes NaN).
    pub fn numbers(&self, name: &str) -> Vec<f64> {
        let j = self.column(name).unwrap_or_else(|| panic!("no column {name} in {}", self.experiment));
        self.rows.iter().map(|r| r[j].as_f64().unwrap_or(f64::NAN)).collect()
    }

    pub fn texts(&self, name: &str) -> Vec<String> {
        let j = self.column(name).unwrap_or_else(|| panic!("no column {name} in {}", self.experiment));
        self.rows.iter().map(|r| r[j].as_str().map(str::to_string).unwrap_or_else(|| r[j].csv())).collect()
    }

    pub fn meta_f64(&self, key: &str) -> Option<f64> {
        self.metadata.get(key)?.parse().ok()
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        writeln!(out, "# schema = {}", self.schema)?;
        writeln!(out, "# experiment = {}", self.experiment)?;
        for (k, v) in &self.metadata {
            writeln!(out, "# {k} = {v}")?;
        }
        {
            let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(&mut out);
            w.write_record(self.columns.iter().map(|c| format!("{}({})", c.name, c.unit)))?;
            for row in &self.rows {
                w.write_record(row.iter().map(Cell::csv))?;
            }
            w.flush()?;
        }
        Ok(out)
    }

    pub fn to_json(&self) -> Result<Vec<u8>> {
        let mut v = serde_json::to_vec_pretty(self)?;
        v.push(b'\n');
        Ok(v)
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let t: Self = serde_json::from_slice(bytes).context("parsing result JSON")?;
        if t.schema != SCHEMA {
            bail!("unsupported schema {}", t.schema);
        }
        Ok(t)
    }

    pub fn render(&self, format: Format) -> Result<Vec<u8>> {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }

    pub fn emit(&self, format: Format, path: Option<&Path>) -> Result<()> {
        let bytes = self.render(format)?;
        match path {
            Some(p) => std::fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
            None => {
                std::io::stdout().write_all(&bytes)?;
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}
