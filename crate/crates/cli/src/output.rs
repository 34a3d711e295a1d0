//! Deterministic CSV and JSON writers.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use serde_json::Value;

use crate::config::EMBED;
use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Debug)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
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

/// Shortest round-trip decimal with an exponent; independent of locale.
pub fn number(v: f64) -> String {
    if v.is_finite() {
        format!("{:e}", v + 0.0)
    } else {
        "nan".into()
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(v) => number(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(v) => serde_json::Number::from_f64(*v).map(Value::Number).unwrap_or(Value::Null),
            Cell::Int(v) => Value::from(*v),
            Cell::Text(s) => Value::from(s.clone()),
        }
    }
}

/// A result: the resolved configuration, scalar notes and a table of rows.
#[derive(Clone, Debug, Default)]
pub struct Report {
    pub command: String,
    pub config: Vec<(String, String)>,
    pub notes: Vec<(String, Cell)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    /// Structured payload merged into the JSON output.
    pub extra: Option<Value>,
}

impl Report {
    pub fn new(command: &str, config: Vec<(String, String)>, columns: &[&str]) -> Self {
        Report { command: command.into(), config, columns: columns.iter().map(|s| s.to_string()).collect(), ..Default::default() }
    }

    pub fn note(&mut self, key: &str, value: impl Into<Cell>) {
        self.notes.push((key.into(), value.into()));
    }

    pub fn row(&mut self, cells: Vec<Cell>) {
        debug_assert_eq!(cells.len(), self.columns.len());
        self.rows.push(cells);
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{EMBED}command = {}", self.command);
        for (k, v) in &self.config {
            let _ = writeln!(s, "{EMBED}{k} = {v}");
        }
        for (k, v) in &self.notes {
            let _ = writeln!(s, "# {k} = {}", v.csv());
        }
        let _ = writeln!(s, "{}", self.columns.join(","));
        for r in &self.rows {
            let line: Vec<String> = r.iter().map(Cell::csv).collect();
            let _ = writeln!(s, "{}", line.join(","));
        }
        s
    }

    pub fn to_json_value(&self) -> Value {
        let mut root = serde_json::Map::new();
        let mut cfg = serde_json::Map::new();
        cfg.insert("command".into(), Value::from(self.command.clone()));
        for (k, v) in &self.config {
            cfg.insert(k.clone(), Value::from(v.clone()));
        }
        root.insert("config".into(), Value::Object(cfg));
        for (k, v) in &self.notes {
            let repeated = self.notes.iter().filter(|(j, _)| j == k).count() > 1;
            match root.get_mut(k) {
                Some(Value::Array(items)) if repeated => items.push(v.json()),
                _ if repeated => {
                    root.insert(k.clone(), Value::Array(vec![v.json()]));
                }
                _ => {
                    root.insert(k.clone(), v.json());
                }
            }
        }
        if !self.columns.is_empty() {
            root.insert("columns".into(), Value::from(self.columns.clone()));
            let rows: Vec<Value> = self.rows.iter().map(|r| Value::Array(r.iter().map(Cell::json).collect())).collect();
            root.insert("rows".into(), Value::Array(rows));
        }
        if let Some(Value::Object(extra)) = &self.extra {
            for (k, v) in extra {
                root.insert(k.clone(), v.clone());
            }
        }
        Value::Object(root)
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => {
                let mut s = String::new();
                write_json(&mut s, &self.to_json_value(), 0);
                s.push('\n');
                s
            }
        }
    }
}

/// Pretty JSON with sorted keys and 17 significant digits for floats.
pub fn write_json(out: &mut String, v: &Value, indent: usize) {
    let pad = |n: usize| "  ".repeat(n);
    match v {
        Value::Null | Value::Bool(_) | Value::String(_) => out.push_str(&v.to_string()),
        Value::Number(n) => {
            if n.is_f64() {
                let _ = write!(out, "{:.16e}", n.as_f64().unwrap_or(f64::NAN) + 0.0);
            } else {
                out.push_str(&n.to_string());
            }
        }
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            let flat = items.iter().all(|x| !x.is_array() && !x.is_object());
            out.push('[');
            for (i, x) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                if flat {
                    if i > 0 {
                        out.push(' ');
                    }
                } else {
                    out.push('\n');
                    out.push_str(&pad(indent + 1));
                }
                write_json(out, x, indent + 1);
            }
            if !flat {
                out.push('\n');
                out.push_str(&pad(indent));
            }
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, k) in keys.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push('\n');
                out.push_str(&pad(indent + 1));
                out.push_str(&Value::from(k.as_str()).to_string());
                out.push_str(": ");
                write_json(out, &map[*k], indent + 1);
            }
            out.push('\n');
            out.push_str(&pad(indent));
            out.push('}');
        }
    }
}

pub fn emit(text: &str, path: Option<&Path>) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|source| CliError::Io { path: p.to_path_buf(), source }),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).and_then(|_| out.flush()).map_err(|source| CliError::Io { path: "<stdout>".into(), source })
        }
    }
}
