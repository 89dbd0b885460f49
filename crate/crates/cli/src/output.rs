//! Report emission. Floats are rounded to 12 significant digits before printing so
//! that the output does not depend on the last bits of a computation, and keys are
//! sorted, which makes repeated runs byte-identical.

use serde::Serialize;
use serde_json::{Map, Value};
use std::io::Write;
use std::path::Path;

use crate::args::Format;
use crate::CliError;

pub const SCHEMA_VERSION: u64 = 1;

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

#[derive(Debug, Clone)]
pub struct Report {
    pub command: String,
    pub fields: Map<String, Value>,
    pub table: Option<Table>,
    /// Whether the table also appears as `rows` in JSON output.
    pub rows_in_json: bool,
}

impl Report {
    pub fn new(command: impl Into<String>) -> Self {
        Self {
            command: command.into(),
            fields: Map::new(),
            table: None,
            rows_in_json: true,
        }
    }

    pub fn set<T: Serialize>(&mut self, key: &str, value: T) -> &mut Self {
        let v = serde_json::to_value(value).expect("report values serialize");
        self.fields.insert(key.to_string(), v);
        self
    }

    /// Merges the fields of a serializable struct.
    pub fn extend<T: Serialize>(&mut self, value: T) -> &mut Self {
        match serde_json::to_value(value).expect("report values serialize") {
            Value::Object(map) => self.fields.extend(map),
            other => panic!("expected an object, got {other}"),
        }
        self
    }

    pub fn with_table(&mut self, table: Table) -> &mut Self {
        self.table = Some(table);
        self
    }

    /// Keeps the table out of the JSON document (CSV and text still show it).
    pub fn table_outside_json(&mut self) -> &mut Self {
        self.rows_in_json = false;
        self
    }

    fn document(&self) -> Value {
        let mut map = self.fields.clone();
        map.insert("schema_version".into(), Value::from(SCHEMA_VERSION));
        map.insert("command".into(), Value::from(self.command.clone()));
        if let Some(t) = self.table.as_ref().filter(|_| self.rows_in_json) {
            let rows = t
                .rows
                .iter()
                .map(|row| {
                    let obj: Map<String, Value> = t
                        .columns
                        .iter()
                        .zip(row)
                        .map(|(c, v)| (c.to_string(), v.clone()))
                        .collect();
                    Value::Object(obj)
                })
                .collect();
            map.entry("rows").or_insert(Value::Array(rows));
        }
        round_value(Value::Object(map))
    }

    pub fn render(&self, format: Format) -> Result<String, CliError> {
        match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&self.document())
                    .map_err(|e| CliError::Output(e.to_string()))?;
                s.push('\n');
                Ok(s)
            }
            Format::Text => {
                let Value::Object(map) = self.document() else {
                    unreachable!()
                };
                let mut s = String::new();
                for (k, v) in map {
                    if k == "rows" {
                        continue;
                    }
                    s.push_str(&format!("{k}: {}\n", text_value(&v)));
                }
                if let Some(t) = &self.table {
                    s.push_str(&t.columns.join("\t"));
                    s.push('\n');
                    for row in &t.rows {
                        let cells: Vec<String> = row.iter().map(|v| text_value(&round_value(v.clone()))).collect();
                        s.push_str(&cells.join("\t"));
                        s.push('\n');
                    }
                }
                Ok(s)
            }
            Format::Csv => self.csv(),
        }
    }

    fn csv(&self) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| CliError::Output(e.to_string());
        match &self.table {
            Some(t) => {
                w.write_record(&t.columns).map_err(err)?;
                for row in &t.rows {
                    let cells: Vec<String> = row.iter().map(|v| csv_cell(&round_value(v.clone()))).collect();
                    w.write_record(&cells).map_err(err)?;
                }
            }
            None => {
                w.write_record(["key", "value"]).map_err(err)?;
                let Value::Object(map) = self.document() else {
                    unreachable!()
                };
                for (k, v) in map {
                    w.write_record([k, csv_cell(&v)]).map_err(err)?;
                }
            }
        }
        let bytes = w.into_inner().map_err(|e| CliError::Output(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| CliError::Output(e.to_string()))
    }
}

fn text_value(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn csv_cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// `x` rounded to 12 significant digits.
pub fn round12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

pub fn round_value(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = round12(n.as_f64().unwrap_or(f64::NAN));
            serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
        }
        Value::Array(items) => Value::Array(items.into_iter().map(round_value).collect()),
        Value::Object(map) => Value::Object(map.into_iter().map(|(k, v)| (k, round_value(v))).collect()),
        other => other,
    }
}

pub fn emit(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Output(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::Output(e.to_string()))
        }
    }
}
