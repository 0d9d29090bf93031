//! Tabular results and their CSV / JSON encodings.

use std::io::Write;

use serde_json::{json, Map, Value};

use crate::config::{render, Format, RunConfig};
use crate::CliError;

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(Option<f64>),
    Flag(Option<bool>),
    Int(u64),
    Text(Option<String>),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x.is_finite().then_some(x))
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        Cell::Num(x.filter(|v| v.is_finite()))
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Flag(Some(b))
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// Scientific notation with `precision` digits after the point.
pub fn format_number(x: f64, precision: usize) -> String {
    // avoid a signed zero in the output
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.precision$e}")
}

fn csv_field(cell: &Cell, precision: usize) -> String {
    match cell {
        Cell::Num(x) => x.map(|v| format_number(v, precision)).unwrap_or_default(),
        Cell::Flag(b) => b.map(|v| u8::from(v).to_string()).unwrap_or_default(),
        Cell::Int(n) => n.to_string(),
        Cell::Text(s) => s.clone().unwrap_or_default(),
    }
}

fn json_value(cell: &Cell, precision: usize) -> Value {
    match cell {
        // the rounded value, so JSON and CSV carry the same numbers
        Cell::Num(x) => x
            .and_then(|v| format_number(v, precision).parse::<f64>().ok())
            .map_or(Value::Null, |v| json!(v)),
        Cell::Flag(b) => b.map_or(Value::Null, Value::Bool),
        Cell::Int(n) => json!(n),
        Cell::Text(s) => s.clone().map_or(Value::Null, Value::String),
    }
}

/// CSV: the resolved config as `#` comment lines, then a header row and the data.
pub fn write_csv(out: &mut impl Write, config: &RunConfig, table: &Table) -> Result<(), CliError> {
    for line in render(config).lines() {
        if line.is_empty() {
            writeln!(out, "#")?;
        } else {
            writeln!(out, "# {line}")?;
        }
    }
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(&table.columns)?;
    for row in &table.rows {
        w.write_record(row.iter().map(|c| csv_field(c, config.precision)))?;
    }
    w.flush()?;
    Ok(())
}

/// JSON: `{"config": …, "columns": […], "rows": [{column: value}]}` with explicit nulls.
pub fn write_json(out: &mut impl Write, config: &RunConfig, table: &Table) -> Result<(), CliError> {
    let rows: Vec<Value> = table
        .rows
        .iter()
        .map(|row| {
            let obj: Map<String, Value> = table
                .columns
                .iter()
                .zip(row)
                .map(|(k, c)| (k.clone(), json_value(c, config.precision)))
                .collect();
            Value::Object(obj)
        })
        .collect();
    let doc = json!({
        "config": config,
        "columns": table.columns,
        "rows": rows,
    });
    serde_json::to_writer_pretty(&mut *out, &doc).map_err(|e| CliError::Io(e.to_string()))?;
    writeln!(out)?;
    Ok(())
}

pub fn write(out: &mut impl Write, config: &RunConfig, table: &Table) -> Result<(), CliError> {
    match config.output.format {
        Format::Csv => write_csv(out, config, table),
        Format::Json => write_json(out, config, table),
    }
}
