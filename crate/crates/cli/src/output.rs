//! CSV / JSON emission. Every artifact embeds the fully resolved
//! scenario so any number in it can be reproduced by re-running with
//! the embedded config.

use std::io::Write;

use serde_json::{json, Map, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// One tabular result: fixed column set, row-major values.
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Self { columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// JSON value for a float; non-finite values (infeasible points)
/// become strings since JSON has no infinity literal.
pub fn num(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        json!(format!("{v}"))
    }
}

fn csv_cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

pub fn write_table(
    out: &mut dyn Write,
    format: Format,
    config_pairs: &[(&'static str, String)],
    table: &Table,
) -> std::io::Result<()> {
    match format {
        Format::Csv => {
            for (key, value) in config_pairs {
                writeln!(out, "# {key}={value}")?;
            }
            writeln!(out, "{}", table.columns.join(","))?;
            for row in &table.rows {
                let cells: Vec<String> = row.iter().map(csv_cell).collect();
                writeln!(out, "{}", cells.join(","))?;
            }
        }
        Format::Json => {
            let mut config = Map::new();
            for (key, value) in config_pairs {
                config.insert((*key).to_string(), json!(value));
            }
            let rows: Vec<Value> = table
                .rows
                .iter()
                .map(|row| {
                    let mut obj = Map::new();
                    for (col, cell) in table.columns.iter().zip(row) {
                        obj.insert((*col).to_string(), cell.clone());
                    }
                    Value::Object(obj)
                })
                .collect();
            let doc = json!({ "config": Value::Object(config), "results": rows });
            writeln!(out, "{}", serde_json::to_string_pretty(&doc)?)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_config_header_and_rows() {
        let mut table = Table::new(vec!["a", "b"]);
        table.push(vec![num(1.5), json!("x")]);
        table.push(vec![num(f64::INFINITY), Value::Null]);
        let mut buf = Vec::new();
        write_table(&mut buf, Format::Csv, &[("k", "v".into())], &table).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "# k=v\na,b\n1.5,x\ninf,\n");
    }

    #[test]
    fn json_is_wellformed() {
        let mut table = Table::new(vec!["a"]);
        table.push(vec![num(2.0)]);
        let mut buf = Vec::new();
        write_table(&mut buf, Format::Json, &[("k", "v".into())], &table).unwrap();
        let doc: Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(doc["config"]["k"], "v");
        assert_eq!(doc["results"][0]["a"], 2.0);
    }
}
