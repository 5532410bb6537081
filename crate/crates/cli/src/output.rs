//! Tabular output: one row type per table, written as CSV (header + shortest
//! round-trip number formatting, so re-runs are byte-identical and values
//! parse back exactly) or as a JSON array of objects.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use colorsig::{Error, Result};

use crate::Format;

/// Serialize rows to `<stem>.<ext>` under `dir` in the requested format.
/// `columns` fixes the CSV header and column order (the header is written
/// even when there are no rows).
pub fn write_table<T: Serialize>(
    dir: &Path,
    stem: &str,
    format: Format,
    columns: &[&str],
    rows: &[T],
) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(format!("{stem}.{}", format.extension()));
    let body = match format {
        Format::Csv => to_csv(columns, rows)?,
        Format::Json => {
            let mut s = serde_json::to_string_pretty(rows)?;
            s.push('\n');
            s
        }
    };
    std::fs::write(&path, body)?;
    Ok(path)
}

fn to_csv<T: Serialize>(columns: &[&str], rows: &[T]) -> Result<String> {
    let mut out = String::new();
    out.push_str(&columns.join(","));
    out.push('\n');
    for row in rows {
        let value = serde_json::to_value(row)?;
        let Value::Object(map) = value else {
            return Err(Error::InvalidConfig(
                "CSV rows must serialize to objects".into(),
            ));
        };
        debug_assert!(
            map.len() == columns.len() && map.keys().zip(columns).all(|(k, c)| k == c),
            "column list out of sync with the row struct"
        );
        let mut first = true;
        for col in columns {
            if !first {
                out.push(',');
            }
            first = false;
            out.push_str(&cell(map.get(*col).unwrap_or(&Value::Null)));
        }
        out.push('\n');
    }
    Ok(out)
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => {
            debug_assert!(
                !s.contains([',', '"', '\n']),
                "table strings are plain identifiers"
            );
            s.clone()
        }
        Value::Number(n) => n.to_string(),
        Value::Bool(b) => b.to_string(),
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Row {
        name: &'static str,
        value: f64,
        count: u32,
    }

    #[test]
    fn csv_has_header_and_exact_floats() {
        let rows = vec![
            Row { name: "a", value: 0.1 + 0.2, count: 3 },
            Row { name: "b", value: 1.0, count: 0 },
        ];
        let csv = to_csv(&["name", "value", "count"], &rows).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("name,value,count"));
        let first = lines.next().unwrap();
        let v: f64 = first.split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(v, 0.1 + 0.2, "shortest formatting round-trips exactly");
    }

    #[test]
    fn empty_table_still_has_header() {
        let csv = to_csv::<Row>(&["name", "value", "count"], &[]).unwrap();
        assert_eq!(csv, "name,value,count\n");
    }
}
