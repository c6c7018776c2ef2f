//! Output files: a reproducibility header followed by the table, as CSV or
//! as JSON records.

use std::fs;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::{CliError, RunArgs};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// What produced a file: tool version, input hashes and the options echo.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub tool: String,
    pub case_sha256: String,
    pub scenario_sha256: String,
    pub options: String,
}

impl Meta {
    fn csv_header(&self) -> String {
        format!(
            "# tool={}\n# case_sha256={}\n# scenario_sha256={}\n# options={}\n",
            self.tool, self.case_sha256, self.scenario_sha256, self.options
        )
    }
}

/// CSV text to an array of objects; cells that parse as numbers become numbers.
pub fn csv_to_records(text: &[u8]) -> Result<Vec<Value>, csv::Error> {
    let mut rdr = csv::Reader::from_reader(text);
    let headers = rdr.headers()?.clone();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let mut obj = Map::new();
        for (h, cell) in headers.iter().zip(rec.iter()) {
            let v = if let Ok(n) = cell.parse::<i64>() {
                Value::from(n)
            } else {
                match cell.parse::<f64>() {
                    Ok(x) if x.is_finite() => Value::from(x),
                    _ => Value::String(cell.to_string()),
                }
            };
            obj.insert(h.to_string(), v);
        }
        rows.push(Value::Object(obj));
    }
    Ok(rows)
}

pub fn write_table(
    args: &RunArgs,
    stem: &str,
    meta: &Meta,
    body: impl FnOnce(&mut Vec<u8>) -> gmdgrid::Result<()>,
) -> Result<(), CliError> {
    write_table_as(args, stem, args.format, meta, body)
}

pub fn write_table_as(
    args: &RunArgs,
    stem: &str,
    format: Format,
    meta: &Meta,
    body: impl FnOnce(&mut Vec<u8>) -> gmdgrid::Result<()>,
) -> Result<(), CliError> {
    let mut table = Vec::new();
    body(&mut table).map_err(|e| CliError::Analysis(format!("{stem}: {e}")))?;
    let (name, bytes) = match format {
        Format::Csv => {
            let mut out = meta.csv_header().into_bytes();
            out.extend_from_slice(&table);
            (format!("{stem}.csv"), out)
        }
        Format::Json => {
            let rows = csv_to_records(&table).map_err(|e| CliError::Analysis(format!("{stem}: {e}")))?;
            let doc = serde_json::json!({ "meta": meta, "rows": rows });
            let text = serde_json::to_string_pretty(&doc).expect("records serialize") + "\n";
            (format!("{stem}.json"), text.into_bytes())
        }
    };
    let path = args.out.join(name);
    fs::write(&path, bytes).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}
