use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use crate::args::Format;
use crate::error::CliError;

/// A flat table for CSV output.
#[derive(Debug, Default)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Table {
        Table { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

/// What a subcommand produced.
pub struct Report {
    pub result: Value,
    pub table: Table,
    /// Set when checks ran but did not all pass.
    pub failure: Option<String>,
}

impl Report {
    pub fn new(result: impl Serialize, table: Table) -> Result<Report, CliError> {
        Ok(Report { result: serde_json::to_value(result).map_err(blockdl::Error::from)?, table, failure: None })
    }
}

pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x}")
    } else {
        String::new()
    }
}

pub fn opt<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn render(config: &Value, report: &Report, format: Format) -> Result<Vec<u8>, CliError> {
    match format {
        Format::Json => {
            let doc = json!({ "config": config, "result": report.result });
            let mut s = serde_json::to_string_pretty(&doc).map_err(blockdl::Error::from)?;
            s.push('\n');
            Ok(s.into_bytes())
        }
        Format::Csv => {
            let mut buf = format!("# config: {}\n", config).into_bytes();
            {
                let mut w = csv::Writer::from_writer(&mut buf);
                w.write_record(&report.table.header).map_err(csv_err)?;
                for row in &report.table.rows {
                    w.write_record(row).map_err(csv_err)?;
                }
                w.flush().map_err(blockdl::Error::from)?;
            }
            Ok(buf)
        }
    }
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Output(e.to_string())
}

pub fn emit(config: &Value, report: &Report, format: Format, out: Option<&Path>) -> Result<(), CliError> {
    let bytes = render(config, report, format)?;
    match out {
        Some(path) => fs::write(path, bytes).map_err(|e| CliError::Output(format!("{}: {e}", path.display()))),
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(&bytes).and_then(|_| lock.flush()).map_err(|e| CliError::Output(e.to_string()))
        }
    }
}
