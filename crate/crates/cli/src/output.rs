use std::path::{Path, PathBuf};

use dclab_core::{DcError, Result, C64};
use serde::Serialize;
use serde_json::Value;

use crate::config::JobConfig;

/// Version of the run record layout.
pub const SCHEMA: &str = "dclab.run/1";

/// A CSV table; cells are kept as text so numbers round-trip exactly.
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self { name: name.into(), header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

/// Shortest representation that parses back to the same `f64`.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

pub fn cx(z: C64) -> [String; 2] {
    [num(z.re), num(z.im)]
}

pub struct RunOutput {
    pub result: Value,
    pub tables: Vec<Table>,
    /// Lines for the terminal.
    pub summary: Vec<String>,
    /// Set when the run completed but its checks did not pass.
    pub failure: Option<DcError>,
}

impl RunOutput {
    pub fn new(result: impl Serialize) -> Result<Self> {
        Ok(Self { result: to_value(result)?, tables: Vec::new(), summary: Vec::new(), failure: None })
    }
}

pub fn to_value(v: impl Serialize) -> Result<Value> {
    serde_json::to_value(v).map_err(|e| DcError::Numeric(format!("cannot encode the result: {e}")))
}

#[derive(Serialize)]
struct Record<'a> {
    schema: &'a str,
    command: &'a str,
    version: &'a str,
    config: &'a JobConfig,
    status: &'a str,
    exit_code: i32,
    error: Option<String>,
    tables: Vec<String>,
    result: &'a Value,
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> DcError {
    DcError::InvalidInput(format!("{}: {e}", path.display()))
}

/// Writes `<command>.json`, one CSV per table and `config.json`; returns the record path.
pub fn write(cfg: &JobConfig, command: &str, run: &RunOutput) -> Result<PathBuf> {
    let dir = &cfg.out;
    std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    let mut names = Vec::new();
    for table in &run.tables {
        let name = format!("{command}_{}.csv", table.name);
        let path = dir.join(&name);
        let mut w = csv::Writer::from_path(&path).map_err(|e| io_error(&path, e))?;
        w.write_record(&table.header).map_err(|e| io_error(&path, e))?;
        for row in &table.rows {
            w.write_record(row).map_err(|e| io_error(&path, e))?;
        }
        w.flush().map_err(|e| io_error(&path, e))?;
        names.push(name);
    }
    let (status, exit_code, error) = match &run.failure {
        None => ("ok", 0, None),
        Some(e) => ("failed", e.exit_code(), Some(e.to_string())),
    };
    let record = Record {
        schema: SCHEMA,
        command,
        version: env!("CARGO_PKG_VERSION"),
        config: cfg,
        status,
        exit_code,
        error,
        tables: names,
        result: &run.result,
    };
    let path = dir.join(format!("{command}.json"));
    let text = serde_json::to_string_pretty(&record).map_err(|e| io_error(&path, e))?;
    std::fs::write(&path, text + "\n").map_err(|e| io_error(&path, e))?;
    let echo = dir.join("config.json");
    let text = serde_json::to_string_pretty(cfg).map_err(|e| io_error(&echo, e))?;
    std::fs::write(&echo, text + "\n").map_err(|e| io_error(&echo, e))?;
    Ok(path)
}

/// Record of a run that failed before producing results.
pub fn write_error(cfg: &JobConfig, command: &str, err: &DcError) -> Result<PathBuf> {
    let run = RunOutput { result: Value::Null, tables: Vec::new(), summary: Vec::new(), failure: Some(err.clone()) };
    write(cfg, command, &run)
}
