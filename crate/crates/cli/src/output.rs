use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;

use einlab::{LabError, PrecisionReal};
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::args::Format;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    BadArgs(String),
    #[error("{0}")]
    Lab(#[from] LabError),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::BadArgs(_) => 2,
            CliError::Lab(LabError::Precondition(_)) => 2,
            CliError::Lab(LabError::Quadrature { .. }) => 3,
            CliError::Lab(_) => 4,
            _ => 1,
        }
    }
}

pub const EXIT_TOLERANCE: i32 = 3;

/// Settings echoed into every JSON document.
#[derive(Debug, Clone, Serialize, Default)]
pub struct RunConfig {
    pub command: String,
    pub digits: u32,
    pub terms: Option<u64>,
    pub alpha: Option<String>,
    pub n: Option<u32>,
    pub quad_budget: Option<usize>,
    pub seed: Option<u64>,
    pub format: Option<Format>,
    pub output: Option<PathBuf>,
}

/// Rows for `--format csv`.
#[derive(Debug, Default)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

pub const TRACE_HEADER: [&str; 4] = ["k", "term", "cumulative", "abs_term"];

/// What a command produced.
pub struct Outcome {
    pub results: Value,
    pub errors_bounds: Value,
    pub table: Table,
    pub tolerance_met: bool,
}

/// Ball as `{"value": "<decimal>", "radius": <upper bound>}`.
pub fn ball(x: &PrecisionReal, digits: u32) -> Value {
    json!({ "value": x.to_sci_string(digits as usize), "radius": x.radius().to_f64() })
}

pub fn sci(x: &PrecisionReal, digits: u32) -> String {
    x.to_sci_string(digits as usize)
}

pub fn emit(
    config: &RunConfig,
    outcome: &Outcome,
    runtime_ms: u128,
    format: Format,
    path: Option<&PathBuf>,
) -> Result<(), CliError> {
    let mut sink: Box<dyn Write> = match path {
        Some(p) => Box::new(File::create(p)?),
        None => Box::new(io::stdout().lock()),
    };
    match format {
        Format::Json => {
            let doc = json!({
                "command": config.command,
                "config": config,
                "results": outcome.results,
                "errors_bounds": outcome.errors_bounds,
                "runtime_ms": runtime_ms,
            });
            serde_json::to_writer_pretty(&mut sink, &doc)?;
            writeln!(sink)?;
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(sink);
            w.write_record(&outcome.table.header)?;
            for r in &outcome.table.rows {
                w.write_record(r)?;
            }
            w.flush()?;
        }
    }
    Ok(())
}
