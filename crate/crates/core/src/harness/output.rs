//! Result files: CSV tables with header `m,mse,bias2,var,stderr`, or JSON reports that
//! also echo the configuration and the library version. Floats are written in their
//! shortest round-trip form, so identical inputs give identical bytes.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use super::{ExperimentConfig, MseRow, RateFit};
use crate::distributions::Truth;
use crate::error::{Error, Result};

pub const LIBRARY_VERSION: &str = env!("CARGO_PKG_VERSION");
const HEADER: &str = "m,mse,bias2,var,stderr";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(Error::Parse(format!("unknown output format '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub version: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<ExperimentConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truth: Option<Truth>,
    pub rows: Vec<MseRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<RateFit>,
}

impl Report {
    pub fn new(rows: Vec<MseRow>) -> Self {
        Report {
            version: LIBRARY_VERSION,
            config: None,
            truth: None,
            rows,
            fit: None,
        }
    }
}

pub fn write_rows_csv<W: Write>(rows: &[MseRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{HEADER}")?;
    for r in rows {
        writeln!(out, "{},{},{},{},{}", r.m, r.mse, r.bias2, r.var, r.stderr)?;
    }
    out.flush()
}

pub fn parse_rows_csv<R: Read>(reader: R) -> Result<Vec<MseRow>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header.join(",") != HEADER {
        return Err(Error::Parse(format!("unexpected header '{}'", header.join(","))));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let num = |i: usize| -> Result<f64> {
            rec[i].parse().map_err(|_| Error::Parse(format!("bad number '{}'", &rec[i])))
        };
        rows.push(MseRow {
            m: rec[0].parse().map_err(|_| Error::Parse(format!("bad size '{}'", &rec[0])))?,
            mse: num(1)?,
            bias2: num(2)?,
            var: num(3)?,
            stderr: num(4)?,
        });
    }
    Ok(rows)
}

/// Writes `report` to `path`; CSV carries only the rows.
pub fn emit_results(report: &Report, format: OutputFormat, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    match format {
        OutputFormat::Csv => write_rows_csv(&report.rows, &mut out).map_err(|e| Error::io(path, e)),
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut out, report)?;
            writeln!(out).and_then(|_| out.flush()).map_err(|e| Error::io(path, e))
        }
    }
}
