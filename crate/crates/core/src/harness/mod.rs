//! Experiment orchestration: config parsing, the per-cell checks, report
//! emission and the command-line front end.

use std::fmt;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub mod cli;
mod config;
mod models;
mod run;

pub use config::{parse_spec, split_top_level, CellSpec, Check, ExperimentSpec, Horizon, PointSpec};
pub use models::{build_map, parse_f64, parse_space, parse_vec, Expr, Model, ModelSpace};
pub use run::{run_cell, run_experiment};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error at line {line}: {msg}")]
    Config { line: usize, msg: String },
    #[error("{0}")]
    Usage(String),
    #[error("malformed report: {0}")]
    Report(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Inconclusive => "inconclusive",
        })
    }
}

impl std::str::FromStr for Status {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "pass" => Ok(Status::Pass),
            "fail" => Ok(Status::Fail),
            "inconclusive" => Ok(Status::Inconclusive),
            _ => Err(format!("unknown status `{s}`")),
        }
    }
}

/// One check outcome. `bound` is an exact decimal integer, prefixed with
/// `>=` when only a lower bound on it could be certified.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub check: String,
    pub space: String,
    pub map: String,
    pub schedule: String,
    pub eps: String,
    pub g: String,
    pub bound: String,
    pub empirical: String,
    pub status: Status,
    pub seconds: Option<f64>,
    pub seed: u64,
    /// Cell name and witness text; JSON only.
    #[serde(default)]
    pub cell: String,
    #[serde(default)]
    pub detail: String,
}

pub const CSV_COLUMNS: [&str; 11] = ["check", "space", "map", "schedule", "eps", "g", "bound", "empirical", "status", "seconds", "seed"];

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub rows: Vec<Row>,
}

impl BoundReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.status == Status::Pass)
    }

    /// 0 when every row passed, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.all_pass() {
            0
        } else {
            1
        }
    }

    pub fn count(&self, status: Status) -> usize {
        self.rows.iter().filter(|r| r.status == status).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(format!("unknown format `{s}` (csv or json)")),
        }
    }
}

fn csv_io(e: csv::Error) -> HarnessError {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => HarnessError::Io(e),
        other => HarnessError::Report(format!("{other:?}")),
    }
}

pub fn emit_report(report: &BoundReport, format: Format, mut out: impl Write) -> Result<(), HarnessError> {
    match format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut out, report).map_err(|e| HarnessError::Io(e.into()))?;
            out.write_all(b"\n")?;
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(CSV_COLUMNS).map_err(csv_io)?;
            for r in &report.rows {
                let seconds = r.seconds.map(|s| s.to_string()).unwrap_or_default();
                let status = r.status.to_string();
                let seed = r.seed.to_string();
                w.write_record([
                    &r.check, &r.space, &r.map, &r.schedule, &r.eps, &r.g, &r.bound, &r.empirical, &status, &seconds, &seed,
                ])
                .map_err(csv_io)?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

pub fn report_to_string(report: &BoundReport, format: Format) -> String {
    let mut buf = Vec::new();
    emit_report(report, format, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("reports are UTF-8")
}

/// Reads a report written by [`emit_report`] in either format. CSV input
/// carries no `cell` or `detail`; they come back empty.
pub fn parse_report(text: &str) -> Result<BoundReport, HarnessError> {
    if text.trim_start().starts_with('{') {
        return serde_json::from_str(text).map_err(|e| HarnessError::Report(e.to_string()));
    }
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = rdr.headers().map_err(csv_io)?.iter().map(String::from).collect();
    if header != CSV_COLUMNS {
        return Err(HarnessError::Report(format!("unexpected CSV header {header:?}")));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_io)?;
        let f = |i: usize| rec[i].to_string();
        let bad = |what: &str| HarnessError::Report(format!("bad {what} in line {:?}", rec.position().map(|p| p.line())));
        rows.push(Row {
            check: f(0),
            space: f(1),
            map: f(2),
            schedule: f(3),
            eps: f(4),
            g: f(5),
            bound: f(6),
            empirical: f(7),
            status: rec[8].parse().map_err(|_| bad("status"))?,
            seconds: if rec[9].is_empty() { None } else { Some(rec[9].parse().map_err(|_| bad("seconds"))?) },
            seed: rec[10].parse().map_err(|_| bad("seed"))?,
            cell: String::new(),
            detail: String::new(),
        });
    }
    Ok(BoundReport { rows })
}
