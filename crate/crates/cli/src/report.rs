use std::io::Write;
use std::path::Path;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::Context;
use serde::Serialize;
use serde_json::Value;

use crate::{Common, Format};

/// Why a command stopped before producing a report.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags or inputs; exit 1.
    Config(String),
    /// A computation failed numerically; exit 2.
    Numeric(String),
}

impl From<fuzzyqm::Error> for Failure {
    fn from(e: fuzzyqm::Error) -> Self {
        Failure::Numeric(e.to_string())
    }
}

pub fn config_error<T>(msg: impl Into<String>) -> Result<T, Failure> {
    Err(Failure::Config(msg.into()))
}

/// Rows emitted under `--format csv`.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Table {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }
}

#[derive(Debug)]
pub struct Report {
    pub command: &'static str,
    pub config: Value,
    pub results: Value,
    pub pass: bool,
    pub table: Table,
}

impl Report {
    pub fn new(command: &'static str, config: Value, results: impl Serialize, pass: bool, table: Table) -> Self {
        Report {
            command,
            config,
            results: serde_json::to_value(results).expect("results serialize"),
            pass,
            table,
        }
    }
}

#[derive(Serialize)]
struct Envelope<'a> {
    command: &'a str,
    config: &'a Value,
    results: &'a Value,
    pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    timestamp: Option<u64>,
}

pub enum Outcome {
    Pass,
    Breach,
    Config(String),
    Numeric(String),
    Io(anyhow::Error),
}

impl Outcome {
    pub fn from_error(f: Failure) -> Self {
        match f {
            Failure::Config(m) => Outcome::Config(m),
            Failure::Numeric(m) => Outcome::Numeric(m),
        }
    }

    pub fn exit_code(self) -> ExitCode {
        match self {
            Outcome::Pass => ExitCode::SUCCESS,
            Outcome::Breach => ExitCode::from(2),
            Outcome::Config(m) => {
                eprintln!("error: {m}");
                ExitCode::from(1)
            }
            Outcome::Numeric(m) => {
                eprintln!("error: {m}");
                ExitCode::from(2)
            }
            Outcome::Io(e) => {
                eprintln!("error: {e:#}");
                ExitCode::from(1)
            }
        }
    }
}

fn render(common: &Common, report: &Report) -> anyhow::Result<Vec<u8>> {
    match common.format {
        Format::Json => {
            let timestamp = (!common.deterministic)
                .then(|| SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0));
            let envelope = Envelope {
                command: report.command,
                config: &report.config,
                results: &report.results,
                pass: report.pass,
                timestamp,
            };
            let mut out = serde_json::to_vec_pretty(&envelope)?;
            out.push(b'\n');
            Ok(out)
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(&report.table.header)?;
            for row in &report.table.rows {
                w.write_record(row)?;
            }
            Ok(w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?)
        }
    }
}

/// Writes via a sibling temporary file so readers never see partial output.
fn write_atomic(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("creating file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn emit(common: &Common, report: &Report) -> Outcome {
    let written = render(common, report).and_then(|bytes| match &common.output {
        Some(path) => write_atomic(path, &bytes),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(&bytes)?;
            out.flush()?;
            Ok(())
        }
    });
    match written {
        Err(e) => Outcome::Io(e),
        Ok(()) if report.pass => Outcome::Pass,
        Ok(()) => Outcome::Breach,
    }
}
