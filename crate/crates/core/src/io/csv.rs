//! CSV tables. Every file starts with a `# leray-deconv <schema> v<major>`
//! line; numbers are written with 17 significant digits so that values
//! survive a write/read cycle exactly.
//!
//! Diagnostic files (`diag` schema, v1) have the columns
//! `t, energy, h1_seminorm_sq, dissipation, input_power, balance_residual`.
//! Study files (`study` schema, v1) carry `kind=<study>` on the schema line
//! and one column per measured quantity; the columns of each study are
//! listed in the README.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::diagnostics::DiagRecord;
use crate::error::{Error, Result};
use crate::experiments::StudyReport;

pub const DIAG_SCHEMA: &str = "diag";
pub const STUDY_SCHEMA: &str = "study";
pub const CSV_MAJOR: u32 = 1;

pub const DIAG_COLUMNS: [&str; 6] = [
    "t",
    "energy",
    "h1_seminorm_sq",
    "dissipation",
    "input_power",
    "balance_residual",
];

/// `{:.16e}`: 17 significant digits.
pub fn format_number(x: f64) -> String {
    format!("{x:.16e}")
}

fn schema_line(schema: &str, extra: &str) -> String {
    if extra.is_empty() {
        format!("# leray-deconv {schema} v{CSV_MAJOR}\n")
    } else {
        format!("# leray-deconv {schema} v{CSV_MAJOR} {extra}\n")
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Format(format!("csv: {e}"))
}

fn write_table<W: Write>(mut out: W, schema: &str, extra: &str, columns: &[String], rows: &[Vec<f64>]) -> Result<()> {
    out.write_all(schema_line(schema, extra).as_bytes())
        .map_err(|e| Error::Format(e.to_string()))?;
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(columns).map_err(csv_err)?;
    for r in rows {
        if r.len() != columns.len() {
            return Err(Error::ShapeMismatch {
                expected: columns.len(),
                actual: r.len(),
            });
        }
        w.write_record(r.iter().map(|x| format_number(*x))).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Format(e.to_string()))
}

/// Parsed table: the text after the version on the schema line, the header
/// and the numeric rows.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub extra: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

fn read_table<R: Read>(input: R, schema: &str) -> Result<CsvTable> {
    let mut input = BufReader::new(input);
    let mut first = String::new();
    input.read_line(&mut first).map_err(|e| Error::Format(e.to_string()))?;
    let mut parts = first.trim_end().splitn(4, ' ');
    let (hash, tool, found, version) = (parts.next(), parts.next(), parts.next(), parts.next().unwrap_or(""));
    if hash != Some("#") || tool != Some("leray-deconv") || found != Some(schema) {
        return Err(Error::Format(format!("missing `# leray-deconv {schema}` schema line")));
    }
    let (version, extra) = version.split_once(' ').unwrap_or((version, ""));
    let major: u32 = version
        .strip_prefix('v')
        .and_then(|v| v.split('.').next())
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::Format(format!("bad schema version `{version}`")))?;
    if major > CSV_MAJOR {
        return Err(Error::Format(format!(
            "{schema} schema v{major} is newer than supported v{CSV_MAJOR}"
        )));
    }
    let mut r = csv::ReaderBuilder::new().from_reader(input);
    let columns: Vec<String> = r.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        let row = rec
            .iter()
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Format(format!("not a number: `{s}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(CsvTable {
        extra: extra.to_string(),
        columns,
        rows,
    })
}

fn diag_row(r: &DiagRecord) -> Vec<f64> {
    vec![r.t, r.energy, r.h1_seminorm_sq, r.dissipation, r.input_power, r.balance_residual]
}

pub fn write_diag_csv<W: Write>(out: W, records: &[DiagRecord]) -> Result<()> {
    let cols: Vec<String> = DIAG_COLUMNS.iter().map(|s| s.to_string()).collect();
    let rows: Vec<Vec<f64>> = records.iter().map(diag_row).collect();
    write_table(out, DIAG_SCHEMA, "", &cols, &rows)
}

pub fn diag_csv_string(records: &[DiagRecord]) -> String {
    let mut buf = Vec::new();
    write_diag_csv(&mut buf, records).expect("in-memory write");
    String::from_utf8(buf).expect("ascii")
}

pub fn read_diag_csv<R: Read>(input: R) -> Result<Vec<DiagRecord>> {
    let t = read_table(input, DIAG_SCHEMA)?;
    if t.columns != DIAG_COLUMNS {
        return Err(Error::Format(format!("unexpected diag columns {:?}", t.columns)));
    }
    Ok(t.rows
        .into_iter()
        .map(|r| DiagRecord {
            t: r[0],
            energy: r[1],
            h1_seminorm_sq: r[2],
            dissipation: r[3],
            input_power: r[4],
            balance_residual: r[5],
        })
        .collect())
}

pub fn write_study_csv<W: Write>(out: W, report: &StudyReport) -> Result<()> {
    write_table(
        out,
        STUDY_SCHEMA,
        &format!("kind={}", report.kind.name()),
        &report.columns,
        &report.rows,
    )
}

pub fn study_csv_string(report: &StudyReport) -> String {
    let mut buf = Vec::new();
    write_study_csv(&mut buf, report).expect("in-memory write");
    String::from_utf8(buf).expect("ascii")
}

pub fn read_study_csv<R: Read>(input: R) -> Result<CsvTable> {
    read_table(input, STUDY_SCHEMA)
}

pub fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}
