//! CSV and JSON writers. Numbers are written with 17 significant digits.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use daqsim_core::C64;
use serde_json::{json, Value};

use crate::config::OutputFormat;
use crate::error::CliResult;

pub const SERIES_HEADER: &str = "time,value_re,value_im,leakage_flag";

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesRow {
    pub time: f64,
    pub value: C64,
    pub leaked: bool,
}

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn series_csv(rows: &[SeriesRow]) -> String {
    let mut s = String::from(SERIES_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            fmt_f64(r.time),
            fmt_f64(r.value.re),
            fmt_f64(r.value.im),
            u8::from(r.leaked)
        );
    }
    s
}

pub fn series_json(rows: &[SeriesRow]) -> Value {
    Value::Array(
        rows.iter()
            .map(|r| json!({"time": r.time, "value_re": r.value.re, "value_im": r.value.im, "leakage_flag": r.leaked}))
            .collect(),
    )
}

/// Writes `<dir>/<name>.csv` or `<dir>/<name>.json` and returns its path.
pub fn write_series(dir: &Path, name: &str, rows: &[SeriesRow], format: OutputFormat) -> CliResult<PathBuf> {
    fs::create_dir_all(dir)?;
    let (path, body) = match format {
        OutputFormat::Csv => (dir.join(format!("{name}.csv")), series_csv(rows)),
        OutputFormat::Json => (dir.join(format!("{name}.json")), pretty(&series_json(rows))?),
    };
    fs::write(&path, body)?;
    Ok(path)
}

/// A table with a header row and one formatted line per record.
pub fn write_table(dir: &Path, name: &str, header: &[&str], rows: &[Vec<String>]) -> CliResult<PathBuf> {
    fs::create_dir_all(dir)?;
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    let path = dir.join(format!("{name}.csv"));
    fs::write(&path, s)?;
    Ok(path)
}

pub fn write_summary(dir: &Path, summary: &Value) -> CliResult<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join("summary.json");
    fs::write(&path, pretty(summary)?)?;
    Ok(path)
}

fn pretty(v: &Value) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}
