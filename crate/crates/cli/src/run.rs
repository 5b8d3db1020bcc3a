//! Subcommand execution for one configuration.

use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use crate::config::{ExperimentConfig, OutputFormat};
use crate::error::{CliError, CliResult};
use crate::observables::Observable;
use crate::output::{fmt_f64, write_series, write_summary, write_table, SeriesRow};
use crate::protocols::{leaked, scan_slope, Protocol, ScanRow};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Simulate,
    TrotterScan,
    FrameCompare,
    Budget,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::TrotterScan => "trotter-scan",
            Command::FrameCompare => "frame-compare",
            Command::Budget => "budget",
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub out_dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub summary: Value,
}

/// Output directory: the override if given, else the config's `output.path`.
pub fn output_dir(cfg: &ExperimentConfig, out: Option<&Path>) -> CliResult<PathBuf> {
    out.map(Path::to_path_buf)
        .or_else(|| cfg.output.as_ref().map(|o| o.path.clone()))
        .ok_or_else(|| CliError::Config("no output path: set output.path or pass --out".into()))
}

pub fn run_file(cmd: Command, path: &Path, out: Option<&Path>) -> CliResult<RunReport> {
    let cfg = ExperimentConfig::load(path)?;
    let dir = output_dir(&cfg, out)?;
    run(cmd, &cfg, &dir)
}

/// Runs `cmd` on a parsed config, writing all outputs under `dir`.
pub fn run(cmd: Command, cfg: &ExperimentConfig, dir: &Path) -> CliResult<RunReport> {
    let protocol = Protocol::from_name(&cfg.protocol)?;
    let params = protocol.resolve(&cfg.params)?;
    let format = cfg.output.as_ref().map_or(OutputFormat::Csv, |o| o.format);
    let mut summary = Map::new();
    summary.insert("command".into(), json!(cmd.name()));
    summary.insert("protocol".into(), json!(protocol.name()));
    summary.insert("seed".into(), json!(cfg.seed));
    summary.insert("params".into(), serde_json::to_value(params.values())?);
    let mut files = Vec::new();
    let stop = cfg.time_grid.map_or(1.0, |g| g.stop);

    match cmd {
        Command::Simulate => {
            let times = cfg.time_grid()?;
            let s0 = protocol.initial_state(&params, cfg.seed)?;
            let observables = cfg
                .observables
                .iter()
                .map(|n| Observable::parse(n, s0.space()))
                .collect::<CliResult<Vec<_>>>()?;
            let samples = protocol.series(&params, &s0, &times)?;
            for (name, obs) in cfg.observables.iter().zip(&observables) {
                let rows = samples
                    .iter()
                    .map(|s| {
                        Ok(SeriesRow {
                            time: s.time,
                            value: obs.value(&s.state, s.fidelity)?,
                            leaked: s.leakage >= daqsim_core::LEAKAGE_THRESHOLD,
                        })
                    })
                    .collect::<CliResult<Vec<_>>>()?;
                files.push(write_series(dir, name, &rows, format)?);
            }
            let fids: Vec<f64> = samples.iter().filter_map(|s| s.fidelity).collect();
            if let Some(last) = fids.last() {
                summary.insert("final_fidelity".into(), json!(last));
                summary.insert("min_fidelity".into(), json!(fids.iter().copied().fold(f64::INFINITY, f64::min)));
            }
            let max_leak = samples.iter().map(|s| s.leakage).fold(0.0, f64::max);
            summary.insert("max_leakage".into(), json!(max_leak));
            summary.insert("leakage_flag".into(), json!(leaked(&samples)));
            summary.extend(protocol.extras(&params, &samples)?);
            if let Some(steps) = &cfg.trotter_scan {
                let rows = protocol.trotter_scan(&params, &s0, stop, steps)?;
                summary.insert("trotter".into(), scan_json(&rows));
            }
            if let Ok(b) = protocol.budget(&params, stop) {
                summary.insert("budget".into(), b);
            }
        }
        Command::TrotterScan => {
            let steps = cfg
                .trotter_scan
                .as_ref()
                .filter(|s| !s.is_empty())
                .ok_or_else(|| CliError::Config("trotter-scan needs a non-empty trotter_scan list".into()))?;
            let s0 = protocol.initial_state(&params, cfg.seed)?;
            let rows = protocol.trotter_scan(&params, &s0, stop, steps)?;
            let with_fidelity = rows.iter().all(|r| r.fidelity.is_some());
            let header: &[&str] = if with_fidelity { &["l", "spectral_error", "fidelity"] } else { &["l", "spectral_error"] };
            let table: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    let mut v = vec![r.steps.to_string(), fmt_f64(r.spectral_error)];
                    if let Some(f) = r.fidelity.filter(|_| with_fidelity) {
                        v.push(fmt_f64(f));
                    }
                    v
                })
                .collect();
            files.push(write_table(dir, "trotter_scan", header, &table)?);
            summary.insert("time".into(), json!(stop));
            summary.insert("trotter".into(), scan_json(&rows));
            if let Some(s) = scan_slope(&rows) {
                summary.insert("loglog_slope".into(), json!(s));
            }
        }
        Command::FrameCompare => {
            let times = cfg.time_grid()?;
            let s0 = protocol.initial_state(&params, cfg.seed)?;
            let (fids, distance) = protocol.frame_compare(&params, &s0, &times)?;
            let rows: Vec<SeriesRow> = times
                .iter()
                .zip(&fids)
                .map(|(&t, &f)| SeriesRow { time: t, value: daqsim_core::C64::new(f, 0.0), leaked: false })
                .collect();
            files.push(write_series(dir, "frame_compare", &rows, format)?);
            summary.insert("min_fidelity".into(), json!(fids.iter().copied().fold(f64::INFINITY, f64::min)));
            summary.insert("effective_vs_closed_form".into(), json!(distance));
        }
        Command::Budget => {
            summary.insert("time".into(), json!(stop));
            summary.insert("budget".into(), protocol.budget(&params, stop)?);
        }
    }
    let summary = Value::Object(summary);
    files.push(write_summary(dir, &summary)?);
    Ok(RunReport { out_dir: dir.to_path_buf(), files, summary })
}

fn scan_json(rows: &[ScanRow]) -> Value {
    Value::Array(
        rows.iter()
            .map(|r| {
                let mut m = Map::new();
                m.insert("l".into(), json!(r.steps));
                m.insert("spectral_error".into(), json!(r.spectral_error));
                if let Some(b) = r.error_bound {
                    m.insert("error_bound".into(), json!(b));
                }
                if let Some(f) = r.fidelity {
                    m.insert("fidelity".into(), json!(f));
                }
                Value::Object(m)
            })
            .collect(),
    )
}
