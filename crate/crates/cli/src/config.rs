//! Experiment configuration documents.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Bool(bool),
    Int(i64),
    Float(f64),
    Text(String),
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Bool(b) => write!(f, "{b}"),
            ParamValue::Int(i) => write!(f, "{i}"),
            ParamValue::Float(x) => write!(f, "{x}"),
            ParamValue::Text(s) => write!(f, "{s:?}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl TimeGrid {
    pub fn times(&self) -> CliResult<Vec<f64>> {
        if self.points == 0 || !self.start.is_finite() || !self.stop.is_finite() || self.stop < self.start {
            return Err(CliError::Config(format!(
                "time_grid needs points ≥ 1 and start ≤ stop (got {self:?})"
            )));
        }
        if self.points == 1 {
            return Ok(vec![self.stop]);
        }
        let h = (self.stop - self.start) / (self.points - 1) as f64;
        Ok((0..self.points).map(|k| self.start + h * k as f64).collect())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub path: PathBuf,
    #[serde(default)]
    pub format: OutputFormat,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub protocol: String,
    #[serde(default)]
    pub params: BTreeMap<String, ParamValue>,
    #[serde(default)]
    pub observables: Vec<String>,
    pub time_grid: Option<TimeGrid>,
    pub trotter_scan: Option<Vec<usize>>,
    pub output: Option<OutputSpec>,
    #[serde(default)]
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn time_grid(&self) -> CliResult<Vec<f64>> {
        self.time_grid
            .ok_or_else(|| CliError::Config("this command needs a time_grid".into()))?
            .times()
    }
}

/// Typed view over a protocol's parameter map with declared keys and defaults.
#[derive(Clone, Debug)]
pub struct Params {
    values: BTreeMap<String, ParamValue>,
}

/// A declared parameter; `None` default means the key is required.
#[derive(Clone, Copy, Debug)]
pub struct ParamSpec {
    pub name: &'static str,
    pub default: Option<DefaultValue>,
}

#[derive(Clone, Copy, Debug)]
pub enum DefaultValue {
    Num(f64),
    Int(i64),
    Text(&'static str),
}

pub const fn req(name: &'static str) -> ParamSpec {
    ParamSpec { name, default: None }
}

pub const fn num(name: &'static str, v: f64) -> ParamSpec {
    ParamSpec { name, default: Some(DefaultValue::Num(v)) }
}

pub const fn int(name: &'static str, v: i64) -> ParamSpec {
    ParamSpec { name, default: Some(DefaultValue::Int(v)) }
}

pub const fn text(name: &'static str, v: &'static str) -> ParamSpec {
    ParamSpec { name, default: Some(DefaultValue::Text(v)) }
}

impl Params {
    /// Checks `given` against `specs`, rejecting unknown and missing keys.
    pub fn resolve(protocol: &str, specs: &[ParamSpec], given: &BTreeMap<String, ParamValue>) -> CliResult<Self> {
        let mut values = BTreeMap::new();
        for key in given.keys() {
            if !specs.iter().any(|s| s.name == key) {
                return Err(CliError::Config(format!("unknown parameter `{key}` for protocol `{protocol}`")));
            }
        }
        for s in specs {
            let v = match (given.get(s.name), s.default) {
                (Some(v), _) => v.clone(),
                (None, Some(DefaultValue::Num(x))) => ParamValue::Float(x),
                (None, Some(DefaultValue::Int(i))) => ParamValue::Int(i),
                (None, Some(DefaultValue::Text(t))) => ParamValue::Text(t.to_string()),
                (None, None) => {
                    return Err(CliError::Config(format!("protocol `{protocol}` requires parameter `{}`", s.name)))
                }
            };
            values.insert(s.name.to_string(), v);
        }
        Ok(Self { values })
    }

    fn get(&self, key: &str) -> CliResult<&ParamValue> {
        self.values
            .get(key)
            .ok_or_else(|| CliError::Config(format!("parameter `{key}` is not declared")))
    }

    pub fn f64(&self, key: &str) -> CliResult<f64> {
        match self.get(key)? {
            ParamValue::Float(x) => Ok(*x),
            ParamValue::Int(i) => Ok(*i as f64),
            other => Err(CliError::Config(format!("parameter `{key}` must be a number, got {other}"))),
        }
    }

    pub fn usize(&self, key: &str) -> CliResult<usize> {
        match self.get(key)? {
            ParamValue::Int(i) if *i >= 0 => Ok(*i as usize),
            other => Err(CliError::Config(format!(
                "parameter `{key}` must be a non-negative integer, got {other}"
            ))),
        }
    }

    pub fn text(&self, key: &str) -> CliResult<&str> {
        match self.get(key)? {
            ParamValue::Text(s) => Ok(s),
            other => Err(CliError::Config(format!("parameter `{key}` must be a string, got {other}"))),
        }
    }

    /// A copy with one integer parameter replaced.
    pub fn with_int(&self, key: &str, v: usize) -> Self {
        let mut values = self.values.clone();
        values.insert(key.to_string(), ParamValue::Int(v as i64));
        Self { values }
    }

    pub fn values(&self) -> &BTreeMap<String, ParamValue> {
        &self.values
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
protocol = "heisenberg"
seed = 3
observables = ["z0"]

[params]
n_qubits = 2
l = 1

[time_grid]
start = 0.0
stop = 1.0
points = 3
"#;

    #[test]
    fn parses_minimal() {
        let c = ExperimentConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(c.protocol, "heisenberg");
        assert_eq!(c.params["n_qubits"], ParamValue::Int(2));
        assert_eq!(c.time_grid().unwrap(), vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn rejects_unknown_top_level_key() {
        let text = format!("colour = 1\n{MINIMAL}");
        assert!(matches!(ExperimentConfig::from_toml(&text), Err(CliError::Config(_))));
    }

    #[test]
    fn rejects_unknown_nested_key() {
        let text = MINIMAL.replace("points = 3", "points = 3\nstep = 2");
        assert!(ExperimentConfig::from_toml(&text).is_err());
    }

    #[test]
    fn params_resolution() {
        let c = ExperimentConfig::from_toml(MINIMAL).unwrap();
        let specs = [req("n_qubits"), req("l"), num("j", 1.0)];
        let p = Params::resolve("heisenberg", &specs, &c.params).unwrap();
        assert_eq!(p.f64("j").unwrap(), 1.0);
        assert_eq!(p.usize("n_qubits").unwrap(), 2);
        assert!(Params::resolve("heisenberg", &specs[1..], &c.params).is_err());
        assert!(Params::resolve("heisenberg", &[req("n_qubits"), req("l"), req("j")], &c.params).is_err());
    }
}
