//! JSON reports and CSV tables.
//!
//! Every JSON report is an envelope around a command result:
//! `{tool, version, command, timestamp, seed, passed, config, result}`. Only
//! `timestamp` varies between runs of the same config.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::Result;

#[derive(Debug, Serialize)]
pub struct Envelope<'a, T: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub seed: u64,
    pub passed: bool,
    pub config: &'a ExperimentConfig,
    pub result: &'a T,
}

impl<'a, T: Serialize> Envelope<'a, T> {
    pub fn new(command: &'a str, config: &'a ExperimentConfig, passed: bool, result: &'a T) -> Self {
        Envelope {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            seed: config.seed,
            passed,
            config,
            result,
        }
    }
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(&path, text)?;
    Ok(path)
}

pub fn write_csv<R: Serialize>(dir: &Path, name: &str, rows: &[R]) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let mut w = csv::Writer::from_path(&path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(path)
}

/// Parses a report and drops its timestamp, for run-to-run comparisons.
pub fn without_timestamp(json: &str) -> Result<serde_json::Value> {
    let mut v: serde_json::Value = serde_json::from_str(json)?;
    if let Some(obj) = v.as_object_mut() {
        obj.remove("timestamp");
    }
    Ok(v)
}

/// Row of `sharpness.csv`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BetaRow {
    pub beta: f64,
    #[serde(rename = "Q")]
    pub q: f64,
    #[serde(rename = "Q_closed_form")]
    pub q_closed_form: f64,
}

/// Row of `counterexample_sphere.csv` and `counterexample_gradient.csv`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LadderRow {
    pub delta: f64,
    pub value: f64,
}

/// Row of `verify.csv` and `suite.csv`; the first four columns are fixed, the rest
/// identify the case.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuotientRow {
    pub n: usize,
    pub p: f64,
    #[serde(rename = "Q")]
    pub q: f64,
    #[serde(rename = "Q_err")]
    pub q_err: f64,
    pub mode: String,
    pub domain: String,
    pub function: String,
}
