//! Check records, the summary and the manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{Command, RunConfig, SCHEMA_VERSION};

/// How a check compares its value with the threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Comparison {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
    /// Reported only.
    #[serde(rename = "report")]
    Report,
}

/// One named invariant outcome.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub module: &'static str,
    pub value: f64,
    pub threshold: Option<f64>,
    pub comparison: Comparison,
    pub pass: bool,
    /// Hard checks decide the exit code.
    pub hard: bool,
}

impl Check {
    pub fn at_most(
        module: &'static str,
        name: impl Into<String>,
        value: f64,
        threshold: f64,
    ) -> Self {
        Self {
            name: name.into(),
            module,
            value,
            threshold: Some(threshold),
            comparison: Comparison::AtMost,
            pass: value <= threshold,
            hard: true,
        }
    }

    pub fn at_least(
        module: &'static str,
        name: impl Into<String>,
        value: f64,
        threshold: f64,
    ) -> Self {
        Self {
            name: name.into(),
            module,
            value,
            threshold: Some(threshold),
            comparison: Comparison::AtLeast,
            pass: value >= threshold,
            hard: true,
        }
    }

    pub fn report(module: &'static str, name: impl Into<String>, value: f64) -> Self {
        Self {
            name: name.into(),
            module,
            value,
            threshold: None,
            comparison: Comparison::Report,
            pass: true,
            hard: false,
        }
    }

    /// Keeps the pass flag but stops it from affecting the exit code.
    pub fn soft(mut self) -> Self {
        self.hard = false;
        self
    }
}

/// Deterministic run summary (no timings).
#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub schema_version: u32,
    pub command: &'static str,
    pub seed: u64,
    pub checks: Vec<Check>,
    pub all_hard_pass: bool,
    pub converged: bool,
}

impl Summary {
    pub fn new(command: Command, seed: u64, checks: Vec<Check>, converged: bool) -> Self {
        let all_hard_pass = checks.iter().all(|c| c.pass || !c.hard);
        Self {
            schema_version: SCHEMA_VERSION,
            command: command.name(),
            seed,
            checks,
            all_hard_pass,
            converged,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Timing {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Versions {
    pub tool: &'static str,
    pub schema: u32,
}

/// Provenance of a run: config echo, versions, timings and written files.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub command: &'static str,
    pub config: RunConfig,
    pub versions: Versions,
    pub threads: usize,
    pub timings: Vec<Timing>,
    pub files: Vec<PathBuf>,
}

impl Manifest {
    pub fn versions() -> Versions {
        Versions {
            tool: env!("CARGO_PKG_VERSION"),
            schema: SCHEMA_VERSION,
        }
    }
}

/// Writes pretty JSON followed by a newline.
pub fn write_json(path: &Path, value: &impl Serialize) -> std::io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
    text.push('\n');
    fs::write(path, text)
}
