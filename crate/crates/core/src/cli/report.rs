use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::{QvdError, Result};
use crate::fsutil::{write_atomic, write_json};

pub const REPORT_SCHEMA: &str = "qvd-report/1";
pub const REPORT_FILE: &str = "report.json";

/// Summary of one command invocation, written as `report.json` next to the
/// command's artifacts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: String,
    pub command: String,
    pub config_echo: serde_json::Value,
    pub metrics: BTreeMap<String, f64>,
    pub artifacts: Vec<String>,
    pub seed: u64,
    pub duration_ms: u64,
    /// Milliseconds since the Unix epoch at the start of the run.
    pub timestamp_ms: u64,
}

impl RunReport {
    pub fn new(command: &str, config_echo: serde_json::Value, seed: u64) -> Self {
        RunReport {
            schema: REPORT_SCHEMA.to_string(),
            command: command.to_string(),
            config_echo,
            metrics: BTreeMap::new(),
            artifacts: Vec::new(),
            seed,
            duration_ms: 0,
            timestamp_ms: now_ms(),
        }
    }

    pub fn metric(&mut self, name: &str, value: f64) -> Result<()> {
        if !value.is_finite() {
            return Err(QvdError::DegenerateInput(format!("metric {name} is not finite ({value})")));
        }
        self.metrics.insert(name.to_string(), value);
        Ok(())
    }

    pub fn artifact(&mut self, path: &Path) {
        self.artifacts.push(path.display().to_string());
    }

    pub fn artifacts<I: IntoIterator<Item = PathBuf>>(&mut self, paths: I) {
        for p in paths {
            self.artifact(&p);
        }
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| QvdError::arg(format!("cannot read report {}: {e}", path.display())))?;
        let value: serde_json::Value = serde_json::from_str(&text)?;
        match value.get("schema").and_then(|s| s.as_str()) {
            Some(REPORT_SCHEMA) => Ok(serde_json::from_value(value)?),
            other => Err(QvdError::arg(format!(
                "{}: schema {:?}, expected {REPORT_SCHEMA}",
                path.display(),
                other
            ))),
        }
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(REPORT_FILE);
        write_json(&path, self)?;
        Ok(path)
    }

    /// One line per metric, for terminal output.
    pub fn summary(&self) -> String {
        let mut s = format!("{} ({} ms)\n", self.command, self.duration_ms);
        for (k, v) in &self.metrics {
            let _ = writeln!(s, "  {k:<28} {v}");
        }
        for a in &self.artifacts {
            let _ = writeln!(s, "  -> {a}");
        }
        s
    }
}

pub(crate) fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportTable {
    pub schema: String,
    pub reports: Vec<RunReport>,
}

/// Resolves `path` to a report file: directories are searched for
/// `report.json`.
fn report_path(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.join(REPORT_FILE)
    } else {
        path.to_path_buf()
    }
}

/// Loads reports and orders them by command, then timestamp. Inputs keep
/// their relative order on full ties.
pub fn merge_reports(paths: &[PathBuf]) -> Result<ReportTable> {
    if paths.is_empty() {
        return Err(QvdError::arg("report needs at least one input"));
    }
    let mut reports = paths
        .iter()
        .map(|p| RunReport::read(&report_path(p)))
        .collect::<Result<Vec<_>>>()?;
    reports.sort_by(|a, b| a.command.cmp(&b.command).then(a.timestamp_ms.cmp(&b.timestamp_ms)));
    Ok(ReportTable {
        schema: REPORT_SCHEMA.to_string(),
        reports,
    })
}

pub fn render_markdown(table: &ReportTable) -> String {
    let mut s = String::from("| command | timestamp_ms | seed | duration_ms | metrics |\n|---|---|---|---|---|\n");
    for r in &table.reports {
        let metrics: Vec<String> = r.metrics.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let _ = writeln!(
            s,
            "| {} | {} | {} | {} | {} |",
            r.command,
            r.timestamp_ms,
            r.seed,
            r.duration_ms,
            metrics.join("; ")
        );
    }
    s
}

pub fn write_table(table: &ReportTable, dir: &Path) -> Result<Vec<PathBuf>> {
    let json = dir.join("summary.json");
    write_json(&json, table)?;
    let md = dir.join("summary.md");
    write_atomic(&md, render_markdown(table).as_bytes())?;
    Ok(vec![json, md])
}
