//! CSV tables and the JSON run manifest.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::experiment::{Grid, SweepResult};
use crate::CliError;

fn io_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// Write rows to a CSV file, creating parent directories as needed.
pub fn write_csv<R, S>(path: &Path, header: &[S], rows: R) -> Result<(), CliError>
where
    R: IntoIterator<Item = Vec<String>>,
    S: AsRef<str>,
{
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| io_error(path, e))?;
    w.write_record(header.iter().map(AsRef::as_ref)).map_err(|e| io_error(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| io_error(path, e))?;
    }
    w.flush().map_err(|e| io_error(path, e))
}

/// Fixed precision so that files diff cleanly across runs.
pub fn fmt_value(v: f64, decimals: usize) -> String {
    format!("{v:.decimals$}")
}

/// One row per K and one column per initial stock.
pub fn write_grid(path: &Path, grid: &Grid, decimals: usize) -> Result<(), CliError> {
    let mut header = vec!["K".to_string()];
    header.extend(grid.x0.iter().map(|x| format!("x={x}")));
    let rows = grid.setup_costs.iter().zip(&grid.cells).map(|(k, row)| {
        let mut r = vec![fmt_value(*k, 0)];
        r.extend(row.iter().map(|v| fmt_value(*v, decimals)));
        r
    });
    write_csv(path, &header, rows)
}

pub fn write_sweep(path: &Path, sweep: &SweepResult) -> Result<(), CliError> {
    let header = ["K", "x", "max", "max_setting", "avg", "min", "min_setting"];
    let rows = sweep.cells.iter().map(|c| {
        vec![
            fmt_value(c.setup_cost, 0),
            c.x0.to_string(),
            fmt_value(c.max, 2),
            c.max_setting.to_string(),
            fmt_value(c.avg, 2),
            fmt_value(c.min, 2),
            c.min_setting.to_string(),
        ]
    });
    write_csv(path, &header, rows)
}

/// Render a grid as an aligned text table.
pub fn render_grid(title: &str, grid: &Grid, decimals: usize) -> String {
    let mut out = format!("{title}\n{:>8}", "K \\ x");
    for x in &grid.x0 {
        out.push_str(&format!("{x:>12}"));
    }
    out.push('\n');
    for (k, row) in grid.setup_costs.iter().zip(&grid.cells) {
        out.push_str(&format!("{k:>8.0}"));
        for v in row {
            out.push_str(&format!("{:>12}", fmt_value(*v, decimals)));
        }
        out.push('\n');
    }
    out
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// `git rev-parse HEAD` of the working directory, when there is one.
pub fn git_revision() -> Option<String> {
    let out = Command::new("git").args(["rev-parse", "HEAD"]).output().ok()?;
    out.status
        .success()
        .then(|| String::from_utf8_lossy(&out.stdout).trim().to_string())
}

#[derive(Debug, Clone, Serialize)]
pub struct Timing {
    pub step: String,
    pub millis: u128,
}

/// Provenance of one run.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub command: String,
    pub config_sha256: String,
    pub git_revision: Option<String>,
    pub started_unix: u64,
    pub seed: Option<u64>,
    pub timings: Vec<Timing>,
    pub outputs: Vec<PathBuf>,
}

impl Manifest {
    pub fn new(command: &str, config_json: &str, seed: Option<u64>) -> Self {
        Self {
            command: command.to_string(),
            config_sha256: sha256_hex(config_json.as_bytes()),
            git_revision: git_revision(),
            started_unix: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
            seed,
            timings: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn time<T>(&mut self, step: &str, f: impl FnOnce() -> T) -> T {
        let start = std::time::Instant::now();
        let out = f();
        self.timings.push(Timing {
            step: step.to_string(),
            millis: start.elapsed().as_millis(),
        });
        out
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
        let path = dir.join(format!("manifest_{}.json", self.command));
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(&path, text).map_err(|e| io_error(&path, e))?;
        Ok(path)
    }
}
