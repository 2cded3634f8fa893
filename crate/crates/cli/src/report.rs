use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Summary written to `report.json`. Everything except
/// `wall_clock_seconds` is a function of the config and seed.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: String,
    pub version: String,
    pub seed: u64,
    pub config: Value,
    pub pass: Option<bool>,
    pub results: Value,
    pub wall_clock_seconds: f64,
}

pub(crate) struct Output {
    dir: PathBuf,
}

impl Output {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::config(format!("cannot create output directory `{}`: {e}", dir.display())))?;
        Ok(Self { dir: dir.to_path_buf() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn write(&self, name: &str, text: &str) -> Result<(), CliError> {
        let p = self.path(name);
        std::fs::write(&p, text).map_err(|e| CliError::config(format!("cannot write `{}`: {e}", p.display())))
    }

    pub fn csv(&self, name: &str, header: &[String], rows: &[Vec<f64>]) -> Result<(), CliError> {
        let mut s = header.join(",");
        s.push('\n');
        for r in rows {
            for (k, v) in r.iter().enumerate() {
                if k > 0 {
                    s.push(',');
                }
                let _ = write!(s, "{v:e}");
            }
            s.push('\n');
        }
        self.write(name, &s)
    }

    pub fn report(&self, report: &Report) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(report).map_err(|e| CliError::numerical("serialization", e.to_string()))?;
        self.write("report.json", &(text + "\n"))
    }
}
