use std::fs::File;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const TOOL: &str = env!("CARGO_PKG_NAME");
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// SHA-256 of the config with keys sorted and whitespace removed.
pub fn config_digest(value: &serde_json::Value) -> String {
    let canonical = serde_json::to_vec(value).expect("json values serialize");
    hex::encode(Sha256::digest(&canonical))
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    config_digest: &'a str,
    passed: bool,
    checks: &'a [Check],
    result: &'a T,
}

/// Writes `<dir>/<stem>.json` and `<dir>/<stem>_<table>.csv`.
pub struct Output {
    pub dir: PathBuf,
    pub stem: String,
    pub command: String,
    pub digest: String,
}

impl Output {
    pub fn new(dir: &Path, stem: &str, command: &str, digest: String) -> Result<Self> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Output {
            dir: dir.to_path_buf(),
            stem: stem.to_string(),
            command: command.to_string(),
            digest,
        })
    }

    pub fn json_path(&self) -> PathBuf {
        self.dir.join(format!("{}.json", self.stem))
    }

    pub fn write_json<T: Serialize>(&self, result: &T, checks: &[Check]) -> Result<PathBuf> {
        let env = Envelope {
            tool: TOOL,
            version: VERSION,
            command: &self.command,
            config_digest: &self.digest,
            passed: checks.iter().all(|c| c.passed),
            checks,
            result,
        };
        let path = self.json_path();
        let mut text = serde_json::to_string_pretty(&env)?;
        text.push('\n');
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }

    pub fn csv(&self, table: &str) -> Result<(csv::Writer<File>, PathBuf)> {
        let path = self.dir.join(format!("{}_{table}.csv", self.stem));
        let w =
            csv::Writer::from_path(&path).with_context(|| format!("writing {}", path.display()))?;
        Ok((w, path))
    }
}

/// Shortest round-trip representation; empty for NaN.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        format!("{x:e}")
    }
}
