use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Unconverged,
}

impl Verdict {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Pass => 0,
            Self::Fail => 1,
            Self::Unconverged => 2,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Pass => "pass",
            Self::Fail => "fail",
            Self::Unconverged => "unconverged",
        }
    }

    /// Unconverged dominates fail, which dominates pass.
    pub fn combine(self, other: Self) -> Self {
        self.max(other)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Writes report files under one directory.
pub struct ReportDir {
    root: PathBuf,
}

impl ReportDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn text(&self, name: &str, body: &str) -> Result<()> {
        fs::write(self.path(name), body)?;
        Ok(())
    }

    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        let mut body = serde_json::to_string_pretty(value)?;
        body.push('\n');
        self.text(name, &body)
    }

    /// The effective configuration, so every report carries its defaults.
    pub fn config(&self, cfg: &ExperimentConfig) -> Result<()> {
        self.text("config.toml", &cfg.to_toml_string()?)
    }
}

/// Human-readable summary: a header, then the body lines, then the verdict.
pub fn summary(title: &str, body: &[String], verdict: Verdict) -> String {
    let mut s = format!("{title}\n");
    for line in body {
        s.push_str(line);
        s.push('\n');
    }
    s.push_str(&format!("verdict: {verdict}\n"));
    s
}

/// Shortest exponent form that parses back to the same `f64`.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}
