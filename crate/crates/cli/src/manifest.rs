//! Run manifests: a JSON record of the resolved settings, the files written
//! and the numeric diagnostics of a command.

use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use crate::settings::{GenerateSettings, ReconstructSettings};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum CommandEcho {
    Generate(GenerateSettings),
    Reconstruct(ReconstructSettings),
}

/// Non-finite values (an infinite condition number) are stored as `null`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub condition: Option<f64>,
    pub singular: bool,
    pub chosen_alpha: Option<f64>,
    pub residual_norm: Option<f64>,
    pub discrepancy_threshold: Option<f64>,
    pub relative_error: Option<f64>,
    pub rule_status: Option<String>,
    pub ladder_steps: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    #[serde(flatten)]
    pub echo: CommandEcho,
    pub artifacts: Vec<String>,
    pub diagnostics: Option<Diagnostics>,
    pub elapsed_ms: f64,
}

impl RunManifest {
    pub fn new(echo: CommandEcho) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_owned(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
            echo,
            artifacts: Vec::new(),
            diagnostics: None,
            elapsed_ms: 0.0,
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").with_context(|| format!("cannot write {}", path.display()))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("{} is not a valid manifest", path.display()))
    }
}

pub fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}
