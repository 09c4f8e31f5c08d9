use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::{CliError, CliResult};

/// Invocation details shared by every command.
pub struct Context {
    argv: Vec<String>,
    threads: usize,
    started: Instant,
}

impl Context {
    pub fn new(argv: &[String], threads: usize) -> Self {
        Context {
            argv: argv.to_vec(),
            threads,
            started: Instant::now(),
        }
    }

    pub fn manifest(
        &self,
        command: &str,
        inputs: Vec<PathBuf>,
        config: serde_json::Value,
        seed: Option<u64>,
    ) -> RunManifest {
        RunManifest {
            command: command.to_string(),
            argv: self.argv.clone(),
            inputs: inputs.iter().map(|p| p.display().to_string()).collect(),
            config,
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            threads: self.threads,
            duration_seconds: self.started.elapsed().as_secs_f64(),
        }
    }
}

/// Written next to every command's output.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    pub inputs: Vec<String>,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub tool_version: String,
    pub threads: usize,
    pub duration_seconds: f64,
}

impl RunManifest {
    pub fn write(&self, path: &Path) -> CliResult<()> {
        hieralign::bscore::save_json(path, self).map_err(CliError::internal)
    }
}

/// `report.json` → `report.manifest.json`.
pub fn sibling_manifest_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{}.manifest.json", stem))
}
