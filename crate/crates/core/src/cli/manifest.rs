//! Append-only JSON-lines run manifests.

use std::collections::BTreeMap;
use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::Value;

use crate::io::sha256_hex;

#[derive(Debug, Serialize)]
pub struct Outcome {
    pub status: &'static str,
    pub exit_code: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

/// One record per command invocation.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: &'static str,
    pub config: Value,
    pub inputs: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub codebook_checksum: Option<String>,
    pub outputs: Vec<String>,
    pub timings_ms: Vec<(String, f64)>,
    pub outcome: Option<Outcome>,
    #[serde(skip)]
    stage_start: Option<(String, Instant)>,
}

impl RunManifest {
    pub fn new(command: &str, config: Value) -> Self {
        RunManifest {
            command: command.to_owned(),
            tool_version: env!("CARGO_PKG_VERSION"),
            config,
            inputs: BTreeMap::new(),
            codebook_checksum: None,
            outputs: Vec::new(),
            timings_ms: Vec::new(),
            outcome: None,
            stage_start: None,
        }
    }

    /// Records the SHA-256 of an input file's bytes.
    pub fn input(&mut self, path: &Path, bytes: &[u8]) {
        self.inputs.insert(path.display().to_string(), sha256_hex(bytes));
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    pub fn stage(&mut self, name: &str) {
        self.end_stage();
        self.stage_start = Some((name.to_owned(), Instant::now()));
    }

    fn end_stage(&mut self) {
        if let Some((name, t)) = self.stage_start.take() {
            self.timings_ms.push((name, t.elapsed().as_secs_f64() * 1e3));
        }
    }

    pub fn finish(&mut self, exit_code: i32, message: Option<String>) {
        self.end_stage();
        self.outcome = Some(Outcome {
            status: if exit_code == 0 { "ok" } else { "error" },
            exit_code,
            message,
        });
    }

    pub fn append_to(&self, path: &Path) -> std::io::Result<()> {
        let mut f = OpenOptions::new().create(true).append(true).open(path)?;
        let mut line = serde_json::to_vec(self).expect("manifest serializes");
        line.push(b'\n');
        f.write_all(&line)
    }
}

pub const DEFAULT_NAME: &str = "logoquant.manifest.jsonl";

/// Manifest location: explicit path, else next to the primary output, else the working directory.
pub fn default_path(explicit: Option<&Path>, output: Option<&Path>) -> PathBuf {
    if let Some(p) = explicit {
        return p.to_owned();
    }
    match output.and_then(Path::parent) {
        Some(dir) if !dir.as_os_str().is_empty() => dir.join(DEFAULT_NAME),
        _ => PathBuf::from(DEFAULT_NAME),
    }
}
