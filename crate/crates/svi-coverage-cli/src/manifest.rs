//! Run manifest: inputs (with content hashes), resolved parameters,
//! version, stage durations, and warnings, written alongside the output
//! tables. The manifest records wall-clock durations and is the one output
//! file excluded from byte-level determinism guarantees.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

pub struct Manifest {
    command: String,
    parameters: Value,
    inputs: Vec<Value>,
    outputs: Vec<String>,
    warnings: Vec<String>,
    durations_ms: Map<String, Value>,
    stage_started: Option<(String, Instant)>,
}

impl Manifest {
    pub fn new(command: &str, parameters: Value) -> Manifest {
        Manifest {
            command: command.to_string(),
            parameters,
            inputs: Vec::new(),
            outputs: Vec::new(),
            warnings: Vec::new(),
            durations_ms: Map::new(),
            stage_started: None,
        }
    }

    pub fn record_input(&mut self, path: &Path) {
        let entry = match std::fs::read(path) {
            Ok(bytes) => json!({
                "path": path.display().to_string(),
                "bytes": bytes.len(),
                "sha256": hex::encode(Sha256::digest(&bytes)),
            }),
            Err(_) => json!({"path": path.display().to_string()}),
        };
        self.inputs.push(entry);
    }

    pub fn record_output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    pub fn add_warnings(&mut self, warnings: impl IntoIterator<Item = String>) {
        self.warnings.extend(warnings);
    }

    pub fn start_stage(&mut self, name: &str) {
        self.finish_stage();
        self.stage_started = Some((name.to_string(), Instant::now()));
    }

    pub fn finish_stage(&mut self) {
        if let Some((name, started)) = self.stage_started.take() {
            self.durations_ms
                .insert(name, json!(started.elapsed().as_millis() as u64));
        }
    }

    pub fn write(mut self, out_dir: &Path) -> anyhow::Result<PathBuf> {
        self.finish_stage();
        let doc = json!({
            "command": self.command,
            "version": env!("CARGO_PKG_VERSION"),
            "parameters": self.parameters,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "warnings": self.warnings,
            "durations_ms": Value::Object(self.durations_ms),
        });
        let path = out_dir.join("manifest.json");
        std::fs::write(&path, serde_json::to_string_pretty(&doc)?)?;
        Ok(path)
    }
}
