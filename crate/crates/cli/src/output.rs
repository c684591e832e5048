//! Manifests and CSV tables. Column headers carry their units.

use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::RunConfig;

pub struct Run {
    pub command: &'static str,
    pub out: PathBuf,
    started: Instant,
    outputs: Vec<String>,
    pub warnings: Vec<String>,
}

impl Run {
    pub fn start(command: &'static str, config: &RunConfig) -> anyhow::Result<Self> {
        std::fs::create_dir_all(&config.out)
            .with_context(|| format!("cannot create output directory {}", config.out.display()))?;
        Ok(Self {
            command,
            out: config.out.clone(),
            started: Instant::now(),
            outputs: Vec::new(),
            warnings: Vec::new(),
        })
    }

    /// Path of an output file, recorded in the manifest.
    pub fn path(&mut self, name: &str) -> PathBuf {
        self.outputs.push(name.to_string());
        self.out.join(name)
    }

    pub fn warn(&mut self, msg: String) {
        eprintln!("warning: {msg}");
        self.warnings.push(msg);
    }

    pub fn csv<R, I>(&mut self, name: &str, header: &[&str], rows: I) -> anyhow::Result<()>
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator,
        R::Item: Display,
    {
        let mut text = header.join(",");
        text.push('\n');
        for row in rows {
            let cells: Vec<String> = row.into_iter().map(|c| c.to_string()).collect();
            text.push_str(&cells.join(","));
            text.push('\n');
        }
        let path = self.path(name);
        std::fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> anyhow::Result<()> {
        let path = self.path(name);
        write_json(&path, value)
    }

    /// Writes `manifest.json` with the resolved inputs, seeds and results.
    pub fn finish(self, config: &RunConfig, seeds: Value, result: Value) -> anyhow::Result<()> {
        let manifest = json!({
            "command": self.command,
            "version": opengrape::VERSION,
            "inputs": config,
            "seeds": seeds,
            "wall_time_s": self.started.elapsed().as_secs_f64(),
            "outputs": self.outputs,
            "warnings": self.warnings,
            "result": result,
        });
        write_json(&self.out.join("manifest.json"), &manifest)
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

/// Column values of mixed type.
pub fn cells(values: &[&dyn Display]) -> Vec<String> {
    values.iter().map(|v| v.to_string()).collect()
}
