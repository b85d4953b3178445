//! CSV files and the run manifest.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use merton_cfd::{GridSpec, MarketParams, SolverConfig, SolverStats};
use serde::Serialize;

use crate::config::{ConfigLayer, Resolved};

pub const SCHEMA_VERSION: u32 = 1;

/// Iteration statistics of one solve.
#[derive(Debug, Clone, Serialize)]
pub struct RunStats {
    pub label: String,
    /// Largest number of corrector iterations on any level.
    pub n_s: u32,
    /// `[iterations, levels]` pairs.
    pub histogram: Vec<(u32, usize)>,
}

impl RunStats {
    pub fn new(label: impl Into<String>, stats: &SolverStats) -> Self {
        Self {
            label: label.into(),
            n_s: stats.max_iterations(),
            histogram: stats.histogram(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Phase {
    pub name: String,
    pub seconds: f64,
}

#[derive(Serialize)]
struct ResolvedView<'a> {
    params: &'a MarketParams,
    grid: &'a GridSpec,
    solver: &'a SolverConfig,
}

#[derive(Serialize)]
struct Manifest<'a> {
    schema_version: u32,
    command: &'a serde_json::Value,
    options: &'a serde_json::Value,
    config: &'a ConfigLayer,
    resolved: ResolvedView<'a>,
    outputs: &'a [String],
    wall_seconds: f64,
    phases: &'a [Phase],
    stats: &'a [RunStats],
    passed: Option<bool>,
}

/// Collects the artifacts of one command and writes its manifest.
pub struct Artifacts {
    dir: PathBuf,
    header: String,
    outputs: Vec<String>,
    phases: Vec<Phase>,
    pub stats: Vec<RunStats>,
    pub passed: Option<bool>,
    started: Instant,
}

impl Artifacts {
    pub fn new(dir: &Path, resolved: &Resolved) -> Result<Self> {
        std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            header: resolved.header(),
            outputs: Vec::new(),
            phases: Vec::new(),
            stats: Vec::new(),
            passed: None,
            started: Instant::now(),
        })
    }

    /// Runs `f` and records its duration under `name`.
    pub fn phase<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        self.phases.push(Phase {
            name: name.to_string(),
            seconds: t.elapsed().as_secs_f64(),
        });
        out
    }

    /// Writes a CSV whose first line is the resolved-grid comment.
    pub fn csv(&mut self, name: &str, columns: &[&str], rows: &[Vec<String>]) -> Result<PathBuf> {
        let path = self.dir.join(name);
        let mut file = File::create(&path).with_context(|| format!("cannot create {}", path.display()))?;
        writeln!(file, "{}", self.header)?;
        let mut w = csv::Writer::from_writer(file);
        w.write_record(columns)?;
        for row in rows {
            w.write_record(row)?;
        }
        w.flush()?;
        self.outputs.push(name.to_string());
        Ok(path)
    }

    /// Writes a JSON document with the resolved grid embedded under `run`.
    pub fn json<T: Serialize>(&mut self, name: &str, body: &T) -> Result<PathBuf> {
        #[derive(Serialize)]
        struct Doc<'a, T> {
            schema_version: u32,
            run: &'a str,
            #[serde(flatten)]
            body: &'a T,
        }
        let path = self.dir.join(name);
        let doc = Doc {
            schema_version: SCHEMA_VERSION,
            run: self.header.trim_start_matches("# "),
            body,
        };
        std::fs::write(&path, serde_json::to_string_pretty(&doc)? + "\n")
            .with_context(|| format!("cannot write {}", path.display()))?;
        self.outputs.push(name.to_string());
        Ok(path)
    }

    pub fn finish(self, task: &serde_json::Value, resolved: &Resolved) -> Result<PathBuf> {
        let path = self.dir.join("manifest.json");
        let manifest = Manifest {
            schema_version: SCHEMA_VERSION,
            command: &task["command"],
            options: &task["options"],
            config: &resolved.layer,
            resolved: ResolvedView {
                params: &resolved.params,
                grid: &resolved.grid,
                solver: &resolved.solver,
            },
            outputs: &self.outputs,
            wall_seconds: self.started.elapsed().as_secs_f64(),
            phases: &self.phases,
            stats: &self.stats,
            passed: self.passed,
        };
        std::fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")
            .with_context(|| format!("cannot write {}", path.display()))?;
        Ok(path)
    }
}

/// Price formatting used in every CSV.
pub fn price(v: f64) -> String {
    format!("{v:.6}")
}

/// Shortest round-trip representation.
pub fn full(v: f64) -> String {
    format!("{v:?}")
}
