//! Run manifests: a small JSON sidecar written next to every output file,
//! recording what produced it — resolved flags, input hashes, stage wall
//! times, tool version. Reruns of the same command differ only in the
//! timings.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Named wall-clock stage timings.
pub struct Stages {
    timings: BTreeMap<String, f64>,
}

impl Stages {
    pub fn new() -> Self {
        Stages { timings: BTreeMap::new() }
    }

    /// Run `f`, recording its elapsed time under `name`. The closure's
    /// return value (fallible or not) passes straight through.
    pub fn time<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.timings.insert(name.to_string(), start.elapsed().as_secs_f64());
        out
    }

    pub fn record(&mut self, name: &str, seconds: f64) {
        self.timings.insert(name.to_string(), seconds);
    }
}

#[derive(Serialize)]
pub struct RunManifest {
    command: String,
    version: String,
    threads: usize,
    args: BTreeMap<String, String>,
    /// Input path → SHA-256 of the file contents.
    inputs: BTreeMap<String, String>,
    timings_s: BTreeMap<String, f64>,
}

impl RunManifest {
    pub fn new(command: &str, stages: &Stages) -> Self {
        RunManifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            threads: rayon::current_num_threads(),
            args: BTreeMap::new(),
            inputs: BTreeMap::new(),
            timings_s: stages.timings.clone(),
        }
    }

    pub fn arg(mut self, key: &str, value: impl std::fmt::Display) -> Self {
        self.args.insert(key.to_string(), value.to_string());
        self
    }

    pub fn input(mut self, path: &Path) -> anyhow::Result<Self> {
        self.inputs.insert(path.display().to_string(), sha256_hex(path)?);
        Ok(self)
    }

    /// Write to `<out>.manifest.json`.
    pub fn write_for(&self, out: &Path) -> anyhow::Result<()> {
        let mut name = out.as_os_str().to_os_string();
        name.push(".manifest.json");
        let path = PathBuf::from(name);
        let body = serde_json::to_string_pretty(self)?;
        fs::write(&path, format!("{body}\n"))
            .with_context(|| format!("writing {}", path.display()))
    }
}

pub fn sha256_hex(path: &Path) -> anyhow::Result<String> {
    let bytes = fs::read(path).with_context(|| format!("hashing {}", path.display()))?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}
