//! Run manifest: config hash, toolkit version, wall-clock duration,
//! per-step diagnostics and invariant-check results. Written next to the
//! data artifacts for every run.

use std::path::Path;
use std::time::Instant;

use crate::csvio::write_atomic;
use crate::error::CliResult;

/// FNV-1a 64-bit over the raw configuration bytes; platform-independent.
pub fn config_hash(bytes: &[u8]) -> String {
    let mut hash: u64 = 0xcbf29ce484222325;
    for b in bytes {
        hash ^= *b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    format!("{hash:016x}")
}

pub struct RunManifest {
    experiment: String,
    config_hash: String,
    seed: Option<u64>,
    threads: usize,
    started: Instant,
    steps: Vec<String>,
    invariants: Vec<String>,
}

impl RunManifest {
    pub fn new(experiment: &str, config_bytes: &[u8], seed: Option<u64>, threads: usize) -> Self {
        Self {
            experiment: experiment.to_string(),
            config_hash: config_hash(config_bytes),
            seed,
            threads,
            started: Instant::now(),
            steps: Vec::new(),
            invariants: Vec::new(),
        }
    }

    pub fn step(&mut self, text: impl Into<String>) {
        self.steps.push(text.into());
    }

    pub fn invariant(&mut self, text: impl Into<String>) {
        self.invariants.push(text.into());
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        let mut out = String::new();
        out.push_str(&format!("experiment = \"{}\"\n", self.experiment));
        out.push_str(&format!("config_hash = \"fnv1a64:{}\"\n", self.config_hash));
        out.push_str(&format!(
            "toolkit_version = \"{}\"\n",
            env!("CARGO_PKG_VERSION")
        ));
        match self.seed {
            Some(s) => out.push_str(&format!("seed = {s}\n")),
            None => out.push_str("seed = \"none\"\n"),
        }
        out.push_str(&format!("threads = {}\n", self.threads));
        out.push_str(&format!(
            "duration_seconds = {:.6}\n",
            self.started.elapsed().as_secs_f64()
        ));
        for (i, s) in self.steps.iter().enumerate() {
            out.push_str(&format!("step.{} = \"{}\"\n", i + 1, s));
        }
        for (i, s) in self.invariants.iter().enumerate() {
            out.push_str(&format!("invariant.{} = \"{}\"\n", i + 1, s));
        }
        write_atomic(path, out.as_bytes())
    }
}
