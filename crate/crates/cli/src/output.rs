use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{hex, ExperimentConfig};
use crate::error::RunResult;

/// One artifact listed in the manifest.
#[derive(Debug, Clone, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Seeds {
    pub run: u64,
    pub network: u64,
    pub collocation: u64,
    pub evaluation: u64,
    pub fields: u64,
}

impl Seeds {
    pub fn derive(seed: u64) -> Self {
        let mix = |k: u64| seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(k);
        Self { run: seed, network: mix(1), collocation: mix(2), evaluation: mix(3), fields: mix(4) }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub command: String,
    pub config_hash: String,
    pub tool_version: String,
    pub core_version: String,
    pub parallel: bool,
    pub seeds: Seeds,
    pub files: Vec<FileEntry>,
}

/// Output directory of one run: reports, tables, logs and the manifest.
pub struct RunDir {
    root: PathBuf,
    files: Vec<PathBuf>,
    events: BufWriter<File>,
    start: Instant,
}

impl RunDir {
    pub fn create(root: &Path) -> RunResult<Self> {
        std::fs::create_dir_all(root)?;
        let events = BufWriter::new(File::create(root.join("events.jsonl"))?);
        Ok(Self { root: root.to_path_buf(), files: Vec::new(), events, start: Instant::now() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Appends a JSON line with the stage name and elapsed wall time.
    pub fn event(&mut self, stage: &str, detail: serde_json::Value) -> RunResult<()> {
        let rec = serde_json::json!({
            "stage": stage,
            "elapsed_s": self.start.elapsed().as_secs_f64(),
            "detail": detail,
        });
        serde_json::to_writer(&mut self.events, &rec)?;
        self.events.write_all(b"\n")?;
        self.events.flush()?;
        Ok(())
    }

    pub fn track(&mut self, name: &str) {
        let p = self.path(name);
        if !self.files.contains(&p) {
            self.files.push(p);
        }
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> RunResult<()> {
        let mut f = BufWriter::new(File::create(self.path(name))?);
        serde_json::to_writer_pretty(&mut f, value)?;
        f.write_all(b"\n")?;
        f.flush()?;
        self.track(name);
        Ok(())
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> RunResult<()> {
        std::fs::write(self.path(name), text)?;
        self.track(name);
        Ok(())
    }

    /// Writes a numeric table with a fixed float format.
    pub fn write_csv(&mut self, name: &str, header: &[&str], rows: &[Vec<f64>]) -> RunResult<()> {
        let mut f = BufWriter::new(File::create(self.path(name))?);
        writeln!(f, "{}", header.join(","))?;
        for r in rows {
            let cells: Vec<String> = r.iter().map(|v| fmt(*v)).collect();
            writeln!(f, "{}", cells.join(","))?;
        }
        f.flush()?;
        self.track(name);
        Ok(())
    }

    /// Hashes every tracked file into `manifest.json`.
    pub fn finish(mut self, command: &str, cfg: &ExperimentConfig) -> RunResult<Manifest> {
        let mut files = Vec::new();
        self.files.sort();
        for p in &self.files {
            let bytes = std::fs::read(p)?;
            let rel = p.strip_prefix(&self.root).unwrap_or(p).to_string_lossy().into_owned();
            files.push(FileEntry { path: rel, sha256: hex(&Sha256::digest(&bytes)) });
        }
        let manifest = Manifest {
            command: command.to_string(),
            config_hash: cfg.hash(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            core_version: kinetic_apnn::VERSION.to_string(),
            parallel: kinetic_apnn::par::is_enabled(),
            seeds: Seeds::derive(cfg.seed),
            files,
        };
        let mut f = BufWriter::new(File::create(self.path("manifest.json"))?);
        serde_json::to_writer_pretty(&mut f, &manifest)?;
        f.write_all(b"\n")?;
        f.flush()?;
        self.event("finish", serde_json::json!({ "files": manifest.files.len() }))?;
        Ok(manifest)
    }
}

/// Integers print exactly, everything else in 12-digit scientific form.
pub fn fmt(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v:.12e}")
    }
}
