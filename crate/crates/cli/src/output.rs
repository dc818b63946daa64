//! Run directories: every file is staged in a hidden directory and the
//! directory is renamed into place once the manifest is written.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::Result;

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    run_hash: &'a str,
    profile_hash: &'a str,
    config: &'a RunConfig,
    /// SHA-256 of every other file in the directory.
    files: BTreeMap<String, String>,
}

pub struct RunDir {
    command: String,
    run_hash: String,
    staging: PathBuf,
    target: PathBuf,
    files: BTreeMap<String, String>,
}

/// Content hash of a command and its resolved config, output locations excluded.
pub fn run_hash(command: &str, config: &RunConfig) -> String {
    wavefocus_core::medium::content_hash(&(command, config.hashed_view()))
}

impl RunDir {
    pub fn create(out: &Path, command: &str, config: &RunConfig) -> Result<Self> {
        let run_hash = run_hash(command, config);
        let name = format!("{command}-{}", &run_hash[..16]);
        let staging = out.join(format!(".{name}.{}.tmp", std::process::id()));
        if staging.exists() {
            fs::remove_dir_all(&staging)?;
        }
        fs::create_dir_all(&staging)?;
        Ok(Self {
            command: command.to_string(),
            run_hash,
            target: out.join(name),
            staging,
            files: BTreeMap::new(),
        })
    }

    /// Final location of the run.
    pub fn path(&self) -> &Path {
        &self.target
    }

    fn record(&mut self, name: &str) -> Result<()> {
        let bytes = fs::read(self.staging.join(name))?;
        self.files
            .insert(name.to_string(), hex::encode(Sha256::digest(&bytes)));
        Ok(())
    }

    /// Writes one CSV series from serializable rows.
    pub fn csv<R: Serialize>(
        &mut self,
        name: &str,
        rows: impl IntoIterator<Item = R>,
    ) -> Result<()> {
        let mut w = csv::Writer::from_path(self.staging.join(name))?;
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
        drop(w);
        self.record(name)
    }

    /// Writes a CSV through a writer callback, for types that emit their own.
    pub fn raw(
        &mut self,
        name: &str,
        write: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>,
    ) -> Result<()> {
        let mut buf = Vec::new();
        write(&mut buf)?;
        fs::write(self.staging.join(name), buf)?;
        self.record(name)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        fs::write(self.staging.join(name), text)?;
        self.record(name)
    }

    /// Writes `report.json` and the manifest and moves the run into place,
    /// replacing an earlier run of the same config.
    pub fn finish<T: Serialize>(
        mut self,
        config: &RunConfig,
        profile_hash: &str,
        report: &T,
    ) -> Result<PathBuf> {
        self.json("report.json", report)?;
        let manifest = Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: &self.command,
            run_hash: &self.run_hash,
            profile_hash,
            config,
            files: std::mem::take(&mut self.files),
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        fs::write(self.staging.join("manifest.json"), text)?;
        if self.target.exists() {
            fs::remove_dir_all(&self.target)?;
        }
        fs::rename(&self.staging, &self.target)?;
        Ok(self.target.clone())
    }
}

impl Drop for RunDir {
    fn drop(&mut self) {
        // leftover staging after an error; harmless if already renamed
        let _ = fs::remove_dir_all(&self.staging);
    }
}
