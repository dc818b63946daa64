//! On-disk cache of NtD kernels keyed by profile, node count and solver grid.
//!
//! File layout (little endian): magic `WFNTD001`, `N: u64`, `T: f64`,
//! `len: u64`, `len` kernel values as `f64`, then the SHA-256 of everything
//! before it.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};
use wavefocus_boundary::{NtdOperator, TimeGrid, TimeSignal};

use crate::error::{CoreError, Result};
use crate::forward::{build_ntd, SolverGrid};
use crate::medium::{content_hash, MediumProfile};

const MAGIC: &[u8; 8] = b"WFNTD001";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CacheStatus {
    Hit,
    Built,
    /// An entry existed but failed verification and was replaced.
    Rebuilt,
}

#[derive(Debug, Clone)]
pub struct KernelCache {
    dir: PathBuf,
}

#[derive(Serialize)]
struct KeyParts<'a> {
    profile: &'a str,
    n: usize,
    grid: &'a SolverGrid,
}

impl KernelCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn key(profile: &MediumProfile, n: usize, grid: &SolverGrid) -> String {
        content_hash(&KeyParts {
            profile: profile.content_hash(),
            n,
            grid,
        })
    }

    pub fn path_for(&self, profile: &MediumProfile, n: usize, grid: &SolverGrid) -> PathBuf {
        self.dir
            .join(format!("ntd-{}.bin", Self::key(profile, n, grid)))
    }

    /// Returns the cached kernel, building and storing it when absent,
    /// corrupt, or when `force` is set.
    pub fn get_or_build(
        &self,
        profile: &MediumProfile,
        n: usize,
        grid: &SolverGrid,
        force: bool,
    ) -> Result<(NtdOperator, CacheStatus)> {
        let path = self.path_for(profile, n, grid);
        let mut status = CacheStatus::Built;
        if path.exists() {
            if !force {
                match read_kernel(&path) {
                    Ok(ntd) => return Ok((ntd, CacheStatus::Hit)),
                    Err(CoreError::CorruptCache { .. }) => status = CacheStatus::Rebuilt,
                    Err(e) => return Err(e),
                }
            } else {
                status = CacheStatus::Rebuilt;
            }
        }
        let ntd = build_ntd(profile, n, grid)?;
        write_kernel(&path, &ntd)?;
        Ok((ntd, status))
    }
}

fn encode(ntd: &NtdOperator) -> Vec<u8> {
    let g = ntd.grid();
    let values = ntd.kernel().values();
    let mut buf = Vec::with_capacity(8 * (values.len() + 4) + 32);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(g.n() as u64).to_le_bytes());
    buf.extend_from_slice(&g.t().to_le_bytes());
    buf.extend_from_slice(&(values.len() as u64).to_le_bytes());
    for v in values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    let digest = Sha256::digest(&buf);
    buf.extend_from_slice(&digest);
    buf
}

/// Writes atomically through a temporary file in the same directory.
pub fn write_kernel(path: &Path, ntd: &NtdOperator) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let tmp = path.with_extension("bin.tmp");
    fs::write(&tmp, encode(ntd))?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn read_kernel(path: &Path) -> Result<NtdOperator> {
    let bytes = fs::read(path)?;
    let corrupt = |reason: &str| CoreError::CorruptCache {
        path: path.display().to_string(),
        reason: reason.to_string(),
    };
    if bytes.len() < 32 + 32 || &bytes[..8] != MAGIC {
        return Err(corrupt("bad header"));
    }
    let (body, digest) = bytes.split_at(bytes.len() - 32);
    if Sha256::digest(body).as_slice() != digest {
        return Err(corrupt("checksum mismatch"));
    }
    let word = |i: usize| -> [u8; 8] { body[8 * i..8 * i + 8].try_into().expect("8 bytes") };
    let n = u64::from_le_bytes(word(1)) as usize;
    let t = f64::from_le_bytes(word(2));
    let len = u64::from_le_bytes(word(3)) as usize;
    if body.len() != 8 * (4 + len) {
        return Err(corrupt("length mismatch"));
    }
    let values = (0..len).map(|i| f64::from_le_bytes(word(4 + i))).collect();
    let grid = TimeGrid::new(n, t).map_err(|e| corrupt(&e.to_string()))?;
    let kernel = TimeSignal::from_values(grid, values).map_err(|e| corrupt(&e.to_string()))?;
    NtdOperator::from_kernel(kernel).map_err(|e| corrupt(&e.to_string()))
}
