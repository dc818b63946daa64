//! Run configuration: JSON with defaults for every field except the focusing
//! radii, validated before any computation.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use wavefocus_boundary::{RegularizationConfig, RegularizationSchedule};
use wavefocus_core::lab::IdentityName;
use wavefocus_core::{MediumProfile, ProfileSpec, SolverGrid};

use crate::error::{CliError, Result};

pub const ENV_OUT: &str = "WAVEFOCUS_OUT";
pub const ENV_JOBS: &str = "WAVEFOCUS_JOBS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum ProfileSource {
    /// The built-in variable-speed profile for the configured `t`.
    Reference,
    /// `c = 1` on `[0, 1.1 t]`.
    Uniform {
        #[serde(default = "default_uniform_cells")]
        n_cells: usize,
    },
    Inline {
        spec: ProfileSpec,
    },
    /// A JSON profile spec on disk, relative to the config file.
    File {
        path: PathBuf,
    },
}

fn default_uniform_cells() -> usize {
    8192
}

/// Solver grid fields that replace the reference grid's.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOverrides {
    pub n_x: Option<usize>,
    pub n_t: Option<usize>,
    pub cfl_factor: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FocusBlock {
    pub r1: Option<f64>,
    pub r2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyBlock {
    pub identities: Vec<IdentityName>,
    pub trials: usize,
    pub seed: u64,
}

impl Default for VerifyBlock {
    fn default() -> Self {
        Self {
            identities: IdentityName::ALL.to_vec(),
            trials: 20,
            seed: 2024,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepBlock {
    pub n_list: Vec<usize>,
    pub schedule: RegularizationSchedule,
}

impl Default for SweepBlock {
    fn default() -> Self {
        Self {
            n_list: vec![128, 256, 512, 1024],
            schedule: RegularizationSchedule::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecoverBlock {
    /// Threshold for the reported first arrival.
    pub threshold: f64,
    /// Extra thresholds reported for sensitivity.
    pub sensitivity: Vec<f64>,
}

impl Default for RecoverBlock {
    fn default() -> Self {
        Self {
            threshold: 0.1,
            sensitivity: vec![0.05, 0.2],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub profile: ProfileSource,
    /// Half horizon `T`; data live on `[0, 2T]`.
    pub t: f64,
    /// Number of hat intervals on `[0, T]`.
    pub n: usize,
    pub solver: SolverOverrides,
    pub regularization: RegularizationConfig,
    pub focus: FocusBlock,
    pub verify: VerifyBlock,
    pub sweep: SweepBlock,
    pub recover: RecoverBlock,
    /// Parent of the run directories. Not part of the run hash.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// NtD kernel cache; defaults to `<output_dir>/cache`. Not part of the run hash.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cache_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            profile: ProfileSource::Reference,
            t: 2.0,
            n: 2048,
            solver: SolverOverrides::default(),
            regularization: RegularizationConfig::default(),
            focus: FocusBlock::default(),
            verify: VerifyBlock::default(),
            sweep: SweepBlock::default(),
            recover: RecoverBlock::default(),
            output_dir: None,
            cache_dir: None,
        }
    }
}

/// JSON pointer for a deserialization path.
fn pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => out.push_str(&format!("/{index}")),
            Segment::Map { key } => {
                out.push_str(&format!("/{}", key.replace('~', "~0").replace('/', "~1")))
            }
            Segment::Enum { variant } => out.push_str(&format!("/{variant}")),
            Segment::Unknown => {}
        }
    }
    if out.is_empty() {
        "/".into()
    } else {
        out
    }
}

impl RunConfig {
    /// Parses a config document, reporting failures with a JSON pointer.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let ptr = pointer(e.path());
            CliError::config(ptr, e.into_inner().to_string())
        })?;
        Ok(cfg)
    }

    /// Reads a config file; relative profile paths resolve against its directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config("/", format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        if let ProfileSource::File { path: p } = &mut cfg.profile {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    /// Field checks shared by all commands.
    pub fn validate(&self) -> Result<()> {
        if !(self.t > 0.0 && self.t.is_finite()) {
            return Err(CliError::config(
                "/t",
                format!("T must be positive, got {}", self.t),
            ));
        }
        if self.n < 2 {
            return Err(CliError::config(
                "/n",
                format!("N must be at least 2, got {}", self.n),
            ));
        }
        self.regularization
            .validate()
            .map_err(|e| CliError::config("/regularization", e.to_string()))?;
        if self.verify.trials == 0 {
            return Err(CliError::config(
                "/verify/trials",
                "at least one trial is required",
            ));
        }
        if let Some(i) = self.sweep.n_list.iter().position(|&n| n < 2) {
            return Err(CliError::config(
                format!("/sweep/n_list/{i}"),
                "N must be at least 2",
            ));
        }
        if self.sweep.n_list.windows(2).any(|w| w[1] < w[0]) {
            return Err(CliError::config(
                "/sweep/n_list",
                "N list must be ascending",
            ));
        }
        let thresholds =
            std::iter::once(("/recover/threshold".to_string(), self.recover.threshold)).chain(
                self.recover
                    .sensitivity
                    .iter()
                    .enumerate()
                    .map(|(i, &v)| (format!("/recover/sensitivity/{i}"), v)),
            );
        for (ptr, v) in thresholds {
            if !(v > 0.0 && v < 1.0) {
                return Err(CliError::config(
                    ptr,
                    format!("threshold must lie in (0, 1), got {v}"),
                ));
            }
        }
        Ok(())
    }

    /// The focusing radii, required by focus, sweep and recover.
    pub fn radii(&self) -> Result<(f64, f64)> {
        let r1 = self
            .focus
            .r1
            .ok_or_else(|| CliError::config("/focus/r1", "missing radius"))?;
        let r2 = self
            .focus
            .r2
            .ok_or_else(|| CliError::config("/focus/r2", "missing radius"))?;
        if !(r1 > 0.0) {
            return Err(CliError::config(
                "/focus/r1",
                format!("radius must be positive, got {r1}"),
            ));
        }
        if !(r2 > r1 && r2 <= self.t) {
            return Err(CliError::config(
                "/focus/r2",
                format!("radius must lie in (r1, T] = ({r1}, {}], got {r2}", self.t),
            ));
        }
        Ok((r1, r2))
    }

    pub fn resolve_profile(&self) -> Result<MediumProfile> {
        let spec = match &self.profile {
            ProfileSource::Reference => ProfileSpec::reference(self.t),
            ProfileSource::Uniform { n_cells } => ProfileSpec::uniform(1.1 * self.t, *n_cells),
            ProfileSource::Inline { spec } => spec.clone(),
            ProfileSource::File { path } => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    CliError::config(
                        "/profile/path",
                        format!("cannot read {}: {e}", path.display()),
                    )
                })?;
                let de = &mut serde_json::Deserializer::from_str(&text);
                serde_path_to_error::deserialize(de).map_err(|e| {
                    CliError::config(
                        "/profile/path",
                        format!("{} at {}: {}", path.display(), pointer(e.path()), e.inner()),
                    )
                })?
            }
        };
        let ptr = match self.profile {
            ProfileSource::Inline { .. } => "/profile/spec",
            ProfileSource::File { .. } => "/profile/path",
            _ => "/profile",
        };
        MediumProfile::new(spec).map_err(|e| CliError::config(ptr, e.to_string()))
    }

    pub fn resolve_grid(&self, profile: &MediumProfile) -> SolverGrid {
        let mut g = SolverGrid::reference(profile, self.t);
        if let Some(n_x) = self.solver.n_x {
            g.n_x = n_x;
        }
        if let Some(n_t) = self.solver.n_t {
            g.n_t = n_t;
        }
        if let Some(c) = self.solver.cfl_factor {
            g.cfl_factor = c;
        }
        g
    }

    /// The config with output locations removed, used for run hashes.
    pub fn hashed_view(&self) -> RunConfig {
        RunConfig {
            output_dir: None,
            cache_dir: None,
            ..self.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        assert_eq!(RunConfig::from_json("{}").unwrap(), RunConfig::default());
    }

    #[test]
    fn errors_carry_json_pointers() {
        let err = RunConfig::from_json(r#"{"verify": {"identities": ["blago1", "blago9"]}}"#)
            .unwrap_err();
        match err {
            CliError::Config { pointer, .. } => assert_eq!(pointer, "/verify/identities/1"),
            e => panic!("{e}"),
        }
        let err = RunConfig::from_json(r#"{"regularization": {"alpah": 1}}"#).unwrap_err();
        assert!(
            matches!(err, CliError::Config { ref pointer, .. } if pointer == "/regularization/alpah"),
            "{err}"
        );
        let err = RunConfig::default().radii().unwrap_err();
        assert!(matches!(err, CliError::Config { ref pointer, .. } if pointer == "/focus/r1"));
    }

    #[test]
    fn grid_overrides_apply() {
        let cfg = RunConfig::from_json(r#"{"solver": {"n_x": 1024}}"#).unwrap();
        let p = cfg.resolve_profile().unwrap();
        let g = cfg.resolve_grid(&p);
        assert_eq!((g.n_x, g.n_t), (1024, 1 << 15));
    }
}
