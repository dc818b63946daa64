//! End-to-end experiments: indicator reconstruction, slab focusing,
//! boundary-only volume and coordinate recovery, observation times, identity
//! checks and convergence sweeps.
//!
//! Boundary-side quantities come from [`wavefocus_boundary`] with nothing
//! but an [`NtdOperator`]; the forward solver is used only to replay sources
//! and evaluate the volume oracles they are compared against.

mod experiments;
mod identities;
mod recovery;
mod sweep;

pub use experiments::{
    focus_metrics, focus_slab, plateau_edge, reconstruct_indicator, FocusExperiment, FocusMetrics,
    IndicatorRecord, SLAB_MARGIN,
};
pub use identities::{
    band_limited_v, band_limited_y, relative_error, verify_identity, verify_identity_batch,
    IdentityName, IdentityReport, TrialCoefficients, TrialPair, TrialSet, RELATIVE_FLOOR,
};
pub use recovery::{
    observation_time, recover_coordinate, slab_volume_from_boundary, CoordinateEstimate,
    ObservationTime, VolumeEstimate, DEGENERACY_FLOOR,
};
pub use sweep::{convergence_sweep, loglog_slope, SweepFailure, SweepRow, SweepTable};

use wavefocus_boundary::{Execution, NtdOperator, TimeSignal};

use crate::cache::{CacheStatus, KernelCache};
use crate::error::Result;
use crate::forward::{build_ntd, solve_neumann, ForwardOutput, SolverGrid};
use crate::medium::MediumProfile;

/// A medium together with the forward-solver grid used to simulate it.
#[derive(Debug, Clone)]
pub struct FocusingLab {
    profile: MediumProfile,
    grid: SolverGrid,
    execution: Execution,
}

impl FocusingLab {
    pub fn new(profile: MediumProfile, grid: SolverGrid) -> Result<Self> {
        grid.validate(&profile)?;
        Ok(Self {
            profile,
            grid,
            execution: Execution::default(),
        })
    }

    /// Reference profile and reference solver grid for half horizon `t`.
    pub fn reference(t: f64) -> Result<Self> {
        let profile = MediumProfile::reference(t);
        let grid = SolverGrid::reference(&profile, t);
        Self::new(profile, grid)
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    pub fn execution(&self) -> Execution {
        self.execution
    }

    pub fn profile(&self) -> &MediumProfile {
        &self.profile
    }

    pub fn grid(&self) -> &SolverGrid {
        &self.grid
    }

    /// Half horizon `T`.
    pub fn t(&self) -> f64 {
        0.5 * self.grid.horizon
    }

    /// Same medium on a grid refined by `factor` in space and time.
    pub fn refined(&self, factor: usize) -> Self {
        Self {
            grid: self.grid.refined(factor),
            ..self.clone()
        }
    }

    pub fn build_ntd(&self, n: usize) -> Result<NtdOperator> {
        Ok(build_ntd(&self.profile, n, &self.grid)?.with_execution(self.execution))
    }

    pub fn cached_ntd(
        &self,
        cache: &KernelCache,
        n: usize,
        force: bool,
    ) -> Result<(NtdOperator, CacheStatus)> {
        let (ntd, status) = cache.get_or_build(&self.profile, n, &self.grid, force)?;
        Ok((ntd.with_execution(self.execution), status))
    }

    /// Forward solve for `f` with snapshots at the given times.
    pub fn replay(&self, f: &TimeSignal, snapshot_times: &[f64]) -> Result<ForwardOutput> {
        solve_neumann(&self.profile, f, &self.grid, snapshot_times)
    }
}
