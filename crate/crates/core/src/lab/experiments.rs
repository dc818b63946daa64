use serde::Serialize;
use wavefocus_boundary::par::join;
use wavefocus_boundary::{
    solve_a, solve_h, NtdOperator, RegularizationConfig, SolveReport, TimeSignal,
};

use super::FocusingLab;
use crate::error::{CoreError, Result};
use crate::forward::{gradient_norm_sq, volume_inner_product, FieldSnapshot, SpatialGrid};
use crate::medium::{Interval, MediumProfile};

/// Half-width of the window around the slab used for the mass fraction.
pub const SLAB_MARGIN: f64 = 0.02;

#[derive(Debug, Clone, Serialize)]
pub struct IndicatorRecord {
    pub r: f64,
    pub alpha: f64,
    pub n: usize,
    /// `x(r)`, the far end of `M(r)`.
    pub x_r: f64,
    pub h_report: SolveReport,
    /// `u^{Ph}(T)`.
    pub snapshot: FieldSnapshot,
    /// `||u^{Ph}(T) - 1_{M(r)}||` in `L^2(c^{-2} dx)`.
    pub misfit: f64,
    /// `misfit / ||1_{M(r)}||`.
    pub relative_misfit: f64,
    /// Outermost half-maximum crossing of the reconstructed plateau.
    pub edge: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FocusMetrics {
    /// `||u_t^b(T) - 1_slab||` in `L^2(c^{-2} dx)`.
    pub error: f64,
    /// `error / ||1_slab||`.
    pub relative_error: f64,
    /// Share of `||u_t^b(T)||^2` inside `[x(r1) - 0.02, x(r2) + 0.02]`.
    pub mass_fraction: f64,
    /// `||u^b(T)||`.
    pub value_norm: f64,
    /// `||u_t^b(T)||`.
    pub derivative_norm: f64,
    /// `||d_x u^b(T)||`.
    pub gradient_norm: f64,
    /// `||u_t^b(T)||` restricted to `[0, l0]`.
    pub origin_norm: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FocusExperiment {
    pub r1: f64,
    pub r2: f64,
    pub alpha: f64,
    pub beta: f64,
    pub n: usize,
    pub slab: Interval,
    pub h_reports: Vec<SolveReport>,
    pub a_reports: Vec<SolveReport>,
    /// `b = a(r2) - a(r1)`.
    pub b: TimeSignal,
    /// `(u^b(T), u_t^b(T))`.
    pub snapshot: FieldSnapshot,
    /// Boundary trace of `u^b` over `[0, 2T]`.
    pub trace: TimeSignal,
    pub metrics: FocusMetrics,
}

impl FocusExperiment {
    pub fn converged(&self) -> bool {
        self.h_reports
            .iter()
            .chain(&self.a_reports)
            .all(|r| r.converged)
    }
}

fn check_radius(lab: &FocusingLab, r: f64) -> Result<()> {
    if r > 0.0 && r <= lab.t() * (1.0 + 1e-12) {
        Ok(())
    } else {
        Err(CoreError::Argument(format!(
            "radius {r} must lie in (0, T = {}]",
            lab.t()
        )))
    }
}

fn check_ntd(lab: &FocusingLab, ntd: &NtdOperator) -> Result<()> {
    if (ntd.grid().horizon() - lab.grid().horizon).abs() > 1e-12 * lab.grid().horizon {
        return Err(CoreError::Configuration(format!(
            "NtD horizon {} differs from the lab horizon {}",
            ntd.grid().horizon(),
            lab.grid().horizon
        )));
    }
    Ok(())
}

/// Outermost point where `u` crosses `level` from above, interpolated
/// linearly between nodes.
pub fn plateau_edge(u: &[f64], grid: &SpatialGrid, level: f64) -> Option<f64> {
    let i = u.iter().rposition(|&v| v >= level)?;
    if i + 1 >= u.len() {
        return Some(grid.node(i));
    }
    let (a, b) = (u[i], u[i + 1]);
    let w = (a - level) / (a - b);
    Some(grid.node(i) + w * grid.dx)
}

fn weighted_norm(v: &[f64], grid: &SpatialGrid, profile: &MediumProfile) -> Result<f64> {
    Ok(volume_inner_product(v, v, grid, profile)?.max(0.0).sqrt())
}

fn restricted(v: &[f64], grid: &SpatialGrid, window: Interval) -> Vec<f64> {
    v.iter()
        .enumerate()
        .map(|(i, x)| {
            if window.contains(grid.node(i)) {
                *x
            } else {
                0.0
            }
        })
        .collect()
}

/// Solves the first normal equation for radius `r`, replays `P h` and
/// compares `u^{Ph}(T)` against `1_{M(r)}`.
pub fn reconstruct_indicator(
    lab: &FocusingLab,
    ntd: &NtdOperator,
    r: f64,
    alpha: f64,
    cfg: &RegularizationConfig,
) -> Result<IndicatorRecord> {
    check_radius(lab, r)?;
    check_ntd(lab, ntd)?;
    let t = lab.t();
    let h_report = solve_h(ntd, r, alpha, cfg)?;
    let out = lab.replay(&h_report.solution, &[t])?;
    let snapshot = out.snapshots.into_iter().next().expect("one snapshot");
    let profile = lab.profile();
    let grid = snapshot.grid;
    let x_r = profile.point_at_travel_time(r)?;
    let indicator = profile.slab_indicator(0.0, r, &grid.nodes())?;
    // include x = 0 in M(r)
    let mut indicator = indicator;
    indicator[0] = 1.0;
    let diff: Vec<f64> = snapshot
        .u
        .iter()
        .zip(&indicator)
        .map(|(a, b)| a - b)
        .collect();
    let misfit = weighted_norm(&diff, &grid, profile)?;
    let reference = weighted_norm(&indicator, &grid, profile)?;
    let edge = plateau_edge(&snapshot.u, &grid, 0.5);
    Ok(IndicatorRecord {
        r,
        alpha,
        n: ntd.grid().n(),
        x_r,
        h_report,
        snapshot,
        misfit,
        relative_misfit: misfit / reference,
        edge,
    })
}

/// Metrics of a focused snapshot against the slab `(x(r1), x(r2)]`.
pub fn focus_metrics(
    profile: &MediumProfile,
    snapshot: &FieldSnapshot,
    r1: f64,
    r2: f64,
) -> Result<FocusMetrics> {
    let grid = snapshot.grid;
    let ut = snapshot.ut()?;
    let nodes = grid.nodes();
    let slab = profile.slab(r1, r2)?;
    let indicator = profile.slab_indicator(r1, r2, &nodes)?;
    let diff: Vec<f64> = ut.iter().zip(&indicator).map(|(a, b)| a - b).collect();
    let error = weighted_norm(&diff, &grid, profile)?;
    let reference = weighted_norm(&indicator, &grid, profile)?;
    let window = Interval {
        start: slab.start - SLAB_MARGIN,
        end: slab.end + SLAB_MARGIN,
    };
    let total = volume_inner_product(ut, ut, &grid, profile)?;
    let inside = restricted(ut, &grid, window);
    let inside = volume_inner_product(&inside, &inside, &grid, profile)?;
    let origin = restricted(
        ut,
        &grid,
        Interval {
            start: 0.0,
            end: profile.bounds().l0,
        },
    );
    Ok(FocusMetrics {
        error,
        relative_error: error / reference,
        mass_fraction: if total > 0.0 { inside / total } else { 0.0 },
        value_norm: weighted_norm(&snapshot.u, &grid, profile)?,
        derivative_norm: total.sqrt(),
        gradient_norm: gradient_norm_sq(&snapshot.u, &grid).sqrt(),
        origin_norm: weighted_norm(&origin, &grid, profile)?,
    })
}

/// Focuses on the slab `M(r2) \ M(r1)` with `b = a(r2) - a(r1)` and replays
/// `b` through the forward solver.
pub fn focus_slab(
    lab: &FocusingLab,
    ntd: &NtdOperator,
    r1: f64,
    r2: f64,
    alpha: f64,
    beta: f64,
    cfg: &RegularizationConfig,
) -> Result<FocusExperiment> {
    if !(r1 < r2) {
        return Err(CoreError::Argument(format!(
            "slab radii must satisfy r1 < r2, got {r1}, {r2}"
        )));
    }
    check_radius(lab, r1)?;
    check_radius(lab, r2)?;
    check_ntd(lab, ntd)?;
    let solve_pair = |r: f64| -> Result<(SolveReport, SolveReport)> {
        let h = solve_h(ntd, r, alpha, cfg)?;
        let a = solve_a(ntd, &h.solution, beta, cfg)?;
        Ok((h, a))
    };
    let (first, second) = join(lab.execution(), || solve_pair(r1), || solve_pair(r2));
    let (h1, a1) = first?;
    let (h2, a2) = second?;
    let b = a2.solution.sub(&a1.solution)?;
    let t = lab.t();
    let out = lab.replay(&b, &[t])?;
    let snapshot = out.snapshots.into_iter().next().expect("one snapshot");
    let profile = lab.profile();
    let metrics = focus_metrics(profile, &snapshot, r1, r2)?;
    Ok(FocusExperiment {
        r1,
        r2,
        alpha,
        beta,
        n: ntd.grid().n(),
        slab: profile.slab(r1, r2)?,
        h_reports: vec![h1, h2],
        a_reports: vec![a1, a2],
        b,
        snapshot,
        trace: out.trace,
        metrics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plateau_edge_interpolates() {
        let grid = SpatialGrid {
            dx: 0.1,
            n_cells: 4,
        };
        let u = [1.0, 1.0, 0.8, 0.2, 0.0];
        let e = plateau_edge(&u, &grid, 0.5).unwrap();
        assert!((e - 0.25).abs() < 1e-12);
        assert_eq!(plateau_edge(&[0.0; 5], &grid, 0.5), None);
    }
}
