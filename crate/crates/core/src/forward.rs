//! Leapfrog solver for `u_tt = c(x)^2 u_xx` on `[0, x_max]` with a Neumann
//! source `u_x(0, t) = f(t)`, zero initial data and a homogeneous Dirichlet
//! condition at `x_max`, plus the volume integrals used as oracles.

use serde::{Deserialize, Serialize};
use wavefocus_boundary::{NtdOperator, TimeGrid, TimeSignal};

use crate::error::{CoreError, Result};
use crate::medium::MediumProfile;

const TIME_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverGrid {
    pub n_x: usize,
    pub n_t: usize,
    pub horizon: f64,
    pub x_max: f64,
    #[serde(default = "default_cfl")]
    pub cfl_factor: f64,
}

fn default_cfl() -> f64 {
    0.5
}

impl SolverGrid {
    pub fn new(n_x: usize, n_t: usize, horizon: f64, x_max: f64) -> Self {
        Self {
            n_x,
            n_t,
            horizon,
            x_max,
            cfl_factor: default_cfl(),
        }
    }

    /// `2^13` spatial and `2^15` temporal cells over `[0, 2T]`.
    pub fn reference(profile: &MediumProfile, t: f64) -> Self {
        Self::new(1 << 13, 1 << 15, 2.0 * t, profile.x_max())
    }

    /// Same extent, `factor` times as many cells in space and time.
    pub fn refined(&self, factor: usize) -> Self {
        Self {
            n_x: self.n_x * factor,
            n_t: self.n_t * factor,
            ..*self
        }
    }

    pub fn dx(&self) -> f64 {
        self.x_max / self.n_x as f64
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.n_t as f64
    }

    pub fn spatial(&self) -> SpatialGrid {
        SpatialGrid {
            dx: self.dx(),
            n_cells: self.n_x,
        }
    }

    /// CFL and no-reflection checks against a profile.
    pub fn validate(&self, profile: &MediumProfile) -> Result<()> {
        if self.n_x < 2 || self.n_t < 2 {
            return Err(CoreError::Configuration(format!(
                "solver grid needs at least 2 cells in space and time, got n_x={}, n_t={}",
                self.n_x, self.n_t
            )));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(CoreError::Configuration(format!(
                "horizon must be positive, got {}",
                self.horizon
            )));
        }
        if !(self.cfl_factor > 0.0 && self.cfl_factor < 1.0) {
            return Err(CoreError::Configuration(format!(
                "cfl_factor must lie in (0, 1), got {}",
                self.cfl_factor
            )));
        }
        if (self.x_max - profile.x_max()).abs() > 1e-12 * profile.x_max() {
            return Err(CoreError::Configuration(format!(
                "solver extent {} differs from profile extent {}",
                self.x_max,
                profile.x_max()
            )));
        }
        let cfl = profile.max_speed() * self.dt() / self.dx();
        if cfl > self.cfl_factor {
            return Err(CoreError::Configuration(format!(
                "CFL number {cfl:.4} exceeds {}",
                self.cfl_factor
            )));
        }
        let half = 0.5 * self.horizon;
        if profile.total_travel_time() <= half {
            return Err(CoreError::Configuration(format!(
                "domain travel time {:.4} does not exceed T = {half}; far-end reflections would reach the boundary",
                profile.total_travel_time()
            )));
        }
        Ok(())
    }
}

/// Uniform nodes `x_i = i dx`, `i = 0..=n_cells`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialGrid {
    pub dx: f64,
    pub n_cells: usize,
}

impl SpatialGrid {
    pub fn len(&self) -> usize {
        self.n_cells + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn node(&self, i: usize) -> f64 {
        i as f64 * self.dx
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.node(i)).collect()
    }

    pub fn weight(&self, i: usize) -> f64 {
        if i == 0 || i == self.n_cells {
            0.5 * self.dx
        } else {
            self.dx
        }
    }
}

/// `(u, u_t)` on the spatial grid at one time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSnapshot {
    pub time: f64,
    pub grid: SpatialGrid,
    pub u: Vec<f64>,
    pub ut: Option<Vec<f64>>,
}

impl FieldSnapshot {
    pub fn ut(&self) -> Result<&[f64]> {
        self.ut
            .as_deref()
            .ok_or_else(|| CoreError::Argument("snapshot carries no time derivative".into()))
    }

    /// Linear combination `a * self + b * other` on the same grid and time.
    pub fn combine(&self, a: f64, other: &FieldSnapshot, b: f64) -> Result<FieldSnapshot> {
        if self.grid != other.grid {
            return Err(CoreError::Argument("snapshot grids differ".into()));
        }
        let lin = |x: &[f64], y: &[f64]| {
            x.iter()
                .zip(y)
                .map(|(p, q)| a * p + b * q)
                .collect::<Vec<_>>()
        };
        let ut = match (&self.ut, &other.ut) {
            (Some(x), Some(y)) => Some(lin(x, y)),
            _ => None,
        };
        Ok(FieldSnapshot {
            time: self.time,
            grid: self.grid,
            u: lin(&self.u, &other.u),
            ut,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardOutput {
    pub trace: TimeSignal,
    pub snapshots: Vec<FieldSnapshot>,
}

struct SnapshotPlan {
    index: usize,
    level: usize,
    theta: f64,
}

/// Solves the Neumann problem for the source `f` and records the boundary
/// trace on `f`'s node grid plus snapshots at the requested times.
pub fn solve_neumann(
    profile: &MediumProfile,
    f: &TimeSignal,
    grid: &SolverGrid,
    snapshot_times: &[f64],
) -> Result<ForwardOutput> {
    grid.validate(profile)?;
    let tgrid = f.grid();
    if (tgrid.horizon() - grid.horizon).abs() > 1e-12 * grid.horizon {
        return Err(CoreError::Configuration(format!(
            "signal horizon {} differs from solver horizon {}",
            tgrid.horizon(),
            grid.horizon
        )));
    }
    let dt = grid.dt();
    let dx = grid.dx();
    let n_x = grid.n_x;
    let n_t = grid.n_t;

    let mut plans = Vec::with_capacity(snapshot_times.len());
    for (index, &s) in snapshot_times.iter().enumerate() {
        if !(s >= -TIME_EPS && s <= grid.horizon * (1.0 + TIME_EPS)) {
            return Err(CoreError::Argument(format!(
                "snapshot time {s} outside [0, {}]",
                grid.horizon
            )));
        }
        let pos = (s / dt).max(0.0);
        let mut level = (pos + TIME_EPS).floor() as usize;
        let mut theta = pos - level as f64;
        if theta < TIME_EPS {
            theta = 0.0;
        }
        if level >= n_t {
            level = n_t;
            theta = 0.0;
        }
        plans.push(SnapshotPlan {
            index,
            level,
            theta,
        });
    }
    // Centered u_t at level m needs level m + 1; blending needs m + 2.
    let last_level = plans
        .iter()
        .map(|p| p.level + if p.theta > 0.0 { 2 } else { 1 })
        .max()
        .unwrap_or(0)
        .max(n_t);

    let lambda2: Vec<f64> = (0..=n_x)
        .map(|i| (profile.speed(i as f64 * dx) * dt / dx).powi(2))
        .collect();
    let source = |n: usize| f.eval(n as f64 * dt);

    let mut prev = vec![0.0; n_x + 1];
    let mut cur = vec![0.0; n_x + 1];
    let mut next = vec![0.0; n_x + 1];
    let mut trace_steps = Vec::with_capacity(n_t + 1);
    trace_steps.push(0.0);

    // Centered data captured per level: (u, u_t) indexed by plan.
    let mut captured: Vec<Option<(Vec<f64>, Vec<f64>)>> = vec![None; plans.len()];
    let mut captured_hi: Vec<Option<(Vec<f64>, Vec<f64>)>> = vec![None; plans.len()];

    // Level 0 snapshots: zero field, zero velocity.
    for p in &plans {
        if p.level == 0 {
            captured[p.index] = Some((vec![0.0; n_x + 1], vec![0.0; n_x + 1]));
        }
    }

    let laplace_step = |u: &[f64], i: usize, g: f64| -> f64 {
        if i == 0 {
            2.0 * u[1] - 2.0 * u[0] - 2.0 * dx * g
        } else {
            u[i + 1] - 2.0 * u[i] + u[i - 1]
        }
    };

    // Taylor start: u^1 = dt^2/2 c^2 u_xx(0); only the ghost-node source is nonzero.
    cur[0] = 0.5 * lambda2[0] * laplace_step(&prev, 0, source(0));
    trace_steps.push(cur[0]);

    for n in 1..last_level {
        // computing level n + 1 from n and n - 1
        let g = source(n);
        let active = (n + 3).min(n_x);
        for i in 0..active {
            next[i] = 2.0 * cur[i] - prev[i] + lambda2[i] * laplace_step(&cur, i, g);
        }
        next[n_x] = 0.0;

        for p in &plans {
            if p.level == n {
                let ut: Vec<f64> = next
                    .iter()
                    .zip(&prev)
                    .map(|(a, b)| (a - b) / (2.0 * dt))
                    .collect();
                captured[p.index] = Some((cur.clone(), ut));
            }
            if p.theta > 0.0 && p.level + 1 == n {
                let ut: Vec<f64> = next
                    .iter()
                    .zip(&prev)
                    .map(|(a, b)| (a - b) / (2.0 * dt))
                    .collect();
                captured_hi[p.index] = Some((cur.clone(), ut));
            }
        }

        std::mem::swap(&mut prev, &mut cur);
        std::mem::swap(&mut cur, &mut next);
        if n < n_t {
            trace_steps.push(cur[0]);
        }
    }

    let spatial = grid.spatial();
    let snapshots = plans
        .iter()
        .map(|p| {
            let (u0, ut0) = captured[p.index].take().expect("snapshot level reached");
            let (u, ut) = if p.theta > 0.0 {
                let (u1, ut1) = captured_hi[p.index].take().expect("snapshot level reached");
                let blend = |a: &[f64], b: &[f64]| {
                    a.iter()
                        .zip(b)
                        .map(|(x, y)| (1.0 - p.theta) * x + p.theta * y)
                        .collect::<Vec<_>>()
                };
                (blend(&u0, &u1), blend(&ut0, &ut1))
            } else {
                (u0, ut0)
            };
            FieldSnapshot {
                time: snapshot_times[p.index],
                grid: spatial,
                u,
                ut: Some(ut),
            }
        })
        .collect();

    let trace = TimeSignal::sample(tgrid, |t| {
        let pos = t / dt;
        let i = (pos.floor() as usize).min(n_t - 1);
        let w = pos - i as f64;
        (1.0 - w) * trace_steps[i] + w * trace_steps[i + 1]
    });
    Ok(ForwardOutput { trace, snapshots })
}

/// Builds the discrete NtD map on `N` hat intervals over `[0, 2T]` with
/// `2T = grid.horizon` from the response to the first hat.
pub fn build_ntd(profile: &MediumProfile, n: usize, grid: &SolverGrid) -> Result<NtdOperator> {
    let tgrid = TimeGrid::new(n, 0.5 * grid.horizon)?;
    let h = tgrid.step();
    if grid.dt() > 0.25 * h * (1.0 + 1e-12) {
        return Err(CoreError::Configuration(format!(
            "solver time step {} does not resolve the hat width (need n_t >= {})",
            grid.dt(),
            8 * n
        )));
    }
    if grid.dx() > 0.5 * profile.min_speed() * h * (1.0 + 1e-12) {
        return Err(CoreError::Configuration(format!(
            "solver space step {} does not resolve the hat wavelength {}",
            grid.dx(),
            profile.min_speed() * h
        )));
    }
    let phi = TimeSignal::hat(tgrid, 1)?;
    let out = solve_neumann(profile, &phi, grid, &[])?;
    Ok(NtdOperator::from_kernel(out.trace)?)
}

/// `int a b c^{-2} dx` by the trapezoid rule.
pub fn volume_inner_product(
    a: &[f64],
    b: &[f64],
    grid: &SpatialGrid,
    profile: &MediumProfile,
) -> Result<f64> {
    if a.len() != grid.len() || b.len() != grid.len() {
        return Err(CoreError::Argument(format!(
            "grid functions of length {} and {} on a grid of {} nodes",
            a.len(),
            b.len(),
            grid.len()
        )));
    }
    Ok((0..grid.len())
        .map(|i| grid.weight(i) * a[i] * b[i] / profile.speed(grid.node(i)).powi(2))
        .sum())
}

/// `int (u_t^2 c^{-2} + u_x^2) dx`, with `u_x` taken cell by cell.
pub fn field_energy(s: &FieldSnapshot, profile: &MediumProfile) -> Result<f64> {
    let ut = s.ut()?;
    let kinetic = volume_inner_product(ut, ut, &s.grid, profile)?;
    let dx = s.grid.dx;
    let strain: f64 = s.u.windows(2).map(|w| (w[1] - w[0]).powi(2) / dx).sum();
    Ok(kinetic + strain)
}

/// `int u_x^2 dx`.
pub fn gradient_norm_sq(u: &[f64], grid: &SpatialGrid) -> f64 {
    u.windows(2).map(|w| (w[1] - w[0]).powi(2) / grid.dx).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_setup() -> (MediumProfile, SolverGrid) {
        let p = MediumProfile::uniform(2.2, 1024).unwrap();
        let g = SolverGrid::new(2048, 8192, 4.0, 2.2);
        (p, g)
    }

    #[test]
    fn zero_source_gives_zero_field() {
        let (p, g) = unit_setup();
        let f = TimeSignal::zeros(TimeGrid::new(64, 2.0).unwrap());
        let out = solve_neumann(&p, &f, &g, &[2.0, 4.0]).unwrap();
        assert_eq!(out.trace.max_abs(), 0.0);
        for s in &out.snapshots {
            assert!(s.u.iter().chain(s.ut().unwrap()).all(|v| *v == 0.0));
        }
    }

    #[test]
    fn unit_speed_trace_is_minus_running_integral() {
        let (p, g) = unit_setup();
        let tg = TimeGrid::new(128, 2.0).unwrap();
        let f = TimeSignal::interpolate_pn(tg, |t| (1.5 * t).sin() * t);
        let out = solve_neumann(&p, &f, &g, &[]).unwrap();
        // -int_0^t s sin(1.5 s) ds
        let exact = |t: f64| -((1.5 * t).sin() / 2.25 - t * (1.5 * t).cos() / 1.5);
        // the interpolant is cut to zero on the last cell, so stop before it
        for (t, v) in tg.nodes().zip(out.trace.values()).take(tg.len() - 1) {
            assert!((v - exact(t)).abs() < 5e-3, "t={t}: {v} vs {}", exact(t));
        }
    }

    #[test]
    fn pulse_travels_at_unit_speed() {
        let (p, g) = unit_setup();
        let tg = TimeGrid::new(256, 2.0).unwrap();
        let t0 = 0.8;
        let f = TimeSignal::interpolate_pn(tg, |t| (-((t - t0) / 0.05).powi(2)).exp());
        let out = solve_neumann(&p, &f, &g, &[2.0]).unwrap();
        let s = &out.snapshots[0];
        // u = -int_0^{T-x} f: the steepest point of u sits at x = T - t0
        let grad: Vec<f64> = s.u.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
        let (imax, _) = grad
            .iter()
            .enumerate()
            .fold((0, 0.0), |m, (i, v)| if *v > m.1 { (i, *v) } else { m });
        let x = (imax as f64 + 0.5) * s.grid.dx;
        assert!((x - (2.0 - t0)).abs() < 0.01, "peak at {x}");
    }

    #[test]
    fn snapshot_between_levels_is_blended() {
        let (p, g) = unit_setup();
        let tg = TimeGrid::new(64, 2.0).unwrap();
        let f = TimeSignal::interpolate_pn(tg, |t| t * (4.0 - t));
        let dt = g.dt();
        let out = solve_neumann(&p, &f, &g, &[1.0, 1.0 + 0.5 * dt, 1.0 + dt]).unwrap();
        let (a, m, b) = (&out.snapshots[0], &out.snapshots[1], &out.snapshots[2]);
        for i in 0..a.u.len() {
            assert!((m.u[i] - 0.5 * (a.u[i] + b.u[i])).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_bad_grids_and_times() {
        let (p, g) = unit_setup();
        let f = TimeSignal::zeros(TimeGrid::new(64, 2.0).unwrap());
        assert!(solve_neumann(&p, &f, &g, &[4.5]).is_err());
        let coarse_t = SolverGrid::new(2048, 1024, 4.0, 2.2);
        assert!(matches!(
            solve_neumann(&p, &f, &coarse_t, &[]),
            Err(CoreError::Configuration(_))
        ));
        let short = MediumProfile::uniform(1.5, 512).unwrap();
        let g_short = SolverGrid::new(1024, 8192, 4.0, 1.5);
        assert!(solve_neumann(&short, &f, &g_short, &[]).is_err());
        assert!(build_ntd(&p, 2048, &g).is_err());
    }

    #[test]
    fn volume_integrals_on_simple_functions() {
        let p = MediumProfile::uniform(2.0, 200).unwrap();
        let grid = SpatialGrid {
            dx: 0.01,
            n_cells: 200,
        };
        let zero = vec![0.0; 201];
        let ind: Vec<f64> = (0..=200)
            .map(|i| if i <= 100 { 1.0 } else { 0.0 })
            .collect();
        assert_eq!(volume_inner_product(&zero, &ind, &grid, &p).unwrap(), 0.0);
        assert!((volume_inner_product(&ind, &ind, &grid, &p).unwrap() - 1.0).abs() < 0.006);
        let snap = FieldSnapshot {
            time: 0.0,
            grid,
            u: zero.clone(),
            ut: Some(zero),
        };
        assert_eq!(field_energy(&snap, &p).unwrap(), 0.0);
        let no_ut = FieldSnapshot { ut: None, ..snap };
        assert!(field_energy(&no_ut, &p).is_err());
    }
}
