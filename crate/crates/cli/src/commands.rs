use std::path::{Path, PathBuf};

use log::info;
use serde::Serialize;
use wavefocus_boundary::ops::d_dt;
use wavefocus_boundary::{Execution, NtdOperator, SolveMethod, SolveReport, TimeSignal};
use wavefocus_core::lab::{
    convergence_sweep, focus_slab, observation_time, recover_coordinate, slab_volume_from_boundary,
    verify_identity_batch, FocusExperiment, FocusMetrics, IdentityName, ObservationTime,
    SweepFailure, TrialSet,
};
use wavefocus_core::{CacheStatus, FocusingLab, Interval, KernelCache, SolverGrid};

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::output::RunDir;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    BuildNtd,
    Verify,
    Focus,
    Sweep,
    Recover,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::BuildNtd => "build-ntd",
            Command::Verify => "verify",
            Command::Focus => "focus",
            Command::Sweep => "sweep",
            Command::Recover => "recover",
        }
    }
}

/// Everything a command needs besides the config.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub out: PathBuf,
    pub cache_dir: PathBuf,
    pub execution: Execution,
    pub force_rebuild: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub run_dir: PathBuf,
    /// False when a solver did not converge or a sweep point failed.
    pub complete: bool,
}

pub fn run(command: Command, config: &RunConfig, ctx: &RunContext) -> Result<Outcome> {
    config.validate()?;
    if matches!(command, Command::Focus | Command::Sweep | Command::Recover) {
        config.radii()?;
    }
    let profile = config.resolve_profile()?;
    let grid = config.resolve_grid(&profile);
    let lab = FocusingLab::new(profile, grid)
        .map_err(|e| CliError::config("/solver", e.to_string()))?
        .with_execution(ctx.execution);
    let mut dir = RunDir::create(&ctx.out, command.name(), config)?;
    let cache = KernelCache::new(&ctx.cache_dir);
    info!("{} -> {}", command.name(), dir.path().display());
    let (report, complete) = match command {
        Command::BuildNtd => build_ntd(&lab, config, &cache, ctx, &mut dir)?,
        Command::Verify => verify(&lab, config, &cache, ctx, &mut dir)?,
        Command::Focus => focus(&lab, config, &cache, ctx, &mut dir)?,
        Command::Sweep => sweep(&lab, config, &cache, &mut dir)?,
        Command::Recover => recover(&lab, config, &cache, ctx, &mut dir)?,
    };
    let run_dir = dir.finish(config, lab.profile().content_hash(), &report)?;
    Ok(Outcome { run_dir, complete })
}

/// A command's `report.json` and whether every solve converged.
type CommandResult = Result<(serde_json::Value, bool)>;

fn done<T: Serialize>(report: &T, complete: bool) -> CommandResult {
    Ok((serde_json::to_value(report)?, complete))
}

fn kernel(
    lab: &FocusingLab,
    cache: &KernelCache,
    n: usize,
    force: bool,
) -> Result<(NtdOperator, CacheStatus)> {
    let (ntd, status) = lab.cached_ntd(cache, n, force)?;
    info!("NtD kernel N = {n}: {status:?}");
    Ok((ntd, status))
}

#[derive(Serialize)]
struct SeriesRow {
    t: f64,
    value: f64,
}

fn series(s: &TimeSignal) -> impl Iterator<Item = SeriesRow> + '_ {
    let g = s.grid();
    s.values()
        .iter()
        .enumerate()
        .map(move |(j, &value)| SeriesRow {
            t: g.node(j),
            value,
        })
}

#[derive(Serialize)]
struct BuildReport {
    n: usize,
    grid: SolverGrid,
    cache_status: CacheStatus,
    cache_key: String,
    kernel_len: usize,
}

fn build_ntd(
    lab: &FocusingLab,
    config: &RunConfig,
    cache: &KernelCache,
    ctx: &RunContext,
    dir: &mut RunDir,
) -> CommandResult {
    let (ntd, status) = kernel(lab, cache, config.n, ctx.force_rebuild)?;
    dir.csv("kernel.csv", series(ntd.kernel()))?;
    done(
        &BuildReport {
            n: config.n,
            grid: *lab.grid(),
            cache_status: status,
            cache_key: KernelCache::key(lab.profile(), config.n, lab.grid()),
            kernel_len: ntd.kernel().values().len(),
        },
        true,
    )
}

#[derive(Serialize)]
struct IdentityRow {
    identity: IdentityName,
    trial: usize,
    lhs: f64,
    rhs: f64,
    relative_error: f64,
}

#[derive(Serialize)]
struct IdentitySummary {
    identity: IdentityName,
    max_relative_error: f64,
    mean_relative_error: f64,
}

#[derive(Serialize)]
struct VerifyReport {
    n: usize,
    n_x: usize,
    n_t: usize,
    trials: usize,
    seed: u64,
    cache_status: CacheStatus,
    identities: Vec<IdentitySummary>,
}

fn verify(
    lab: &FocusingLab,
    config: &RunConfig,
    cache: &KernelCache,
    ctx: &RunContext,
    dir: &mut RunDir,
) -> CommandResult {
    let (ntd, status) = kernel(lab, cache, config.n, ctx.force_rebuild)?;
    let v = &config.verify;
    let trials = TrialSet::generate(v.trials, v.seed).sample(ntd.grid());
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for &name in &v.identities {
        info!("verifying {name} on {} trials", trials.len());
        let reports = verify_identity_batch(name, lab, &ntd, &trials)?;
        let errs: Vec<f64> = reports.iter().map(|r| r.relative_error).collect();
        summaries.push(IdentitySummary {
            identity: name,
            max_relative_error: errs.iter().cloned().fold(0.0, f64::max),
            mean_relative_error: errs.iter().sum::<f64>() / errs.len() as f64,
        });
        rows.extend(reports.iter().enumerate().map(|(trial, r)| IdentityRow {
            identity: name,
            trial,
            lhs: r.lhs,
            rhs: r.rhs,
            relative_error: r.relative_error,
        }));
    }
    dir.csv("identities.csv", rows)?;
    done(
        &VerifyReport {
            n: config.n,
            n_x: lab.grid().n_x,
            n_t: lab.grid().n_t,
            trials: v.trials,
            seed: v.seed,
            cache_status: status,
            identities: summaries,
        },
        true,
    )
}

#[derive(Serialize)]
struct SolveSummary {
    solve: String,
    method: SolveMethod,
    outer_iterations: usize,
    converged: bool,
    relative_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    omega: Option<f64>,
}

#[derive(Serialize)]
struct ResidualRow<'a> {
    solve: &'a str,
    iteration: usize,
    residual: f64,
}

#[derive(Serialize)]
struct SnapshotRow {
    x: f64,
    u: f64,
    ut: f64,
    indicator: f64,
}

fn labelled(e: &FocusExperiment) -> Vec<(String, &SolveReport)> {
    let radii = [e.r1, e.r2];
    let h = e
        .h_reports
        .iter()
        .zip(radii)
        .map(|(r, x)| (format!("h(r={x})"), r));
    let a = e
        .a_reports
        .iter()
        .zip(radii)
        .map(|(r, x)| (format!("a(r={x})"), r));
    h.chain(a).collect()
}

/// Writes the series shared by focus and recover and returns the solve summaries.
fn write_focus(
    lab: &FocusingLab,
    e: &FocusExperiment,
    dir: &mut RunDir,
) -> Result<Vec<SolveSummary>> {
    let s = &e.snapshot;
    let nodes = s.grid.nodes();
    let indicator = lab.profile().slab_indicator(e.r1, e.r2, &nodes)?;
    let ut = s.ut()?;
    dir.csv(
        "snapshot.csv",
        (0..nodes.len()).map(|i| SnapshotRow {
            x: nodes[i],
            u: s.u[i],
            ut: ut[i],
            indicator: indicator[i],
        }),
    )?;
    dir.csv("trace.csv", series(&e.trace))?;
    dir.csv("source_b.csv", series(&e.b))?;
    let solves = labelled(e);
    let rows = solves.iter().flat_map(|(name, r)| {
        r.residual_history
            .iter()
            .enumerate()
            .map(move |(iteration, &residual)| ResidualRow {
                solve: name,
                iteration,
                residual,
            })
    });
    dir.csv("residuals.csv", rows.collect::<Vec<_>>())?;
    Ok(solves
        .into_iter()
        .map(|(solve, r)| SolveSummary {
            solve,
            method: r.method,
            outer_iterations: r.outer_iterations,
            converged: r.converged,
            relative_residual: r.relative_residual,
            omega: r.omega,
        })
        .collect())
}

#[derive(Serialize)]
struct FocusReport {
    r1: f64,
    r2: f64,
    alpha: f64,
    beta: f64,
    n: usize,
    slab: Interval,
    converged: bool,
    metrics: FocusMetrics,
    solves: Vec<SolveSummary>,
}

fn run_focus(
    lab: &FocusingLab,
    config: &RunConfig,
    cache: &KernelCache,
    ctx: &RunContext,
) -> Result<(FocusExperiment, NtdOperator)> {
    let (r1, r2) = config.radii()?;
    let (ntd, _) = kernel(lab, cache, config.n, ctx.force_rebuild)?;
    let reg = &config.regularization;
    let e = focus_slab(lab, &ntd, r1, r2, reg.alpha, reg.beta, reg)?;
    Ok((e, ntd))
}

fn focus_report(e: &FocusExperiment, solves: Vec<SolveSummary>) -> FocusReport {
    FocusReport {
        r1: e.r1,
        r2: e.r2,
        alpha: e.alpha,
        beta: e.beta,
        n: e.n,
        slab: e.slab,
        converged: e.converged(),
        metrics: e.metrics,
        solves,
    }
}

fn focus(
    lab: &FocusingLab,
    config: &RunConfig,
    cache: &KernelCache,
    ctx: &RunContext,
    dir: &mut RunDir,
) -> CommandResult {
    let (e, _) = run_focus(lab, config, cache, ctx)?;
    let solves = write_focus(lab, &e, dir)?;
    done(&focus_report(&e, solves), e.converged())
}

#[derive(Serialize)]
struct SweepReport {
    r1: f64,
    r2: f64,
    /// `null` when fewer than two points succeeded.
    slope: Option<f64>,
    rows: usize,
    failures: Vec<SweepFailure>,
    all_converged: bool,
}

fn sweep(
    lab: &FocusingLab,
    config: &RunConfig,
    cache: &KernelCache,
    dir: &mut RunDir,
) -> CommandResult {
    let (r1, r2) = config.radii()?;
    let s = &config.sweep;
    let table = convergence_sweep(
        lab,
        r1,
        r2,
        &s.n_list,
        &s.schedule,
        &config.regularization,
        Some(cache),
    )?;
    dir.csv("sweep.csv", &table.rows)?;
    let all_converged = table.rows.iter().all(|r| r.converged);
    let complete = all_converged && table.failures.is_empty();
    done(
        &SweepReport {
            r1,
            r2,
            slope: table.slope,
            rows: table.rows.len(),
            failures: table.failures,
            all_converged,
        },
        complete,
    )
}

#[derive(Serialize)]
struct Estimate {
    boundary: f64,
    reference: f64,
    error: f64,
}

#[derive(Serialize)]
struct RecoverReport {
    focus: FocusReport,
    /// Boundary-only volume against the weighted slab length.
    volume: Estimate,
    /// Same volume integrated from the replayed field.
    volume_from_field: f64,
    /// Boundary-only centroid against the weighted slab centroid.
    coordinate: Estimate,
    /// Reported first arrival, then the sensitivity thresholds.
    observation: Vec<ObservationTime>,
}

fn recover(
    lab: &FocusingLab,
    config: &RunConfig,
    cache: &KernelCache,
    ctx: &RunContext,
    dir: &mut RunDir,
) -> CommandResult {
    let (e, ntd) = run_focus(lab, config, cache, ctx)?;
    let solves = write_focus(lab, &e, dir)?;
    let p = lab.profile();
    let vol = slab_volume_from_boundary(&e.b)?;
    let exact = p.weighted_length(e.slab.start, e.slab.end);
    let ones = vec![1.0; e.snapshot.grid.len()];
    let field = wavefocus_core::volume_inner_product(e.snapshot.ut()?, &ones, &e.snapshot.grid, p)?;
    let coord = recover_coordinate(&d_dt(&e.b), &ntd)?;
    let centroid = p.weighted_centroid(e.slab.start, e.slab.end);
    let thresholds =
        std::iter::once(config.recover.threshold).chain(config.recover.sensitivity.iter().copied());
    let observation = thresholds
        .map(|q| observation_time(p, &e.trace, coord.coordinate, q))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let complete = e.converged();
    done(
        &RecoverReport {
            focus: focus_report(&e, solves),
            volume: Estimate {
                boundary: vol.volume,
                reference: exact,
                error: (vol.volume - exact).abs() / exact,
            },
            volume_from_field: field,
            coordinate: Estimate {
                boundary: coord.coordinate,
                reference: centroid,
                error: (coord.coordinate - centroid).abs(),
            },
            observation,
        },
        complete,
    )
}

/// Output directory by precedence: flag, environment, config, `runs`.
pub fn resolve_out(flag: Option<&Path>, env: Option<&str>, config: &RunConfig) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| env.filter(|s| !s.is_empty()).map(PathBuf::from))
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("runs"))
}
