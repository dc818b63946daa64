use serde::Serialize;
use wavefocus_boundary::par::map_slice;
use wavefocus_boundary::{RegularizationConfig, RegularizationSchedule};

use super::{focus_slab, FocusingLab};
use crate::cache::KernelCache;
use crate::error::{CoreError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub n: usize,
    pub alpha: f64,
    pub beta: f64,
    pub error: f64,
    pub relative_error: f64,
    pub mass_fraction: f64,
    pub origin_norm: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepFailure {
    pub n: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub r1: f64,
    pub r2: f64,
    pub rows: Vec<SweepRow>,
    pub failures: Vec<SweepFailure>,
    /// Least-squares slope of `ln error` against `ln N`.
    pub slope: Option<f64>,
}

impl SweepTable {
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(
            w,
            "n,alpha,beta,error,relative_error,mass_fraction,origin_norm,converged"
        )?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{:e},{:e},{:e},{:e},{:e},{:e},{}",
                r.n,
                r.alpha,
                r.beta,
                r.error,
                r.relative_error,
                r.mass_fraction,
                r.origin_norm,
                r.converged
            )?;
        }
        Ok(())
    }
}

/// Least-squares slope of `ln y` against `ln x`; `None` with fewer than two
/// distinct abscissae or any non-positive value.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
        return None;
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let m = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / m;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if !(sxx > 1e-24) {
        return None;
    }
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

/// Focuses on the slab `(x(r1), x(r2)]` for each `N` with the scheduled
/// regularization. Failed points are recorded and the remaining rows kept.
pub fn convergence_sweep(
    lab: &FocusingLab,
    r1: f64,
    r2: f64,
    n_list: &[usize],
    schedule: &RegularizationSchedule,
    cfg: &RegularizationConfig,
    cache: Option<&KernelCache>,
) -> Result<SweepTable> {
    if n_list.is_empty() {
        return Err(CoreError::Argument("empty N list".into()));
    }
    if n_list.windows(2).any(|w| w[1] < w[0]) {
        return Err(CoreError::Argument(format!(
            "N list must be ascending, got {n_list:?}"
        )));
    }
    let point = |&n: &usize| -> Result<SweepRow> {
        let ntd = match cache {
            Some(c) => lab.cached_ntd(c, n, false)?.0,
            None => lab.build_ntd(n)?,
        };
        let (alpha, beta) = schedule.at(n);
        let e = focus_slab(lab, &ntd, r1, r2, alpha, beta, cfg)?;
        Ok(SweepRow {
            n,
            alpha,
            beta,
            error: e.metrics.error,
            relative_error: e.metrics.relative_error,
            mass_fraction: e.metrics.mass_fraction,
            origin_norm: e.metrics.origin_norm,
            converged: e.converged(),
        })
    };
    let results = map_slice(lab.execution(), n_list, point);
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (&n, r) in n_list.iter().zip(results) {
        match r {
            Ok(row) => rows.push(row),
            Err(e) => failures.push(SweepFailure {
                n,
                reason: e.to_string(),
            }),
        }
    }
    let points: Vec<(f64, f64)> = rows.iter().map(|r| (r.n as f64, r.error)).collect();
    Ok(SweepTable {
        r1,
        r2,
        slope: loglog_slope(&points),
        rows,
        failures,
    })
}
