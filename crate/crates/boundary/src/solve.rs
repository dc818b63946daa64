//! The two regularized normal equations and their boundary functionals.
//!
//! First equation, for a radius `r`:
//! `(P K P + alpha) h = -P Phi_T`.
//! Second equation, for the resulting `h`:
//! `(L + beta) a = -N_Y Q d_t K P h`, posed on `Y`.
//!
//! Both are solved on the interior hat coefficients. GMRES uses the raw
//! discrete operators; the fixed-point path uses their symmetric parts unless
//! told otherwise.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{BoundaryError, Result};
use crate::gmres::{gmres, GmresConfig};
use crate::neumann::{neumann_iterate_with_norm, NeumannConfig, OmegaChoice};
use crate::ntd::NtdOperator;
use crate::operator::{norm2, BoundaryOperator, LinearOperator};
use crate::ops::{
    connecting_k, connecting_k_transpose, d_dt, greens_q, operator_l_inner,
    operator_l_inner_transpose, phi_t, project_hat_p, project_ny, project_p, second_equation_rhs,
};
use crate::signal::{TimeGrid, TimeSignal};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    #[default]
    Gmres,
    NeumannIteration,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegularizationConfig {
    pub alpha: f64,
    pub beta: f64,
    pub omega: OmegaChoice,
    pub method: SolveMethod,
    pub gmres: GmresConfig,
    pub neumann: NeumannConfig,
    /// Use the symmetric part of the operator in the fixed-point path.
    pub symmetrize: bool,
}

impl Default for RegularizationConfig {
    fn default() -> Self {
        Self {
            alpha: 1e-3,
            beta: 1.02e-4,
            omega: OmegaChoice::default(),
            method: SolveMethod::default(),
            gmres: GmresConfig::default(),
            neumann: NeumannConfig::default(),
            symmetrize: true,
        }
    }
}

impl RegularizationConfig {
    pub fn validate(&self) -> Result<()> {
        check_positive("alpha", self.alpha)?;
        check_positive("beta", self.beta)?;
        self.omega.validate()?;
        self.gmres.validate()?;
        self.neumann.validate()
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(BoundaryError::Argument(format!(
            "{name} must be positive, got {v}"
        )))
    }
}

/// `||h||_V^2` against the a-priori bound `(1 + T)^2 / alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormBound {
    pub norm_sq: f64,
    pub bound: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub solution: TimeSignal,
    pub method: SolveMethod,
    /// GMRES: true relative residual at the start and after each restart.
    /// Fixed-point iteration: step norms `||g_n - g_{n-1}||`.
    pub residual_history: Vec<f64>,
    pub outer_iterations: usize,
    pub converged: bool,
    /// Relative residual of the solved system, recomputed from the solution.
    pub relative_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate_bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub norm_bound: Option<NormBound>,
}

impl SolveReport {
    pub fn write_residual_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "iteration,residual")?;
        for (i, r) in self.residual_history.iter().enumerate() {
            writeln!(w, "{i},{r:.17e}")?;
        }
        Ok(())
    }
}

/// `P K P + alpha` on hat coefficients.
pub fn first_operator<'a>(ntd: &'a NtdOperator, r: f64, alpha: f64) -> BoundaryOperator<'a> {
    BoundaryOperator::new("PKP+alpha", ntd.grid(), move |h| {
        let ph = project_p(h, r)?;
        project_p(&connecting_k(ntd, &ph)?, r)?.axpy(alpha, h)
    })
}

/// `P (K + K^T)/2 P + alpha`.
pub fn first_operator_symmetric<'a>(
    ntd: &'a NtdOperator,
    r: f64,
    alpha: f64,
) -> BoundaryOperator<'a> {
    BoundaryOperator::new("P sym(K) P+alpha", ntd.grid(), move |h| {
        let ph = project_p(h, r)?;
        let k = connecting_k(ntd, &ph)?
            .add(&connecting_k_transpose(ntd, &ph)?)?
            .scale(0.5);
        project_p(&k, r)?.axpy(alpha, h)
    })
}

/// `L P^ + beta` on hat coefficients; components outside `Y` only see `beta`.
pub fn second_operator<'a>(ntd: &'a NtdOperator, beta: f64) -> BoundaryOperator<'a> {
    BoundaryOperator::new("L+beta", ntd.grid(), move |a| {
        let ya = project_hat_p(a);
        project_ny(&greens_q(&operator_l_inner(ntd, &ya)?))?.axpy(beta, a)
    })
}

/// `N_Y Q (B + B^T)/2 P^ + beta` with `B` the inner part of `L`.
pub fn second_operator_symmetric<'a>(ntd: &'a NtdOperator, beta: f64) -> BoundaryOperator<'a> {
    BoundaryOperator::new("sym(L)+beta", ntd.grid(), move |a| {
        let ya = project_hat_p(a);
        let b = operator_l_inner(ntd, &ya)?
            .add(&operator_l_inner_transpose(ntd, &ya)?)?
            .scale(0.5);
        project_ny(&greens_q(&b))?.axpy(beta, a)
    })
}

/// Right-hand side `-P Phi_T` of the first equation.
pub fn first_rhs(grid: TimeGrid, r: f64) -> Result<TimeSignal> {
    Ok(project_p(&phi_t(grid), r)?.scale(-1.0))
}

/// Solves `(L0 + shift) x = rhs` where `op` already includes the shift.
/// `unshifted` is the operator without it, needed by the fixed-point path.
fn run_solver(
    grid: TimeGrid,
    op: &BoundaryOperator<'_>,
    unshifted: &BoundaryOperator<'_>,
    rhs: &TimeSignal,
    shift: f64,
    cfg: &RegularizationConfig,
    y_norm: bool,
) -> Result<SolveReport> {
    let b = rhs.coefficients();
    let (x, history, outer, converged, omega, rate) = match cfg.method {
        SolveMethod::Gmres => {
            let out = gmres(op, b, &cfg.gmres)?;
            (
                out.x,
                out.residual_history,
                out.outer_iterations,
                out.converged,
                None,
                None,
            )
        }
        SolveMethod::NeumannIteration => {
            let norm = |x: &[f64]| -> f64 {
                if y_norm {
                    TimeSignal::from_coefficients(grid, x).map_or(f64::NAN, |s| s.norm_y())
                } else {
                    norm2(x)
                }
            };
            let out =
                neumann_iterate_with_norm(unshifted, b, shift, cfg.omega, &cfg.neumann, norm)?;
            (
                out.x,
                out.step_norms,
                out.iterations,
                out.converged,
                Some(out.omega),
                Some(out.rate_bound),
            )
        }
    };
    let ax = op.apply(&x);
    let b_norm = norm2(b);
    let res = norm2(&ax.iter().zip(b).map(|(p, q)| p - q).collect::<Vec<_>>());
    let relative_residual = if b_norm > 0.0 { res / b_norm } else { res };
    Ok(SolveReport {
        solution: TimeSignal::from_coefficients(grid, &x)?,
        method: cfg.method,
        residual_history: history,
        outer_iterations: outer,
        converged,
        relative_residual,
        omega,
        rate_bound: rate,
        norm_bound: None,
    })
}

/// Solves the first normal equation for the radius `r`.
///
/// Non-convergence is reported through `converged`, not as an error.
pub fn solve_h(
    ntd: &NtdOperator,
    r: f64,
    alpha: f64,
    cfg: &RegularizationConfig,
) -> Result<SolveReport> {
    check_positive("alpha", alpha)?;
    let grid = ntd.grid();
    let rhs = first_rhs(grid, r)?;
    let mut report = if cfg.method == SolveMethod::NeumannIteration && cfg.symmetrize {
        let op = first_operator_symmetric(ntd, r, alpha);
        let bare = first_operator_symmetric(ntd, r, 0.0);
        run_solver(grid, &op, &bare, &rhs, alpha, cfg, false)?
    } else {
        let op = first_operator(ntd, r, alpha);
        let bare = first_operator(ntd, r, 0.0);
        run_solver(grid, &op, &bare, &rhs, alpha, cfg, false)?
    };
    // Components outside the window are decoupled and carry zero data.
    report.solution = project_p(&report.solution, r)?;
    let norm_sq = report.solution.inner_v(&report.solution)?;
    let bound = (1.0 + grid.t()).powi(2) / alpha;
    report.norm_bound = Some(NormBound {
        norm_sq,
        bound,
        holds: norm_sq <= bound,
    });
    Ok(report)
}

/// Solves the second normal equation for a window-supported `h_alpha`.
pub fn solve_a(
    ntd: &NtdOperator,
    h_alpha: &TimeSignal,
    beta: f64,
    cfg: &RegularizationConfig,
) -> Result<SolveReport> {
    check_positive("beta", beta)?;
    let grid = ntd.grid();
    grid.ensure_same(&h_alpha.grid())?;
    let rhs = second_equation_rhs(ntd, h_alpha)?;
    let mut report = if cfg.method == SolveMethod::NeumannIteration && cfg.symmetrize {
        let op = second_operator_symmetric(ntd, beta);
        let bare = second_operator_symmetric(ntd, 0.0);
        run_solver(grid, &op, &bare, &rhs, beta, cfg, true)?
    } else {
        let op = second_operator(ntd, beta);
        let bare = second_operator(ntd, 0.0);
        run_solver(grid, &op, &bare, &rhs, beta, cfg, true)?
    };
    report.solution = project_hat_p(&report.solution);
    Ok(report)
}

/// `2<Ph, Phi_T> + <Ph, K P h> + alpha <h, h>`: the first functional without
/// its constant term `<1, 1>`, which is not available from boundary data.
pub fn functional_f1(ntd: &NtdOperator, h: &TimeSignal, alpha: f64, r: f64) -> Result<f64> {
    let grid = ntd.grid();
    grid.ensure_same(&h.grid())?;
    let ph = project_p(h, r)?;
    let kph = connecting_k(ntd, &ph)?;
    Ok(2.0 * ph.inner_v(&phi_t(grid))? + ph.inner_v(&kph)? + alpha * h.inner_v(h)?)
}

/// Boundary expression of `||u_t^a(T) - u^h(T)||^2 + ||u^a(T)||_{H^1}^2 + beta ||a||_Y^2`
/// for a window-supported `h`.
pub fn functional_f2(ntd: &NtdOperator, a: &TimeSignal, beta: f64, h: &TimeSignal) -> Result<f64> {
    let grid = ntd.grid();
    grid.ensure_same(&a.grid())?;
    grid.ensure_same(&h.grid())?;
    let da = d_dt(a);
    let kh = connecting_k(ntd, h)?;
    let kda = connecting_k(ntd, &da)?;
    let ka = connecting_k(ntd, a)?;
    let energy = -2.0 * a.inner_v(&project_hat_p(&d_dt(&ntd.apply(a)?)))?;
    Ok(
        h.inner_v(&kh)? - 2.0 * h.inner_v(&kda)?
            + energy
            + a.inner_v(&ka)?
            + beta * a.inner_y(a)?,
    )
}

/// Per-`N` regularization `value(N) = value_0 (N_0 / N)^p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegularizationSchedule {
    pub alpha0: f64,
    pub beta0: f64,
    pub n0: usize,
    pub p: f64,
}

impl Default for RegularizationSchedule {
    fn default() -> Self {
        Self {
            alpha0: 1e-3,
            beta0: 1.02e-4,
            n0: 2048,
            p: 0.0,
        }
    }
}

impl RegularizationSchedule {
    pub fn at(&self, n: usize) -> (f64, f64) {
        let s = (self.n0 as f64 / n as f64).powf(self.p);
        (self.alpha0 * s, self.beta0 * s)
    }
}
