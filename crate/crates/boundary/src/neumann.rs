//! Fixed-point (Neumann series) solver for `(L + alpha) g = rhs` with `L`
//! self-adjoint and nonnegative.
//!
//! With `S = (1 - alpha/omega) I - L/omega` the iteration
//! `g_n = rhs/omega + S g_{n-1}` converges geometrically whenever
//! `omega > (||L|| + alpha) / 2`; the automatic choice is
//! `omega = 2.2 (1 + ||L||)` with `||L||` estimated by power iteration.

use serde::{Deserialize, Serialize};

use crate::error::{BoundaryError, Result};
use crate::operator::{norm2, LinearOperator};

/// Consecutive growing steps that flag a divergent iteration.
const GROWTH_STREAK: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OmegaChoice {
    Value(f64),
    Auto(AutoTag),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AutoTag {
    Auto,
}

impl Default for OmegaChoice {
    fn default() -> Self {
        OmegaChoice::Auto(AutoTag::Auto)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NeumannConfig {
    pub n_max: usize,
    /// Target for the a-posteriori error bound relative to `||g_n||`.
    pub tol: f64,
    pub power_iterations: usize,
}

impl Default for NeumannConfig {
    fn default() -> Self {
        Self {
            n_max: 200_000,
            tol: 1e-10,
            power_iterations: 30,
        }
    }
}

impl NeumannConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_max == 0 {
            return Err(BoundaryError::Configuration(
                "neumann n_max must be positive".into(),
            ));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(BoundaryError::Configuration(format!(
                "neumann tol must be positive, got {}",
                self.tol
            )));
        }
        Ok(())
    }
}

impl OmegaChoice {
    pub fn validate(&self) -> Result<()> {
        match *self {
            OmegaChoice::Value(w) if !(w > 0.0 && w.is_finite()) => Err(
                BoundaryError::Configuration(format!("omega must be positive, got {w}")),
            ),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeumannOutcome {
    pub x: Vec<f64>,
    pub omega: f64,
    /// `1 - alpha/omega`, the contraction factor for nonnegative `L`.
    pub rate_bound: f64,
    /// `||g_n - g_{n-1}||` for every step.
    pub step_norms: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Power-iteration estimate of `||op||` in the given norm.
pub fn estimate_norm<O, N>(op: &O, iterations: usize, norm: N) -> f64
where
    O: LinearOperator + ?Sized,
    N: Fn(&[f64]) -> f64,
{
    let n = op.dim();
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.5 * (i as f64).sin()).collect();
    let nv = norm(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    let mut est = 0.0_f64;
    for _ in 0..iterations.max(1) {
        let w = op.apply(&v);
        let nw = norm(&w);
        est = est.max(nw);
        if nw == 0.0 {
            break;
        }
        v = w.into_iter().map(|x| x / nw).collect();
    }
    est
}

/// Euclidean-norm variant of [`neumann_iterate_with_norm`].
pub fn neumann_iterate<O: LinearOperator + ?Sized>(
    op: &O,
    rhs: &[f64],
    alpha: f64,
    omega: OmegaChoice,
    cfg: &NeumannConfig,
) -> Result<NeumannOutcome> {
    neumann_iterate_with_norm(op, rhs, alpha, omega, cfg, norm2)
}

/// Iterates until `q/(1-q) ||g_n - g_{n-1}|| <= tol ||g_n||`, where `q` is
/// the larger of the theoretical rate and the last observed step ratio.
///
/// Returns a configuration error if the steps grow for several consecutive
/// iterations, which happens when `omega` is too small.
pub fn neumann_iterate_with_norm<O, N>(
    op: &O,
    rhs: &[f64],
    alpha: f64,
    omega: OmegaChoice,
    cfg: &NeumannConfig,
    norm: N,
) -> Result<NeumannOutcome>
where
    O: LinearOperator + ?Sized,
    N: Fn(&[f64]) -> f64,
{
    cfg.validate()?;
    omega.validate()?;
    if !(alpha > 0.0) {
        return Err(BoundaryError::Argument(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    let n = op.dim();
    if rhs.len() != n {
        return Err(BoundaryError::LengthMismatch {
            expected: n,
            got: rhs.len(),
        });
    }
    let omega = match omega {
        OmegaChoice::Value(w) => w,
        OmegaChoice::Auto(_) => 2.2 * (1.0 + estimate_norm(op, cfg.power_iterations, &norm)),
    };
    let rate_bound = 1.0 - alpha / omega;
    let g0: Vec<f64> = rhs.iter().map(|v| v / omega).collect();
    let mut g = g0.clone();
    let mut step_norms = Vec::new();
    let mut growth = 0;
    let mut converged = norm(&g0) == 0.0;
    let mut iterations = 0;

    while !converged && iterations < cfg.n_max {
        iterations += 1;
        let lg = op.apply(&g);
        let next: Vec<f64> = g0
            .iter()
            .zip(&g)
            .zip(&lg)
            .map(|((a, gi), li)| a + rate_bound * gi - li / omega)
            .collect();
        let delta: Vec<f64> = next.iter().zip(&g).map(|(a, b)| a - b).collect();
        let d = norm(&delta);
        let ratio = step_norms
            .last()
            .map_or(0.0, |&prev: &f64| if prev > 0.0 { d / prev } else { 0.0 });
        step_norms.push(d);
        g = next;

        if !d.is_finite() {
            return Err(BoundaryError::Configuration(format!(
                "fixed-point iteration diverged (omega = {omega})"
            )));
        }
        if ratio > 1.0 + 1e-12 {
            growth += 1;
            if growth >= GROWTH_STREAK {
                return Err(BoundaryError::Configuration(format!(
                    "omega = {omega} too small: fixed-point steps grow (ratio {ratio:.6})"
                )));
            }
        } else {
            growth = 0;
        }
        let q = rate_bound.max(ratio).min(1.0 - 1e-15);
        let bound = q / (1.0 - q) * d;
        converged = bound <= cfg.tol * norm(&g) || d == 0.0;
    }

    Ok(NeumannOutcome {
        x: g,
        omega,
        rate_bound,
        step_norms,
        iterations,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::DenseMatrix;

    fn diagonal(d: &[f64]) -> DenseMatrix {
        let n = d.len();
        DenseMatrix::from_columns(
            (0..n)
                .map(|j| (0..n).map(|i| if i == j { d[i] } else { 0.0 }).collect())
                .collect(),
        )
    }

    #[test]
    fn zero_operator_contracts_at_predicted_rate() {
        let l = diagonal(&[0.0; 4]);
        let cfg = NeumannConfig {
            tol: 1e-12,
            ..NeumannConfig::default()
        };
        let out = neumann_iterate(
            &l,
            &[0.5, 0.5, 0.5, 0.5],
            0.5,
            OmegaChoice::Value(2.0),
            &cfg,
        )
        .unwrap();
        assert!(out.converged);
        for x in &out.x {
            assert!((x - 1.0).abs() < 1e-10);
        }
        for w in out.step_norms.windows(2).filter(|w| w[0] > 1e-8) {
            assert!((w[1] / w[0] - 0.75).abs() < 1e-6);
        }
    }

    #[test]
    fn diagonal_system_matches_direct_solution() {
        let d = [0.0, 0.3, 1.0, 2.5];
        let rhs = [1.0, -2.0, 0.5, 3.0];
        let alpha = 0.05;
        let out = neumann_iterate(
            &diagonal(&d),
            &rhs,
            alpha,
            OmegaChoice::default(),
            &NeumannConfig::default(),
        )
        .unwrap();
        assert!(out.converged);
        for ((x, di), bi) in out.x.iter().zip(&d).zip(&rhs) {
            let exact = bi / (di + alpha);
            assert!(
                (x - exact).abs() < 1e-8 * exact.abs().max(1.0),
                "{x} vs {exact}"
            );
        }
    }

    #[test]
    fn small_omega_is_a_configuration_error() {
        let cfg = NeumannConfig::default();
        let err = neumann_iterate(
            &diagonal(&[4.0, 1.0]),
            &[1.0, 1.0],
            0.1,
            OmegaChoice::Value(0.5),
            &cfg,
        )
        .unwrap_err();
        assert!(matches!(err, BoundaryError::Configuration(_)));
    }

    #[test]
    fn zero_rhs_is_immediate() {
        let out = neumann_iterate(
            &diagonal(&[1.0, 2.0]),
            &[0.0, 0.0],
            0.1,
            OmegaChoice::default(),
            &NeumannConfig::default(),
        )
        .unwrap();
        assert!(out.converged);
        assert_eq!(out.iterations, 0);
    }

    #[test]
    fn power_iteration_finds_largest_eigenvalue() {
        let est = estimate_norm(&diagonal(&[0.1, 3.0, 1.0]), 60, norm2);
        assert!((est - 3.0).abs() < 1e-6);
    }

    #[test]
    fn omega_choice_parses() {
        let auto: OmegaChoice = serde_json::from_str(r#""auto""#).unwrap();
        assert_eq!(auto, OmegaChoice::default());
        let fixed: OmegaChoice = serde_json::from_str("3.5").unwrap();
        assert_eq!(fixed, OmegaChoice::Value(3.5));
        assert!(serde_json::from_str::<OmegaChoice>(r#""fast""#).is_err());
    }
}
