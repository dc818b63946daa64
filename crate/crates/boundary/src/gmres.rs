//! Restarted GMRES with modified Gram-Schmidt and Givens rotations.

use serde::{Deserialize, Serialize};

use crate::error::{BoundaryError, Result};
use crate::operator::{dot, norm2, LinearOperator};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GmresConfig {
    /// Number of restart cycles.
    pub outer_max: usize,
    /// Krylov dimension per cycle.
    pub restart: usize,
    /// Target relative residual `||b - Ax|| / ||b||`.
    pub tol: f64,
}

impl Default for GmresConfig {
    fn default() -> Self {
        Self {
            outer_max: 6,
            restart: 10,
            tol: 1e-12,
        }
    }
}

impl GmresConfig {
    pub fn validate(&self) -> Result<()> {
        if self.outer_max == 0 || self.restart == 0 {
            return Err(BoundaryError::Configuration(
                "gmres outer_max and restart must be positive".into(),
            ));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(BoundaryError::Configuration(format!(
                "gmres tol must be positive, got {}",
                self.tol
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmresOutcome {
    pub x: Vec<f64>,
    /// True relative residual at the start and after every restart cycle.
    pub residual_history: Vec<f64>,
    /// Relative residual estimates from the least-squares problem, one per
    /// Arnoldi step.
    pub arnoldi_residuals: Vec<f64>,
    pub outer_iterations: usize,
    pub converged: bool,
}

impl GmresOutcome {
    pub fn relative_residual(&self) -> f64 {
        *self.residual_history.last().unwrap_or(&f64::NAN)
    }
}

fn givens(a: f64, b: f64) -> (f64, f64) {
    if b == 0.0 {
        (1.0, 0.0)
    } else {
        let r = a.hypot(b);
        (a / r, b / r)
    }
}

/// Solves `A x = b` from a zero initial guess.
///
/// Running out of cycles is not an error: the best iterate is returned with
/// `converged = false`.
pub fn gmres<O: LinearOperator + ?Sized>(
    op: &O,
    b: &[f64],
    cfg: &GmresConfig,
) -> Result<GmresOutcome> {
    cfg.validate()?;
    let n = op.dim();
    if b.len() != n {
        return Err(BoundaryError::LengthMismatch {
            expected: n,
            got: b.len(),
        });
    }
    let b_norm = norm2(b);
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return Ok(GmresOutcome {
            x,
            residual_history: vec![0.0],
            arnoldi_residuals: Vec::new(),
            outer_iterations: 0,
            converged: true,
        });
    }
    let m = cfg.restart.min(n).max(1);
    let mut residual_history = vec![1.0];
    let mut arnoldi_residuals = Vec::new();
    let mut converged = false;
    let mut outer = 0;

    while outer < cfg.outer_max {
        outer += 1;
        let ax = op.apply(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let beta = norm2(&r);
        if beta <= cfg.tol * b_norm {
            converged = true;
            outer -= 1;
            break;
        }
        let mut basis: Vec<Vec<f64>> = vec![r.iter().map(|v| v / beta).collect()];
        // Column-major Hessenberg: hess[j] holds column j (length j + 2).
        let mut hess: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut cs: Vec<f64> = Vec::with_capacity(m);
        let mut sn: Vec<f64> = Vec::with_capacity(m);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k = 0;

        for j in 0..m {
            let mut w = op.apply(&basis[j]);
            let w_norm0 = norm2(&w);
            let mut col = vec![0.0; j + 2];
            // two passes of modified Gram-Schmidt
            for _ in 0..2 {
                for (i, v) in basis.iter().enumerate() {
                    let hij = dot(&w, v);
                    col[i] += hij;
                    for (wk, vk) in w.iter_mut().zip(v) {
                        *wk -= hij * vk;
                    }
                }
            }
            let h_next = norm2(&w);
            col[j + 1] = h_next;
            for i in 0..j {
                let (c, s) = (cs[i], sn[i]);
                let (a, bb) = (col[i], col[i + 1]);
                col[i] = c * a + s * bb;
                col[i + 1] = -s * a + c * bb;
            }
            let (c, s) = givens(col[j], col[j + 1]);
            col[j] = c * col[j] + s * col[j + 1];
            col[j + 1] = 0.0;
            cs.push(c);
            sn.push(s);
            g[j + 1] = -s * g[j];
            g[j] *= c;
            hess.push(col);
            k = j + 1;
            let est = g[j + 1].abs() / b_norm;
            arnoldi_residuals.push(est);
            let breakdown = h_next <= 1e-14 * w_norm0.max(f64::MIN_POSITIVE);
            if est <= cfg.tol || breakdown {
                break;
            }
            basis.push(w.iter().map(|v| v / h_next).collect());
        }

        // back substitution on the k x k triangle
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for (jj, yj) in y.iter().enumerate().skip(i + 1) {
                s -= hess[jj][i] * yj;
            }
            y[i] = s / hess[i][i];
        }
        for (yi, v) in y.iter().zip(&basis) {
            for (xk, vk) in x.iter_mut().zip(v) {
                *xk += yi * vk;
            }
        }
        let ax = op.apply(&x);
        let res = b
            .iter()
            .zip(&ax)
            .map(|(bi, ai)| (bi - ai).powi(2))
            .sum::<f64>()
            .sqrt()
            / b_norm;
        residual_history.push(res);
        if res <= cfg.tol {
            converged = true;
            break;
        }
    }

    Ok(GmresOutcome {
        x,
        residual_history,
        arnoldi_residuals,
        outer_iterations: outer,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::DenseMatrix;

    fn spd(n: usize) -> DenseMatrix {
        let cols = (0..n)
            .map(|j| {
                (0..n)
                    .map(|i| {
                        if i == j {
                            4.0 + i as f64 * 0.1
                        } else {
                            1.0 / (1.0 + (i as f64 - j as f64).abs())
                        }
                    })
                    .collect()
            })
            .collect();
        DenseMatrix::from_columns(cols)
    }

    #[test]
    fn identity_converges_in_one_step() {
        let n = 12;
        let id = DenseMatrix::from_columns(
            (0..n)
                .map(|j| (0..n).map(|i| f64::from(u8::from(i == j))).collect())
                .collect(),
        );
        let b: Vec<f64> = (0..n).map(|i| i as f64 - 3.0).collect();
        let out = gmres(&id, &b, &GmresConfig::default()).unwrap();
        assert!(out.converged);
        assert_eq!(out.outer_iterations, 1);
        assert_eq!(out.arnoldi_residuals.len(), 1);
        for (a, b) in out.x.iter().zip(&b) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_rhs_returns_zero() {
        let a = spd(5);
        let out = gmres(&a, &[0.0; 5], &GmresConfig::default()).unwrap();
        assert!(out.converged);
        assert_eq!(out.x, vec![0.0; 5]);
    }

    #[test]
    fn residual_history_is_nonincreasing() {
        let a = spd(60);
        let b: Vec<f64> = (0..60).map(|i| (i as f64).sin()).collect();
        let cfg = GmresConfig {
            outer_max: 10,
            restart: 4,
            tol: 1e-13,
        };
        let out = gmres(&a, &b, &cfg).unwrap();
        for w in out.residual_history.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12));
        }
    }

    #[test]
    fn exhausted_budget_is_reported() {
        let a = spd(40);
        let b: Vec<f64> = (0..40).map(|i| (0.3 * i as f64).cos()).collect();
        let cfg = GmresConfig {
            outer_max: 1,
            restart: 2,
            tol: 1e-15,
        };
        let out = gmres(&a, &b, &cfg).unwrap();
        assert!(!out.converged);
        assert_eq!(out.outer_iterations, 1);
    }

    #[test]
    fn invalid_config_rejected() {
        let a = spd(3);
        let cfg = GmresConfig {
            restart: 0,
            ..GmresConfig::default()
        };
        assert!(gmres(&a, &[1.0, 0.0, 0.0], &cfg).is_err());
        assert!(gmres(&a, &[1.0, 0.0], &GmresConfig::default()).is_err());
    }
}
