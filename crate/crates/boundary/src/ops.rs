//! Operators on boundary signals: time reversal `R`, time filter `J`, the
//! connecting operator `K = R Lambda R J - J Lambda`, the projections `P_r`,
//! `P^` and `N_Y`, the Green's smoother `Q`, the discrete time derivative and
//! the composite operator `L` of the second normal equation.
//!
//! Integrals use the composite trapezoid rule on the node grid. The
//! `*_transpose` functions are exact matrix transposes of the nodal maps and
//! are used to symmetrize operators for the fixed-point iteration.

use crate::error::{BoundaryError, Result};
use crate::ntd::NtdOperator;
use crate::signal::{TimeGrid, TimeSignal};

/// Slack used when deciding on which side of a breakpoint a node falls.
const NODE_EPS: f64 = 1e-9;

/// Tolerance for the endpoint checks of `Z`/`Y` membership, relative to the
/// signal's sup norm.
pub const MEMBERSHIP_TOL: f64 = 1e-8;

/// `R f(t) = f(2T - t)`.
pub fn time_reverse(f: &TimeSignal) -> TimeSignal {
    let mut v = f.values().to_vec();
    v.reverse();
    TimeSignal::from_values(f.grid(), v).expect("length preserved")
}

fn cumulative_trapezoid(f: &TimeSignal) -> Vec<f64> {
    let h = f.grid().step();
    let mut acc = Vec::with_capacity(f.values().len());
    acc.push(0.0);
    let mut s = 0.0;
    for w in f.values().windows(2) {
        s += 0.5 * h * (w[0] + w[1]);
        acc.push(s);
    }
    acc
}

/// `J f(t) = 1/2 int_t^{2T-t} f(s) ds` for `t < T`, zero for `t >= T`.
pub fn time_filter(f: &TimeSignal) -> TimeSignal {
    let g = f.grid();
    let n = g.n();
    let c = cumulative_trapezoid(f);
    let v = (0..g.len())
        .map(|i| {
            if i < n {
                0.5 * (c[2 * n - i] - c[i])
            } else {
                0.0
            }
        })
        .collect();
    TimeSignal::from_values(g, v).expect("length preserved")
}

/// Transpose of the nodal matrix of [`time_filter`].
pub fn time_filter_transpose(g_sig: &TimeSignal) -> TimeSignal {
    let g = g_sig.grid();
    let n = g.n();
    let h = g.step();
    let gv = g_sig.values();
    // prefix[m] = sum_{i<m} g_i
    let mut prefix = Vec::with_capacity(gv.len() + 1);
    prefix.push(0.0);
    let mut s = 0.0;
    for &x in gv {
        s += x;
        prefix.push(s);
    }
    let v = (0..g.len())
        .map(|j| {
            let m = j.min(2 * n - j);
            let full = prefix[m.min(n)];
            let half = if m < n { 0.5 * gv[m] } else { 0.0 };
            0.5 * h * (full + half)
        })
        .collect();
    TimeSignal::from_values(g, v).expect("length preserved")
}

/// Connecting operator `K f = R Lambda R J f - J Lambda f`.
pub fn connecting_k(ntd: &NtdOperator, f: &TimeSignal) -> Result<TimeSignal> {
    ntd.grid().ensure_same(&f.grid())?;
    let first = ntd.apply_adjoint(&time_filter(f))?;
    let second = time_filter(&ntd.apply(f)?);
    first.sub(&second)
}

/// Matrix transpose of [`connecting_k`]: `J^T R Lambda^T R - Lambda^T J^T`.
pub fn connecting_k_transpose(ntd: &NtdOperator, g: &TimeSignal) -> Result<TimeSignal> {
    ntd.grid().ensure_same(&g.grid())?;
    let first = time_filter_transpose(&time_reverse(&ntd.apply_transpose(&time_reverse(g))?));
    let second = ntd.apply_transpose(&time_filter_transpose(g))?;
    first.sub(&second)
}

fn keep_nodes<F: Fn(usize) -> bool>(f: &TimeSignal, keep: F) -> TimeSignal {
    let v = f
        .values()
        .iter()
        .enumerate()
        .map(|(j, &x)| if keep(j) { x } else { 0.0 })
        .collect();
    TimeSignal::from_values(f.grid(), v).expect("length preserved")
}

/// Index range `(lo, hi)` (exclusive) of the nodes with `T - r < jh < T`.
pub fn projection_window(grid: TimeGrid, r: f64) -> Result<(usize, usize)> {
    if !(r > 0.0 && r <= grid.t() * (1.0 + NODE_EPS)) {
        return Err(BoundaryError::Argument(format!(
            "projection radius r must lie in (0, T] = (0, {}], got {r}",
            grid.t()
        )));
    }
    let lo = ((grid.t() - r) / grid.step() + NODE_EPS).floor() as usize;
    Ok((lo, grid.n()))
}

/// `P_r`: multiplication by the indicator of `(T - r, T)`.
pub fn project_p(f: &TimeSignal, r: f64) -> Result<TimeSignal> {
    let (lo, hi) = projection_window(f.grid(), r)?;
    Ok(keep_nodes(f, |j| j > lo && j < hi))
}

/// `P^`: multiplication by the indicator of `(0, T)`.
pub fn project_hat_p(f: &TimeSignal) -> TimeSignal {
    let n = f.grid().n();
    keep_nodes(f, |j| j < n)
}

/// `Phi_T(t) = (T - t)_+` sampled at every node.
pub fn phi_t(grid: TimeGrid) -> TimeSignal {
    let t = grid.t();
    TimeSignal::sample(grid, |s| (t - s).max(0.0))
}

/// Green's smoother: `Q f(t) = int_0^{2T} g(t, s) f(s) ds` where `g` solves
/// `(1 - d_t^2) g = delta(t - s)` with zero values at `0` and `2T`.
///
/// The kernel factorizes as `sinh(min) sinh(2T - max) / sinh(2T)`, so the
/// trapezoid sum is evaluated with two running sums.
pub fn greens_q(f: &TimeSignal) -> TimeSignal {
    let g = f.grid();
    let len = g.len();
    let two_t = g.horizon();
    let denom = two_t.sinh();
    let left: Vec<f64> = g.nodes().map(|t| t.sinh()).collect();
    let right: Vec<f64> = g.nodes().map(|t| (two_t - t).sinh()).collect();
    let fv = f.values();

    // lower[i] = sum_{j<=i} w_j sinh(t_j) f_j
    let mut lower = vec![0.0; len];
    let mut s = 0.0;
    for j in 0..len {
        s += g.weight(j) * left[j] * fv[j];
        lower[j] = s;
    }
    // upper[i] = sum_{j>i} w_j sinh(2T - t_j) f_j
    let mut upper = vec![0.0; len];
    let mut s = 0.0;
    for j in (0..len).rev() {
        upper[j] = s;
        s += g.weight(j) * right[j] * fv[j];
    }
    let v = (0..len)
        .map(|i| (right[i] * lower[i] + left[i] * upper[i]) / denom)
        .collect();
    TimeSignal::from_values(g, v).expect("length preserved")
}

/// Support-shrinking projector onto `Y`:
/// `f(t) - sinh(t)/sinh(T) f(T)` on `[0, T]`, zero on `(T, 2T]`.
///
/// The input must vanish at both endpoints (an element of `Z`).
pub fn project_ny(f: &TimeSignal) -> Result<TimeSignal> {
    let g = f.grid();
    let v = f.values();
    let scale = f.max_abs().max(1.0);
    let (first, last) = (v[0], v[v.len() - 1]);
    if first.abs() > MEMBERSHIP_TOL * scale || last.abs() > MEMBERSHIP_TOL * scale {
        return Err(BoundaryError::NotInSpace {
            space: "Z",
            detail: format!("endpoint values f(0) = {first:e}, f(2T) = {last:e}"),
        });
    }
    let n = g.n();
    let t = g.t();
    let f_t = v[n];
    let sinh_t = t.sinh();
    let out = (0..g.len())
        .map(|j| {
            if j < n {
                v[j] - g.node(j).sinh() / sinh_t * f_t
            } else {
                0.0
            }
        })
        .collect();
    TimeSignal::from_values(g, out)
}

/// Forward difference `(f_{j+1} - f_j) / h` at nodes `1..=2N-2`; other nodes
/// are zero.
pub fn d_dt(f: &TimeSignal) -> TimeSignal {
    let g = f.grid();
    let h = g.step();
    let v = f.values();
    let last = g.len() - 2; // node 2N-1
    let out = (0..g.len())
        .map(|j| {
            if j >= 1 && j < last {
                (v[j + 1] - v[j]) / h
            } else {
                0.0
            }
        })
        .collect();
    TimeSignal::from_values(g, out).expect("length preserved")
}

/// Matrix transpose of [`d_dt`].
pub fn d_dt_transpose(f: &TimeSignal) -> TimeSignal {
    let g = f.grid();
    let h = g.step();
    let v = f.values();
    let last = g.len() - 2;
    let active = |j: usize| j >= 1 && j < last;
    let out = (0..g.len())
        .map(|k| {
            let mut s = 0.0;
            if k >= 1 && active(k - 1) {
                s += v[k - 1];
            }
            if active(k) {
                s -= v[k];
            }
            s / h
        })
        .collect();
    TimeSignal::from_values(g, out).expect("length preserved")
}

fn ensure_in_y(a: &TimeSignal) -> Result<()> {
    let tol = MEMBERSHIP_TOL * a.max_abs().max(1.0);
    if a.is_in_y(tol) {
        Ok(())
    } else {
        Err(BoundaryError::NotInSpace {
            space: "Y",
            detail: "signal must vanish at t = 0 and on [T, 2T]".into(),
        })
    }
}

/// Inner part of `L` before smoothing:
/// `B a = R Lambda R d_t P^ a - P^ d_t Lambda a + K a`.
pub fn operator_l_inner(ntd: &NtdOperator, a: &TimeSignal) -> Result<TimeSignal> {
    let adj = ntd.apply_adjoint(&d_dt(&project_hat_p(a)))?;
    let direct = project_hat_p(&d_dt(&ntd.apply(a)?));
    let k = connecting_k(ntd, a)?;
    adj.sub(&direct)?.add(&k)
}

/// Matrix transpose of [`operator_l_inner`].
pub fn operator_l_inner_transpose(ntd: &NtdOperator, g: &TimeSignal) -> Result<TimeSignal> {
    let adj = project_hat_p(&d_dt_transpose(&ntd.apply_adjoint_transpose(g)?));
    let direct = ntd.apply_transpose(&d_dt_transpose(&project_hat_p(g)))?;
    let k = connecting_k_transpose(ntd, g)?;
    adj.sub(&direct)?.add(&k)
}

/// `L a = N_Y Q (R Lambda R d_t P^ - P^ d_t Lambda + K) a` for `a` in `Y`.
pub fn operator_l(ntd: &NtdOperator, a: &TimeSignal) -> Result<TimeSignal> {
    ntd.grid().ensure_same(&a.grid())?;
    ensure_in_y(a)?;
    project_ny(&greens_q(&operator_l_inner(ntd, a)?))
}

/// Right-hand side of the second normal equation: `-N_Y Q d_t K h`, where
/// `h` is already supported in the projection window.
pub fn second_equation_rhs(ntd: &NtdOperator, h: &TimeSignal) -> Result<TimeSignal> {
    let k = connecting_k(ntd, h)?;
    Ok(project_ny(&greens_q(&d_dt(&k)))?.scale(-1.0))
}

impl NtdOperator {
    /// Transpose of `R Lambda R`.
    pub fn apply_adjoint_transpose(&self, g: &TimeSignal) -> Result<TimeSignal> {
        Ok(time_reverse(&self.apply_transpose(&time_reverse(g))?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid(n: usize) -> TimeGrid {
        TimeGrid::new(n, 2.0).unwrap()
    }

    /// Half-line response at unit speed: `Lambda phi_1 = -int_0^t phi_1`.
    fn unit_speed_ntd(g: TimeGrid) -> NtdOperator {
        let phi = TimeSignal::hat(g, 1).unwrap();
        let h = g.step();
        let k = TimeSignal::sample(g, |t| {
            // int_0^t of the hat centred at h
            let s = t.min(2.0 * h);
            -if s <= h {
                s * s / (2.0 * h)
            } else {
                h - (2.0 * h - s).powi(2) / (2.0 * h)
            }
        });
        let _ = phi;
        NtdOperator::from_kernel(k).unwrap()
    }

    fn dense<F: Fn(&TimeSignal) -> TimeSignal>(g: TimeGrid, f: F) -> Vec<Vec<f64>> {
        (0..g.len())
            .map(|i| {
                let mut v = vec![0.0; g.len()];
                v[i] = 1.0;
                f(&TimeSignal::from_values(g, v).unwrap()).into_values()
            })
            .collect()
    }

    fn assert_transpose<F, G>(g: TimeGrid, f: F, ft: G)
    where
        F: Fn(&TimeSignal) -> TimeSignal,
        G: Fn(&TimeSignal) -> TimeSignal,
    {
        let a = dense(g, f);
        let at = dense(g, ft);
        for i in 0..g.len() {
            for j in 0..g.len() {
                assert_relative_eq!(a[i][j], at[j][i], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn time_reverse_examples() {
        let g = grid(8);
        let f = TimeSignal::sample(g, |t| t.sin());
        assert_eq!(time_reverse(&time_reverse(&f)), f);
        let c = TimeSignal::sample(g, |_| 3.0);
        assert_eq!(time_reverse(&c), c);
        let first = TimeSignal::hat(g, 1).unwrap();
        assert_eq!(time_reverse(&first), TimeSignal::hat(g, 15).unwrap());
    }

    #[test]
    fn time_filter_of_constants() {
        let g = grid(16);
        assert_eq!(time_filter(&TimeSignal::zeros(g)).max_abs(), 0.0);
        let one = TimeSignal::sample(g, |_| 1.0);
        let j = time_filter(&one);
        // analytic: J1(t) = (T - t)_+
        for (t, v) in g.nodes().zip(j.values()) {
            assert_relative_eq!(*v, (2.0 - t).max(0.0), epsilon = 1e-12);
        }
        assert_relative_eq!(j.eval(1.0), 1.0, epsilon = 1e-12);
        assert_eq!(j, phi_t(g));
    }

    #[test]
    fn time_filter_support_properties() {
        let g = grid(16);
        let f = TimeSignal::sample(g, |t| (1.3 * t).cos() + t);
        let j = time_filter(&f);
        assert!(j.values()[g.n()..].iter().all(|v| *v == 0.0));
        let rjr = time_reverse(&time_filter(&time_reverse(&f)));
        assert!(rjr.values()[..=g.n()].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn transposes_are_exact() {
        let g = grid(6);
        let ntd = unit_speed_ntd(g);
        assert_transpose(g, time_filter, time_filter_transpose);
        assert_transpose(g, d_dt, d_dt_transpose);
        assert_transpose(
            g,
            |f| connecting_k(&ntd, f).unwrap(),
            |f| connecting_k_transpose(&ntd, f).unwrap(),
        );
        assert_transpose(
            g,
            |f| operator_l_inner(&ntd, f).unwrap(),
            |f| operator_l_inner_transpose(&ntd, f).unwrap(),
        );
    }

    #[test]
    fn projection_p_examples() {
        let g = grid(8); // h = 0.25
        let f = TimeSignal::sample(g, |_| 1.0);
        let full = project_p(&f, 2.0).unwrap();
        for (j, v) in full.values().iter().enumerate() {
            let expect = if j == 0 || j >= 8 { 0.0 } else { 1.0 };
            assert_eq!(*v, expect, "node {j}");
        }
        let p = project_p(&f, 0.5).unwrap(); // keeps 1.5 < jh < 2 -> node 7
        assert_eq!(project_p(&p, 0.5).unwrap(), p);
        assert_eq!(p.values().iter().filter(|v| **v != 0.0).count(), 1);
        let hat = TimeSignal::hat(g, 7).unwrap();
        assert_eq!(project_p(&hat, 0.5).unwrap(), hat);
        assert!(project_p(&f, 0.0).is_err());
        assert!(project_p(&f, 2.5).is_err());
    }

    #[test]
    fn projection_hat_p_examples() {
        let g = grid(8);
        let y = TimeSignal::interpolate_pn(g, |t| if t < 2.0 { t * (2.0 - t) } else { 0.0 });
        assert_eq!(project_hat_p(&y), y);
        let f = TimeSignal::sample(g, |t| t.cos());
        assert_eq!(project_hat_p(&project_hat_p(&f)), project_hat_p(&f));
        let late =
            TimeSignal::interpolate_pn(g, |t| if t > 2.0 { (t - 2.0) * (4.0 - t) } else { 0.0 });
        assert_eq!(project_hat_p(&late).max_abs(), 0.0);
    }

    #[test]
    fn phi_t_examples() {
        let g = grid(64);
        let phi = phi_t(g);
        assert_relative_eq!(phi.eval(1.0), 1.0, epsilon = 1e-14);
        assert!(phi.values()[64..].iter().all(|v| *v == 0.0));
        // ||Phi_T||^2 = T^3 / 3 = 8/3
        assert_relative_eq!(phi.inner_v(&phi).unwrap(), 8.0 / 3.0, max_relative = 1e-3);
    }

    #[test]
    fn greens_q_examples() {
        let g = grid(256);
        assert_eq!(greens_q(&TimeSignal::zeros(g)).max_abs(), 0.0);
        let one = TimeSignal::sample(g, |_| 1.0);
        let q = greens_q(&one);
        for (t, v) in g.nodes().zip(q.values()) {
            let exact = 1.0 - (t - 2.0).cosh() / 2.0_f64.cosh();
            assert!((v - exact).abs() < 1e-4, "t={t}: {v} vs {exact}");
        }
        assert_eq!(q.values()[0], 0.0);
        assert!(q.values()[g.len() - 1].abs() < 1e-15);

        // (1 - d^2) Q f = f at interior nodes
        let f = TimeSignal::sample(g, |t| (2.0 * t).sin() + 0.3 * t);
        let qf = greens_q(&f);
        let h = g.step();
        let v = qf.values();
        for j in 1..g.len() - 1 {
            let lhs = v[j] - (v[j + 1] - 2.0 * v[j] + v[j - 1]) / (h * h);
            assert!((lhs - f.values()[j]).abs() < 2e-3, "node {j}: {lhs}");
        }
    }

    #[test]
    fn project_ny_examples() {
        let g = grid(64);
        let y = TimeSignal::interpolate_pn(g, |t| {
            if t < 2.0 {
                (std::f64::consts::PI * t).sin()
            } else {
                0.0
            }
        });
        let out = project_ny(&y).unwrap();
        for (a, b) in out.values().iter().zip(y.values()) {
            assert!((a - b).abs() < 1e-15);
        }
        let s = TimeSignal::interpolate_pn(g, |t| {
            if t <= 2.0 {
                t.sinh()
            } else {
                (4.0 - t) * 2.0_f64.sinh() / 2.0
            }
        });
        let out = project_ny(&s).unwrap();
        assert!(out.max_abs() < 1e-12);

        let z = TimeSignal::interpolate_pn(g, |t| t * (4.0 - t));
        let once = project_ny(&z).unwrap();
        assert_eq!(project_ny(&once).unwrap(), once);
        assert_eq!(once.values()[64], 0.0);

        let bad = TimeSignal::sample(g, |_| 1.0);
        assert!(project_ny(&bad).is_err());
    }

    #[test]
    fn d_dt_examples() {
        let g = grid(16);
        let h = g.step();
        assert!(d_dt(&TimeSignal::sample(g, |_| 2.0)).max_abs() < 1e-15);
        let lin = d_dt(&TimeSignal::sample(g, |t| t));
        for j in 1..2 * g.n() - 1 {
            assert_relative_eq!(lin.values()[j], 1.0, epsilon = 1e-12);
        }
        let hat = d_dt(&TimeSignal::hat(g, 5).unwrap());
        assert_relative_eq!(hat.values()[4], 1.0 / h);
        assert_relative_eq!(hat.values()[5], -1.0 / h);
        assert_eq!(hat.values().iter().filter(|v| **v != 0.0).count(), 2);
    }

    #[test]
    fn operator_l_rejects_non_y() {
        let g = grid(8);
        let ntd = unit_speed_ntd(g);
        let bad = TimeSignal::interpolate_pn(g, |t| t * (4.0 - t));
        assert!(operator_l(&ntd, &bad).is_err());
        let zero = TimeSignal::zeros(g);
        assert_eq!(operator_l(&ntd, &zero).unwrap().max_abs(), 0.0);
    }
}
