//! Boundary time signals on the uniform node grid `{j h : j = 0..2N}` of
//! `[0, 2T]`, with `h = T / N`.
//!
//! A [`TimeSignal`] stores nodal values and is read as the piecewise-affine
//! interpolant of those values. Hat functions `phi_n` (`n = 1..2N-1`) span the
//! subspace of signals vanishing at both endpoints; their coefficients are
//! exactly the interior nodal values.

use serde::{Deserialize, Serialize};

use crate::error::{BoundaryError, Result};

/// Uniform node grid on `[0, 2T]` with `2N + 1` nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    n: usize,
    half_horizon: f64,
}

impl TimeGrid {
    pub fn new(n: usize, half_horizon: f64) -> Result<Self> {
        if n < 2 {
            return Err(BoundaryError::InvalidGrid(format!(
                "N must be >= 2, got {n}"
            )));
        }
        if !(half_horizon.is_finite() && half_horizon > 0.0) {
            return Err(BoundaryError::InvalidGrid(format!(
                "T must be positive and finite, got {half_horizon}"
            )));
        }
        Ok(Self { n, half_horizon })
    }

    /// Node count parameter `N`.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Half horizon `T`; signals live on `[0, 2T]`.
    pub fn t(&self) -> f64 {
        self.half_horizon
    }

    pub fn horizon(&self) -> f64 {
        2.0 * self.half_horizon
    }

    /// Node spacing `h = T / N`.
    pub fn step(&self) -> f64 {
        self.half_horizon / self.n as f64
    }

    /// Number of nodes, `2N + 1`.
    pub fn len(&self) -> usize {
        2 * self.n + 1
    }

    /// Always false; a grid has at least three nodes.
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of hat functions, `2N - 1`.
    pub fn interior_len(&self) -> usize {
        2 * self.n - 1
    }

    pub fn node(&self, j: usize) -> f64 {
        j as f64 * self.step()
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|j| self.node(j))
    }

    pub fn ensure_same(&self, other: &TimeGrid) -> Result<()> {
        if self.n == other.n && self.half_horizon == other.half_horizon {
            Ok(())
        } else {
            Err(BoundaryError::GridMismatch {
                expected_n: self.n,
                expected_t: self.half_horizon,
                got_n: other.n,
                got_t: other.half_horizon,
            })
        }
    }

    /// Trapezoid weight of node `j`.
    pub fn weight(&self, j: usize) -> f64 {
        if j == 0 || j == 2 * self.n {
            0.5 * self.step()
        } else {
            self.step()
        }
    }
}

/// Nodal samples of a boundary function on `[0, 2T]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSignal {
    grid: TimeGrid,
    values: Vec<f64>,
}

impl TimeSignal {
    pub fn zeros(grid: TimeGrid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn from_values(grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(BoundaryError::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    /// Nodal interpolant of `f`, sampling every node including the endpoints.
    /// Exact for affine functions.
    pub fn sample<F: Fn(f64) -> f64>(grid: TimeGrid, f: F) -> Self {
        let values = grid.nodes().map(f).collect();
        Self { grid, values }
    }

    /// Interpolation onto the hat span: `sum_{j=1}^{2N-1} f(jh) phi_j`.
    /// Endpoint values are dropped.
    pub fn interpolate_pn<F: Fn(f64) -> f64>(grid: TimeGrid, f: F) -> Self {
        let mut s = Self::sample(grid, f);
        s.values[0] = 0.0;
        let last = s.values.len() - 1;
        s.values[last] = 0.0;
        s
    }

    /// Hat function `phi_n` with peak 1 at node `n`.
    pub fn hat(grid: TimeGrid, n: usize) -> Result<Self> {
        let max = grid.interior_len();
        if n == 0 || n > max {
            return Err(BoundaryError::HatIndex { index: n, max });
        }
        let mut s = Self::zeros(grid);
        s.values[n] = 1.0;
        Ok(s)
    }

    /// Builds a signal from its `2N - 1` hat coefficients.
    pub fn from_coefficients(grid: TimeGrid, coeffs: &[f64]) -> Result<Self> {
        if coeffs.len() != grid.interior_len() {
            return Err(BoundaryError::LengthMismatch {
                expected: grid.interior_len(),
                got: coeffs.len(),
            });
        }
        let mut values = Vec::with_capacity(grid.len());
        values.push(0.0);
        values.extend_from_slice(coeffs);
        values.push(0.0);
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Hat coefficients, i.e. the interior nodal values.
    pub fn coefficients(&self) -> &[f64] {
        &self.values[1..self.values.len() - 1]
    }

    /// Piecewise-affine evaluation; zero outside `[0, 2T]`.
    pub fn eval(&self, t: f64) -> f64 {
        let h = self.grid.step();
        if !(0.0..=self.grid.horizon()).contains(&t) {
            return 0.0;
        }
        let x = t / h;
        let j = (x.floor() as usize).min(self.values.len() - 2);
        let theta = x - j as f64;
        (1.0 - theta) * self.values[j] + theta * self.values[j + 1]
    }

    pub fn ensure_same_grid(&self, other: &TimeSignal) -> Result<()> {
        self.grid.ensure_same(&other.grid)
    }

    /// Trapezoid pairing in `V = L^2(0, 2T)`.
    pub fn inner_v(&self, other: &TimeSignal) -> Result<f64> {
        self.ensure_same_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .enumerate()
            .map(|(j, (a, b))| self.grid.weight(j) * a * b)
            .sum())
    }

    pub fn norm_v(&self) -> f64 {
        self.inner_v(self).unwrap_or(0.0).max(0.0).sqrt()
    }

    /// `H^1` pairing: trapezoid `L^2` part plus the forward-difference slopes
    /// of every grid cell.
    pub fn inner_y(&self, other: &TimeSignal) -> Result<f64> {
        let l2 = self.inner_v(other)?;
        let h = self.grid.step();
        let slopes: f64 = self
            .values
            .windows(2)
            .zip(other.values.windows(2))
            .map(|(a, b)| (a[1] - a[0]) * (b[1] - b[0]))
            .sum();
        Ok(l2 + slopes / h)
    }

    pub fn norm_y(&self) -> f64 {
        self.inner_y(self).unwrap_or(0.0).max(0.0).sqrt()
    }

    /// Exact `L^2` pairing of the piecewise-affine interpolants (mass matrix).
    pub fn inner_l2_exact(&self, other: &TimeSignal) -> Result<f64> {
        self.ensure_same_grid(other)?;
        let h = self.grid.step();
        Ok(self
            .values
            .windows(2)
            .zip(other.values.windows(2))
            .map(|(a, b)| {
                h / 6.0 * (2.0 * a[0] * b[0] + a[0] * b[1] + a[1] * b[0] + 2.0 * a[1] * b[1])
            })
            .sum())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn scale(&self, s: f64) -> TimeSignal {
        self.map(|v| v * s)
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> TimeSignal {
        TimeSignal {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: f64, other: &TimeSignal) -> Result<TimeSignal> {
        self.ensure_same_grid(other)?;
        Ok(TimeSignal {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + s * b)
                .collect(),
        })
    }

    pub fn add(&self, other: &TimeSignal) -> Result<TimeSignal> {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &TimeSignal) -> Result<TimeSignal> {
        self.axpy(-1.0, other)
    }

    /// True when the signal vanishes at `t = 0` and on `[T, 2T]`, up to `tol`.
    pub fn is_in_y(&self, tol: f64) -> bool {
        let n = self.grid.n();
        self.values[0].abs() <= tol && self.values[n..].iter().all(|v| v.abs() <= tol)
    }
}
