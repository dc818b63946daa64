//! Discretized Neumann-to-Dirichlet map.
//!
//! The operator is stored as the boundary response `kappa` to the first hat
//! source `phi_1`. Time-translation invariance gives the response to `phi_k`
//! as `kappa` delayed by `(k - 1) h`, so on nodal values
//!
//! ```text
//! (Lambda f)_j = sum_{k=1}^{j} f_k kappa_{j-k+1}
//! ```
//!
//! which is a causal, lower-triangular Toeplitz matrix. The last node `2N`
//! is included as an input: the half hat there produces, up to time `2T`,
//! exactly the response of a full hat.

use serde::{Deserialize, Serialize};

use crate::error::{BoundaryError, Result};
use crate::par::{fill_indexed, Execution};
use crate::signal::{TimeGrid, TimeSignal};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NtdOperator {
    kernel: TimeSignal,
    #[serde(default)]
    execution: Execution,
}

impl NtdOperator {
    /// Wraps a measured `phi_1` response. The value at `t = 0` must be zero.
    pub fn from_kernel(kernel: TimeSignal) -> Result<Self> {
        let k0 = kernel.values()[0];
        if k0 != 0.0 {
            return Err(BoundaryError::NonCausalKernel(k0));
        }
        Ok(Self {
            kernel,
            execution: Execution::default(),
        })
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    pub fn execution(&self) -> Execution {
        self.execution
    }

    pub fn grid(&self) -> TimeGrid {
        self.kernel.grid()
    }

    pub fn kernel(&self) -> &TimeSignal {
        &self.kernel
    }

    /// `Lambda f`.
    pub fn apply(&self, f: &TimeSignal) -> Result<TimeSignal> {
        self.grid().ensure_same(&f.grid())?;
        let kappa = self.kernel.values();
        let fv = f.values();
        let mut out = vec![0.0; fv.len()];
        fill_indexed(self.execution, &mut out, |j| {
            if j == 0 {
                return 0.0;
            }
            // kappa index j-k+1 runs from j down to 1
            fv[1..=j]
                .iter()
                .zip(kappa[1..=j].iter().rev())
                .map(|(a, b)| a * b)
                .sum()
        });
        TimeSignal::from_values(self.grid(), out)
    }

    /// Matrix transpose of [`apply`](Self::apply) on nodal vectors.
    pub fn apply_transpose(&self, g: &TimeSignal) -> Result<TimeSignal> {
        self.grid().ensure_same(&g.grid())?;
        let kappa = self.kernel.values();
        let gv = g.values();
        let len = gv.len();
        let mut out = vec![0.0; len];
        fill_indexed(self.execution, &mut out, |k| {
            if k == 0 {
                return 0.0;
            }
            gv[k..]
                .iter()
                .zip(kappa[1..=len - k].iter())
                .map(|(a, b)| a * b)
                .sum()
        });
        TimeSignal::from_values(self.grid(), out)
    }

    /// Adjoint `Lambda^* = R Lambda R`.
    pub fn apply_adjoint(&self, f: &TimeSignal) -> Result<TimeSignal> {
        Ok(crate::ops::time_reverse(
            &self.apply(&crate::ops::time_reverse(f))?,
        ))
    }
}
