//! Boundary control side of the focusing method.
//!
//! Everything here works from the Neumann-to-Dirichlet map alone: a causal
//! convolution kernel sampled on a uniform time grid over `[0, 2T]`. The
//! crate knows nothing about the medium; it builds the connecting operator,
//! solves the regularized normal equations and evaluates the functionals
//! that they minimize.

pub mod error;
pub mod gmres;
pub mod neumann;
pub mod ntd;
pub mod operator;
pub mod ops;
pub mod par;
pub mod signal;
pub mod solve;

pub use error::{BoundaryError, Result};
pub use gmres::{gmres, GmresConfig, GmresOutcome};
pub use neumann::{
    estimate_norm, neumann_iterate, neumann_iterate_with_norm, NeumannConfig, NeumannOutcome,
    OmegaChoice,
};
pub use ntd::NtdOperator;
pub use operator::{materialize, BoundaryOperator, DenseMatrix, LinearOperator};
pub use par::Execution;
pub use signal::{TimeGrid, TimeSignal};
pub use solve::{
    functional_f1, functional_f2, solve_a, solve_h, NormBound, RegularizationConfig,
    RegularizationSchedule, SolveMethod, SolveReport,
};
