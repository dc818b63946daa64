//! Media, forward wave solver and focusing experiments.
//!
//! The forward solver synthesizes the Neumann-to-Dirichlet data that the
//! boundary crate consumes and supplies the volume integrals used to check
//! boundary-only identities. The control algorithm itself never sees a
//! profile or a field snapshot.

pub mod cache;
pub mod error;
pub mod forward;
pub mod lab;
pub mod medium;

pub use cache::{CacheStatus, KernelCache};
pub use error::{CoreError, Result};
pub use forward::{
    build_ntd, field_energy, solve_neumann, volume_inner_product, FieldSnapshot, ForwardOutput,
    SolverGrid, SpatialGrid,
};
pub use lab::FocusingLab;
pub use medium::{
    Bounds, Bump, Interval, MediumProfile, ProfileShape, ProfileSpec, TravelTimeTable,
};
