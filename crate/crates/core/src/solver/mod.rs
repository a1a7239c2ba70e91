//! Monotone finite-difference solver for Dirichlet problems.

pub mod barrier;
pub mod grid;
pub mod io;
pub mod scheme;
pub mod selling;

pub use barrier::{localization_barrier, LocalizationBarrier};
pub use grid::{Frame, Grid, NodeKind, Region};
pub use scheme::{
    discrete_comparison_check, ComparisonReport, DiscreteField, Method, Scheme, SchemeConfig,
};
