//! Homogenized Dirichlet data for oscillating boundary problems of fully
//! nonlinear uniformly elliptic equations in the plane.

pub mod boundary_map;
pub mod cell;
pub mod discrepancy;
pub mod domain;
pub mod error;
pub mod expr;
pub mod lattice;
pub mod matrix;
pub mod operators;
pub mod plot;
pub mod singular;
pub mod solver;
pub mod spec;
pub mod verify;

pub use error::{Error, Result};
