//! Numerical toolkit for the Alexandrov-Bakelman-Pucci approach to sharp
//! geometric inequalities.
//!
//! The crate is organised bottom-up:
//!
//! - [`geomconst`]: dimensional constants (ball volumes, sphere areas, the
//!   codimension moment integral, sharp Michael-Simon constants).
//! - [`mesh`]: planar domains, embedded surfaces and polylines with the
//!   discrete operators the rest of the crate needs.
//! - [`neumann`]: density normalisation and the weighted Neumann solve that
//!   produces the potential `u`.
//! - [`abp`]: contact search, Jacobian bounds and coverage statistics.
//! - [`comparison`]: warped-product models, Jacobi fields and Riccati
//!   comparison.
//! - [`inequality`]: end-to-end checkers that evaluate both sides of each
//!   inequality.

// `!(x > 0.0)` is the NaN-rejecting form used throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod abp;
pub mod comparison;
pub mod error;
pub mod geomconst;
pub mod halton;
pub mod inequality;
pub mod mesh;
pub mod neumann;
pub mod quadrature;

pub use error::{Error, Result};
