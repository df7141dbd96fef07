//! Monte-Carlo laboratory for backward stochastic differential equations
//! whose generator has stochastic, possibly unbounded, Lipschitz moduli.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod brownian;
pub mod catalog;
pub mod certificate;
pub mod coefficients;
pub mod comparison;
pub mod constants;
pub mod diagnostics;
pub mod error;
pub mod grid;
mod layout;
pub mod model;
pub mod norms;
pub mod oracle;
pub mod regression;
pub mod rng;
pub mod solver;
pub mod weights;

pub use error::{BsdeError, Result};

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
