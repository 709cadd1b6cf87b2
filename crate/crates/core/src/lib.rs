//! Spectrum of the piezoelectric coupled bending-torsion beam harvester.

// Negated float comparisons are deliberate: a NaN must take the failure path.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod charroots;
pub mod chebyshev;
pub mod cli;
pub mod dispersion;
pub mod eigensolver;
pub mod error;
pub mod fit;
pub mod linalg;
pub mod model;
pub mod output;
pub mod verification;

pub use error::{Error, Result};
pub use num_complex::Complex64;
