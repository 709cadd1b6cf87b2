//! Energy-space states, inner products and spectrum cross-checks.

pub mod energy;
pub mod perturbation;
pub mod spectrum_checks;
pub mod state;
pub mod suite;
