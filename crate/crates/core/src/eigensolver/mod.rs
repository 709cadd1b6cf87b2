//! Root finding for the dispersion function and the collocation cross-check.

pub mod collocation;
pub mod inverse;
pub mod muller;
pub mod region;
pub mod spectrum;
pub mod winding;

pub use muller::{refine_root, MullerOptions, Refined};
pub use region::{Disk, Rect, SearchRegion};
pub use spectrum::{find_spectrum, track_branch_root, EigenvalueRecord, Method, SpectrumOptions, SpectrumResult};
pub use winding::{count_zeros, Analytic, DispersionEvaluator, Evaluator, Sample};
