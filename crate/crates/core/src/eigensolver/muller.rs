use num_complex::Complex64;
use serde::Serialize;

use super::winding::Evaluator;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MullerOptions {
    /// Convergence when |f| ≤ tol·scale.
    pub tol: f64,
    /// Looser bound accepted once the step has shrunk to rounding level, for
    /// roots where evaluation noise keeps |f|/scale above `tol`.
    pub stall_tol: f64,
    pub max_iter: u32,
    /// Largest single step, usually the diameter of the originating box.
    pub step_limit: f64,
    /// Offset of the two outer seeds from the starting point.
    pub spread: f64,
}

impl Default for MullerOptions {
    fn default() -> Self {
        MullerOptions { tol: 1e-10, stall_tol: 1e-8, max_iter: 100, step_limit: f64::INFINITY, spread: 1e-3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Refined {
    pub lambda: Complex64,
    /// |f(λ)| / scale at the returned point.
    pub residual: f64,
    pub iterations: u32,
    pub converged: bool,
}

impl Refined {
    pub fn into_result(self, seed: Complex64) -> Result<Refined> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NotConverged { seed, residual: self.residual })
        }
    }
}

/// Muller iteration from λ₀ − h, λ₀ + h, λ₀.
///
/// Iteration continues past the tolerance until the step stalls, so closed
/// forms are recovered to rounding level. The best iterate is returned;
/// evaluation errors propagate.
pub fn refine_root<E: Evaluator + ?Sized>(lambda0: Complex64, f: &E, opts: &MullerOptions) -> Result<Refined> {
    let h = Complex64::new(opts.spread.min(0.5 * opts.step_limit), 0.0);
    let mut x = [lambda0 - h, lambda0 + h, lambda0];
    let mut fx = [Complex64::new(0.0, 0.0); 3];
    let mut best = Refined { lambda: lambda0, residual: f64::INFINITY, iterations: 0, converged: false };
    for k in 0..3 {
        let s = f.eval(x[k])?;
        fx[k] = s.value;
        if s.relative() <= best.residual {
            best.lambda = x[k];
            best.residual = s.relative();
        }
    }
    let tiny = 4.0 * f64::EPSILON;
    let mut stalled = false;
    for it in 1..=opts.max_iter {
        let d10 = (fx[1] - fx[0]) / (x[1] - x[0]);
        let d21 = (fx[2] - fx[1]) / (x[2] - x[1]);
        let d20 = (fx[2] - fx[0]) / (x[2] - x[0]);
        let a = (d21 - d10) / (x[2] - x[0]);
        let w = d21 + d20 - d10;
        let disc = (w * w - 4.0 * fx[2] * a).sqrt();
        let den = if (w + disc).norm() >= (w - disc).norm() { w + disc } else { w - disc };
        let mut step = if den.norm() > 0.0 {
            -2.0 * fx[2] / den
        } else {
            // Flat model: nudge by the last spacing.
            x[2] - x[1]
        };
        if !step.is_finite() {
            break;
        }
        if step.norm() > opts.step_limit {
            step *= opts.step_limit / step.norm();
        }
        let next = x[2] + step;
        let s = f.eval(next)?;
        x = [x[1], x[2], next];
        fx = [fx[1], fx[2], s.value];
        best.iterations = it;
        if s.relative() <= best.residual {
            best.lambda = next;
            best.residual = s.relative();
        }
        let size = next.norm().max(1.0);
        stalled = step.norm() <= tiny * size;
        if s.value == Complex64::new(0.0, 0.0)
            || stalled
            || (best.residual <= opts.tol && step.norm() <= 1e-12 * size)
        {
            break;
        }
    }
    best.converged = best.residual <= opts.tol || (stalled && best.residual <= opts.stall_tol);
    Ok(best)
}
