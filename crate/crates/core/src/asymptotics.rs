//! Large-λ eigenvalue branches.
//!
//! Branch 1 (torsion dominated) grows linearly in n along a horizontal line;
//! branch 2 (bending dominated) grows quadratically on the real axis. Both
//! come with a second-order multiplicative correction λ = λ̃ (1 + w).

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::charroots::characteristic_roots_exact;
use crate::error::{Error, Result};
use crate::model::{BeamParameters, Model};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Smallest |g2| at which the branch-1 correction formula is attempted.
pub const G2_FLOOR: f64 = 1e-8;
/// Smallest |g1| at which the branch-2 initial guess is trusted.
pub const G1_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Branch {
    One,
    Two,
}

impl Branch {
    pub fn number(self) -> u8 {
        match self {
            Branch::One => 1,
            Branch::Two => 2,
        }
    }

    pub fn from_number(k: u8) -> Option<Branch> {
        match k {
            1 => Some(Branch::One),
            2 => Some(Branch::Two),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdmissibilityOptions {
    /// Required lower bound δ on |g2| near λ̃₁,ₙ.
    pub delta: f64,
    /// Disk radius constant κ in εₙ = κ n^{-1/2}.
    pub kappa: f64,
}

impl Default for AdmissibilityOptions {
    fn default() -> Self {
        AdmissibilityOptions { delta: 0.1, kappa: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NewtonOptions {
    /// Residual tolerance relative to |r12 r21| |λ̃|^{-1/2}.
    pub tol: f64,
    pub max_iter: u32,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions { tol: 1e-12, max_iter: 50 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BranchEigenvalue {
    pub branch: Branch,
    pub n: u32,
    pub lambda_unperturbed: Complex64,
    pub correction_w: Complex64,
    pub lambda_perturbed: Complex64,
    /// Branch 1 only.
    pub admissible: Option<bool>,
    /// Lower bound on |g2| over the admissibility disk (branch 1 only).
    pub g2_lower_bound: Option<f64>,
    /// Branch 2 only.
    pub newton_iterations: Option<u32>,
    /// Branch 1 only.
    pub k1: Option<Complex64>,
    /// Final |F(w)| of the branch-2 equation.
    pub residual: Option<f64>,
    /// Branch 1: |Im ln K1| exceeded π/2, so the principal logarithm may have
    /// wrapped. Branch 2: |g1(λ̃)| was too small and Newton started from 0.
    pub flagged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralFunctions {
    pub g1: Complex64,
    pub g2: Complex64,
    pub h1: Complex64,
}

pub fn spectral_functions(lambda: Complex64, model: &Model) -> Result<SpectralFunctions> {
    if lambda == Complex64::new(0.0, 0.0) {
        return Err(Error::ZeroLambda);
    }
    let d = &model.derived;
    let bc = &model.boundary;
    let osc3 = (I * 2.0 * d.c3 * lambda.sqrt()).exp();
    Ok(SpectralFunctions {
        g1: -(I * 2.0 * d.c1 * lambda).exp() + bc.r11 - 1.0,
        g2: -osc3 - I,
        h1: bc.r22 + 2.0 * d.c4 * osc3,
    })
}

fn require_branch1(model: &Model) -> Result<()> {
    if model.boundary.r11.re <= 1.0 {
        let r = model.raw();
        return Err(Error::Branch1ConditionViolated { k2: r.k2, sqrt_gj: (r.G * r.J).sqrt() });
    }
    Ok(())
}

/// Leading-order eigenvalue λ̃ of the given branch.
pub fn unperturbed_branch(branch: Branch, n: u32, model: &Model) -> Result<Complex64> {
    let d = &model.derived;
    let nf = n as f64;
    match branch {
        Branch::One => {
            require_branch1(model)?;
            let shift = (model.boundary.r11.re - 1.0).ln() / (2.0 * d.c1);
            Ok(Complex64::new(nf * PI / d.c1, -shift))
        }
        Branch::Two => Ok(Complex64::new((nf - 0.25).powi(2) * PI * PI / (d.c3 * d.c3), 0.0)),
    }
}

/// The same leading-order eigenvalues written directly in the physical
/// constants, independent of the derived-constant pipeline.
pub fn unperturbed_branch_physical(branch: Branch, n: u32, p: &BeamParameters) -> Result<Complex64> {
    let nf = n as f64;
    match branch {
        Branch::One => {
            let root = (p.G * p.J).sqrt();
            if p.k2 <= root {
                return Err(Error::Branch1ConditionViolated { k2: p.k2, sqrt_gj: root });
            }
            let base = p.L * (p.J / p.G).sqrt();
            Ok(Complex64::new(
                nf * PI / base,
                ((p.k2 + root) / (p.k2 - root)).ln() / (2.0 * base),
            ))
        }
        Branch::Two => {
            let d = p.m * p.J - p.S * p.S;
            Ok(Complex64::new(
                (nf - 0.25).powi(2) * PI * PI / (p.L * p.L * (d / (p.E * p.J)).sqrt()),
                0.0,
            ))
        }
    }
}

/// Whether n belongs to the admissible subset N*, together with the lower
/// bound on |g2| over the disk of radius κ n^{-1/2} around λ̃₁,ₙ.
///
/// The bound is |g2(λ̃)| − ε sup|g2'|, where |g2'| = c3 |λ|^{-1/2} |e^{i2c3√λ}|
/// is maximised at the disk point closest to the origin from below.
pub fn branch1_admissible(n: u32, opts: &AdmissibilityOptions, model: &Model) -> Result<(bool, f64)> {
    let centre = unperturbed_branch(Branch::One, n, model)?;
    let eps = opts.kappa / (n as f64).sqrt();
    let g2 = spectral_functions(centre, model)?.g2.norm();
    let c3 = model.derived.c3;
    let low = centre - I * eps;
    let growth = (-2.0 * c3 * low.sqrt().im).exp();
    let nearest = (centre.norm() - eps).max(1e-12);
    let lipschitz = c3 / nearest.sqrt() * growth;
    let bound = g2 - eps * lipschitz;
    Ok((bound > opts.delta, bound))
}

pub fn perturbed_branch1(n: u32, opts: &AdmissibilityOptions, model: &Model) -> Result<BranchEigenvalue> {
    let lt = unperturbed_branch(Branch::One, n, model)?;
    let (admissible, bound) = branch1_admissible(n, opts, model)?;
    let sf = spectral_functions(lt, model)?;
    if sf.g2.norm() < G2_FLOOR {
        return Err(Error::G2TooSmall { n, magnitude: sf.g2.norm() });
    }
    let bc = &model.boundary;
    let c1 = model.derived.c1;
    let s = lt.sqrt().inv();
    let r11m1 = bc.r11 - 1.0;
    let q = I * sf.h1 / sf.g2;
    let num = 1.0 + (q + bc.r11 * bc.rhat11 / r11m1 - I * bc.r12 * bc.r21 / (r11m1 * sf.g2)) * s;
    let den = 1.0 + q * s;
    let k1 = num / den;
    let log_k = k1.ln();
    let w = -I / (2.0 * c1) * lt.inv() * log_k;
    Ok(BranchEigenvalue {
        branch: Branch::One,
        n,
        lambda_unperturbed: lt,
        correction_w: w,
        lambda_perturbed: lt * (1.0 + w),
        admissible: Some(admissible),
        g2_lower_bound: Some(bound),
        newton_iterations: None,
        k1: Some(k1),
        residual: None,
        flagged: log_k.im.abs() > PI / 2.0,
    })
}

/// Left-hand side of the branch-2 correction equation and its w-derivative.
pub fn branch2_equation(w: Complex64, lt: Complex64, model: &Model) -> (Complex64, Complex64) {
    let bc = &model.boundary;
    let d = &model.derived;
    let s = lt.sqrt();
    let front = (I * bc.r22 + 2.0 * d.c4) / s - d.c3 * s * w;
    let osc = (I * 2.0 * d.c1 * lt).exp() * (I * 2.0 * d.c1 * lt * w).exp();
    let back = -osc + bc.r11 - 1.0;
    let value = front * back - I * bc.r12 * bc.r21 / s;
    let deriv = -d.c3 * s * back + front * (-osc * I * 2.0 * d.c1 * lt);
    (value, deriv)
}

pub fn perturbed_branch2(n: u32, opts: &NewtonOptions, model: &Model) -> Result<BranchEigenvalue> {
    if n == 0 {
        return Err(Error::InvalidArgument("branch index must be at least 1".into()));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidArgument("Newton tolerance must be positive".into()));
    }
    let lt = unperturbed_branch(Branch::Two, n, model)?;
    let bc = &model.boundary;
    let d = &model.derived;
    let g1 = spectral_functions(lt, model)?.g1;
    let small_g1 = g1.norm() < G1_FLOOR;
    let mut w = if small_g1 {
        Complex64::new(0.0, 0.0)
    } else {
        ((I * bc.r22 + 2.0 * d.c4) - I * bc.r12 * bc.r21 / g1) / (d.c3 * lt)
    };
    let target = opts.tol * (bc.r12 * bc.r21).norm() / lt.norm().sqrt();
    let (mut f, mut df) = branch2_equation(w, lt, model);
    let mut iterations = 0;
    while f.norm() > target {
        if iterations >= opts.max_iter || df.norm() == 0.0 || !f.is_finite() {
            return Err(Error::NewtonDivergence { n, residual: f.norm() });
        }
        iterations += 1;
        let step = f / df;
        let mut damping = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let trial = w - step * damping;
            let (ft, dft) = branch2_equation(trial, lt, model);
            if ft.norm() < f.norm() {
                w = trial;
                f = ft;
                df = dft;
                accepted = true;
                break;
            }
            damping *= 0.5;
        }
        if !accepted {
            // No decrease is possible at this precision; stop if we are at the
            // rounding floor, otherwise report divergence.
            if f.norm() <= 1e3 * target {
                break;
            }
            return Err(Error::NewtonDivergence { n, residual: f.norm() });
        }
    }
    Ok(BranchEigenvalue {
        branch: Branch::Two,
        n,
        lambda_unperturbed: lt,
        correction_w: w,
        lambda_perturbed: lt * (1.0 + w),
        admissible: None,
        g2_lower_bound: None,
        newton_iterations: Some(iterations),
        k1: None,
        residual: Some(f.norm()),
        flagged: small_g1,
    })
}

/// Perturbed eigenvalues for n in `ns`, sorted by n. Failures are kept per
/// index so that one bad n does not hide the others.
pub fn branch_sweep(
    branch: Branch,
    ns: std::ops::RangeInclusive<u32>,
    adm: &AdmissibilityOptions,
    newton: &NewtonOptions,
    model: &Model,
) -> Vec<(u32, Result<BranchEigenvalue>)> {
    let ns: Vec<u32> = ns.collect();
    ns.par_iter()
        .map(|&n| {
            let r = match branch {
                Branch::One => perturbed_branch1(n, adm, model),
                Branch::Two => perturbed_branch2(n, newton, model),
            };
            (n, r)
        })
        .collect()
}

/// The pieces of the reduced spectral equation D1 − D2 = O(λ^{-3/2}).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedTerms {
    pub h1: Complex64,
    pub h2: Complex64,
    pub d1: Complex64,
    pub d1_tilde: Complex64,
    pub d2: Complex64,
    /// Coefficients of 1, λ^{-1/2} and λ^{-1} in D1.
    pub d1_orders: [Complex64; 3],
}

/// Evaluates H1, H2, D̃1, D1 and D2 at λ.
///
/// H1 and H2 use the exact exponentials e1² = exp(2ζ₁L) and e3² = exp(2ζ₃L).
/// Their leading forms exp(i2c₁λ) and exp(i2c₃√λ) differ at relative order
/// λ^{-1/2}, which would swamp the λ^{-1} terms.
pub fn reduced_equation_terms(lambda: Complex64, model: &Model) -> Result<ReducedTerms> {
    if lambda == Complex64::new(0.0, 0.0) {
        return Err(Error::ZeroLambda);
    }
    let roots = characteristic_roots_exact(lambda, &model.derived)?;
    let l = model.raw().L;
    let e1s = (2.0 * roots.get(1) * l).exp();
    let e3s = (2.0 * roots.get(3) * l).exp();
    let bc = &model.boundary;
    let (a3, a4) = (model.derived.a3, model.derived.a4);
    let h1 = -e1s + bc.r11 - 1.0;
    let h2 = -e3s - I;
    let one_m_i = Complex64::new(1.0, -1.0);
    let one_p_i = Complex64::new(1.0, 1.0);
    let d1_tilde = I * bc.r22 * (bc.rhat22 - bc.d1) + I * 4.0 * a4 * e3s
        - (2.0 * a4 / one_m_i) * ((1.0 - I * a3) / a3) * (I * e3s + 1.0)
        - I * (2.0 * a4 / one_p_i) * ((1.0 + I * a3) / a3) * e3s;
    let orders = [
        h1 * h2,
        I * bc.r22 * h1 + bc.r11 * bc.rhat11 * h2,
        d1_tilde * h1 + I * bc.r11 * bc.rhat11 * bc.r22 + bc.r11 * bc.rtilde11 * h2,
    ];
    let s = lambda.sqrt().inv();
    let d1 = orders[0] + orders[1] * s + orders[2] * s * s;
    let d2 = I * bc.r12 * bc.r21 * s * (1.0 - 2.0 * bc.rhat12 * s);
    Ok(ReducedTerms { h1, h2, d1, d1_tilde, d2, d1_orders: orders })
}

/// Left-hand side of the second-order spectral equation at λ.
pub fn second_order_equation(lambda: Complex64, model: &Model) -> Result<Complex64> {
    let sf = spectral_functions(lambda, model)?;
    let bc = &model.boundary;
    Ok(sf.g1 * sf.g2
        + (I * sf.g1 * sf.h1 + bc.r11 * bc.rhat11 * sf.g2 - I * bc.r12 * bc.r21) / lambda.sqrt())
}

/// Spacing between neighbouring leading-order eigenvalues near index n.
pub fn local_spacing(branch: Branch, n: u32, model: &Model) -> f64 {
    let d = &model.derived;
    match branch {
        Branch::One => PI / d.c1,
        Branch::Two => {
            let nf = n as f64;
            ((nf + 0.75).powi(2) - (nf - 0.25).powi(2)) * PI * PI / (d.c3 * d.c3)
        }
    }
}
