//! Exact reflection matrices and the rescaled dispersion determinant.
//!
//! Eigenvalues of the harvester operator are the zeros of
//! det(Ẽ R₁ Ẽ − diag(1,1,e₅⁻¹) A₃⁻¹B₃ diag(1,1,e₅⁻¹)), with Ẽ = diag(e₁, e₃, 1)
//! and eⱼ = exp(ζⱼ L). Only e₁, e₃ and e₅⁻¹ are formed, and all three stay
//! bounded in the search half plane.

use num_complex::Complex64;

use crate::charroots::{characteristic_roots_exact, CharacteristicRoots};
use crate::error::{Error, Result};
use crate::linalg::{inverse3, leibniz_scale, M3};
use crate::model::Model;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Radius of the disk around the circuit pole i/(Cp R) that is never evaluated.
pub const POLE_EXCLUSION_RADIUS: f64 = 1e-2;

/// Lowest imaginary part at which evaluation is allowed.
pub const MIN_IMAG: f64 = -1.0;

/// Distance to the pole, in exclusion radii, below which a value is flagged.
const NEAR_POLE_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReflectionAssembly {
    pub lambda: Complex64,
    pub roots: CharacteristicRoots,
    pub r1: M3,
    pub r2_scaled: M3,
    pub e1: Complex64,
    pub e3: Complex64,
    pub e5_inv: Complex64,
    pub det_a1: Complex64,
    pub det_a3: Complex64,
}

impl ReflectionAssembly {
    /// Ẽ R₁ Ẽ − R₂ (scaled).
    pub fn r3(&self) -> M3 {
        let e = [self.e1, self.e3, Complex64::new(1.0, 0.0)];
        M3::from_fn(|i, j| e[i] * self.r1[(i, j)] * e[j] - self.r2_scaled[(i, j)])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionValue {
    pub lambda: Complex64,
    pub value: Complex64,
    /// Leibniz magnitude scale of the rescaled matrix: the sum over
    /// permutations of products of entry magnitudes. |value| / condition is a
    /// scale-free measure of how close λ is to an eigenvalue.
    pub condition: f64,
    pub near_pole: bool,
}

impl DispersionValue {
    pub fn relative(&self) -> f64 {
        self.value.norm() / self.condition
    }
}

/// The Vandermonde-like matrix with rows 1, ζ, ζ⁴ over ζ₁, ζ₃, ζ₅.
pub fn a1_matrix(roots: &CharacteristicRoots) -> M3 {
    let z = roots.odd();
    M3::from_fn(|i, j| match i {
        0 => Complex64::new(1.0, 0.0),
        1 => z[j],
        _ => z[j].powi(4),
    })
}

/// The matrix B₁ with A₁ R₁ = B₁.
pub fn b1_matrix(roots: &CharacteristicRoots) -> M3 {
    let z = roots.odd();
    let a1 = a1_matrix(roots);
    M3::from_fn(|i, j| if i == 1 { z[j] } else { -a1[(i, j)] })
}

/// R₁ = −I + 2A₁⁻¹B₂, where B₂ carries ζ in its second row only.
pub fn left_reflection_matrix(roots: &CharacteristicRoots) -> Result<(M3, Complex64)> {
    let a1 = a1_matrix(roots);
    let (inv, det) = inverse3(&a1).ok_or(Error::SingularA1(roots.lambda))?;
    let z = roots.odd();
    let r1 = M3::from_fn(|i, j| {
        let delta = if i == j { 1.0 } else { 0.0 };
        2.0 * inv[(i, 1)] * z[j] - delta
    });
    Ok((r1, det))
}

/// ĉ = ik₁ − (C_I C_D / C_p) / (λ − i/(C_p R)).
pub fn c_hat(lambda: Complex64, model: &Model) -> Complex64 {
    let r = model.raw();
    I * r.k1 - (r.CI * r.CD / r.Cp) / (lambda - model.params.pole())
}

fn check_pole(lambda: Complex64, model: &Model) -> Result<()> {
    let pole = model.params.pole();
    if (lambda - pole).norm() < POLE_EXCLUSION_RADIUS {
        return Err(Error::PoleProximity { lambda, pole, radius: POLE_EXCLUSION_RADIUS });
    }
    Ok(())
}

/// Columns of A₃ and B₃ for the right-end conditions.
pub fn a3_b3_matrices(lambda: Complex64, roots: &CharacteristicRoots, model: &Model) -> (M3, M3) {
    let r = model.raw();
    let ch = c_hat(lambda, model);
    let z = roots.odd();
    let l2 = lambda * lambda;
    let l3 = l2 * lambda;
    let a3 = M3::from_fn(|i, j| {
        let zj = z[j];
        match i {
            0 => zj.powi(3),
            1 => r.E * zj * zj + ch * lambda * zj,
            _ => {
                r.E * r.G * zj.powi(5) + I * r.E * r.k2 * lambda * zj.powi(4)
                    - r.G * r.m * l2 * zj
                    - I * r.m * r.k2 * l3
            }
        }
    });
    let b3 = M3::from_fn(|i, j| {
        let zj = z[j];
        match i {
            0 => zj.powi(3),
            1 => ch * lambda * zj - r.E * zj * zj,
            _ => {
                r.E * r.G * zj.powi(5) - I * r.E * r.k2 * lambda * zj.powi(4) - r.G * r.m * l2 * zj
                    + I * r.m * r.k2 * l3
            }
        }
    });
    (a3, b3)
}

/// diag(1,1,e₅⁻¹) A₃⁻¹B₃ diag(1,1,e₅⁻¹) with the determinant of A₃.
pub fn right_reflection_scaled(
    lambda: Complex64,
    roots: &CharacteristicRoots,
    model: &Model,
) -> Result<(M3, Complex64)> {
    check_pole(lambda, model)?;
    let (a3, b3) = a3_b3_matrices(lambda, roots, model);
    let (inv, det) = inverse3(&a3).ok_or(Error::SingularA3(lambda))?;
    let m = inv * b3;
    let e5_inv = (-roots.get(5) * model.raw().L).exp();
    let s = [Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0), e5_inv];
    Ok((M3::from_fn(|i, j| s[i] * m[(i, j)] * s[j]), det))
}

fn check_lambda(lambda: Complex64) -> Result<()> {
    if lambda == Complex64::new(0.0, 0.0) {
        return Err(Error::ZeroLambda);
    }
    if !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!("lambda = {lambda} is not finite")));
    }
    if lambda.im < MIN_IMAG {
        return Err(Error::InvalidArgument(format!(
            "lambda = {lambda} lies below Im = {MIN_IMAG}"
        )));
    }
    Ok(())
}

pub fn reflection_assembly(lambda: Complex64, model: &Model) -> Result<ReflectionAssembly> {
    check_lambda(lambda)?;
    check_pole(lambda, model)?;
    let roots = characteristic_roots_exact(lambda, &model.derived)?;
    let (r1, det_a1) = left_reflection_matrix(&roots)?;
    let (r2_scaled, det_a3) = right_reflection_scaled(lambda, &roots, model)?;
    let l = model.raw().L;
    Ok(ReflectionAssembly {
        lambda,
        roots,
        r1,
        r2_scaled,
        e1: (roots.get(1) * l).exp(),
        e3: (roots.get(3) * l).exp(),
        e5_inv: (-roots.get(5) * l).exp(),
        det_a1,
        det_a3,
    })
}

pub fn dispersion_function(lambda: Complex64, model: &Model) -> Result<DispersionValue> {
    let asm = reflection_assembly(lambda, model)?;
    let r3 = asm.r3();
    let value = crate::linalg::det3(&r3);
    let condition = leibniz_scale(&r3);
    let near_pole =
        (lambda - model.params.pole()).norm() < NEAR_POLE_FACTOR * POLE_EXCLUSION_RADIUS;
    Ok(DispersionValue { lambda, value, condition, near_pole })
}

/// Leading large-λ form of det A₃: i2Ek₁a₁⁴a₃⁴(Ga₁+k₂)λ⁸.
pub fn det_a3_leading(lambda: Complex64, model: &Model) -> Complex64 {
    let r = model.raw();
    let d = &model.derived;
    I * (2.0 * r.E * r.k1 * d.a1.powi(4) * d.a3.powi(4) * (r.G * d.a1 + r.k2)) * lambda.powi(8)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BeamParameters, Strictness};

    fn model() -> Model {
        Model::new(BeamParameters::default(), Strictness::default()).unwrap()
    }

    #[test]
    fn left_reflection_defining_relation() {
        let m = model();
        for lam in [Complex64::new(3.0, 0.7), Complex64::new(40.0, 2.0), Complex64::new(0.4, 5.0)] {
            let roots = characteristic_roots_exact(lam, &m.derived).unwrap();
            let (r1, _) = left_reflection_matrix(&roots).unwrap();
            let a1 = a1_matrix(&roots);
            let res = (a1 * r1 - b1_matrix(&roots)).norm();
            assert!(res <= 1e-10 * a1.norm() * r1.norm(), "{lam}: {res}");
        }
    }

    #[test]
    fn r1_entry_expansion() {
        let m = model();
        let roots = characteristic_roots_exact(100.0.into(), &m.derived).unwrap();
        let (r1, _) = left_reflection_matrix(&roots).unwrap();
        assert!((r1[(1, 1)] + I).norm() < 1.0 / 100.0, "{}", r1[(1, 1)]);
    }

    #[test]
    fn right_reflection_defining_relation() {
        let m = model();
        let lam = Complex64::new(12.0, 1.5);
        let roots = characteristic_roots_exact(lam, &m.derived).unwrap();
        let (a3, b3) = a3_b3_matrices(lam, &roots, &m);
        let (inv, _) = inverse3(&a3).unwrap();
        let res = (a3 * (inv * b3) - b3).norm();
        assert!(res <= 1e-10 * b3.norm());
    }

    #[test]
    fn pole_is_excluded() {
        let m = model();
        assert!(matches!(
            dispersion_function(Complex64::new(0.0, 1.0), &m),
            Err(Error::PoleProximity { .. })
        ));
        let ok = dispersion_function(Complex64::new(0.0, 1.05), &m).unwrap();
        assert!(ok.near_pole && ok.value.is_finite());
    }

    #[test]
    fn generic_point_is_not_a_root() {
        let v = dispersion_function(Complex64::new(1.0, 1.0), &model()).unwrap();
        assert!(v.relative() > 1e-3, "{}", v.relative());
    }

    #[test]
    fn deterministic() {
        let m = model();
        let lam = Complex64::new(7.3, 0.9);
        assert_eq!(dispersion_function(lam, &m).unwrap(), dispersion_function(lam, &m).unwrap());
    }

    #[test]
    fn bounded_along_horizontal_segment() {
        let m = model();
        let base = reflection_assembly(Complex64::new(10.0, 1.0), &m).unwrap();
        let scale = base.r3().iter().map(|x| x.norm()).fold(0.0, f64::max);
        for k in 0..=49 {
            let lam = Complex64::new(10.0 + 10.0 * k as f64, 1.0);
            let r3 = reflection_assembly(lam, &m).unwrap().r3();
            let big = r3.iter().map(|x| x.norm()).fold(0.0, f64::max);
            assert!(big <= 1e3 * scale, "{lam}: {big}");
        }
    }
}
