//! The explicit inverse of the harvester operator and the operator itself,
//! both acting on Chebyshev series.

use num_complex::Complex64;

use crate::chebyshev as cheb;
use crate::error::{Error, Result};
use crate::model::Model;
use crate::verification::state::StateFunction;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Largest tolerated relative disagreement between the inverse computed on
/// the full grid and on the half grid.
pub const RICHARDSON_TOL: f64 = 1e-8;

/// ∫₀ᵗ in coefficient space.
fn int_from_zero(c: &[Complex64], length: f64) -> Vec<Complex64> {
    cheb::scale(&cheb::integral(c), 0.5 * length)
}

/// ∫ₜᴸ in coefficient space.
fn int_to_end(c: &[Complex64], length: f64) -> Vec<Complex64> {
    let a = int_from_zero(c, length);
    let total = cheb::value_at_right(&a);
    let mut out = cheb::scale(&a, -1.0);
    out[0] += total;
    out
}

/// Series of t and t² on [0, L].
fn t_series(length: f64) -> (Vec<Complex64>, Vec<Complex64>) {
    let c = |x: f64| Complex64::new(x, 0.0);
    let l2 = length * length;
    (
        vec![c(0.5 * length), c(0.5 * length)],
        vec![c(3.0 * l2 / 8.0), c(0.5 * l2), c(l2 / 8.0)],
    )
}

fn inverse_on_grid(g: &StateFunction, model: &Model) -> StateFunction {
    let r = model.raw();
    let l = g.length();
    let n = g.degree();
    let gc: Vec<Vec<Complex64>> = (0..4).map(|k| g.coefficients(k)).collect();
    let g0_slope = cheb::value_at_right(&g.derivative_coefficients(0, 1));
    let g2_end = cheb::value_at_right(&gc[2]);
    let (t1, t2) = t_series(l);

    let bend = cheb::add(&cheb::scale(&gc[1], r.m), &cheb::scale(&gc[3], r.S));
    let inner = int_to_end(&int_to_end(&bend, l), l);
    let quad = int_from_zero(&int_from_zero(&inner, l), l);
    let corner = I * (r.CI * r.CD * r.R - r.k1) / (2.0 * r.E) * g0_slope
        + I * (r.CI * r.Cp * r.R) / (2.0 * r.E) * g.f4;
    let f0: Vec<Complex64> = cheb::add(
        &quad.iter().map(|c| c * (-I / r.E)).collect::<Vec<_>>(),
        &t2.iter().map(|c| c * corner).collect::<Vec<_>>(),
    );

    let twist = cheb::add(&cheb::scale(&gc[1], r.S), &cheb::scale(&gc[3], r.J));
    let dbl = int_from_zero(&int_to_end(&twist, l), l);
    let f2: Vec<Complex64> = cheb::add(
        &dbl.iter().map(|c| c * (-I / r.G)).collect::<Vec<_>>(),
        &t1.iter().map(|c| c * (-I * r.k2 / r.G * g2_end)).collect::<Vec<_>>(),
    );

    let f1: Vec<Complex64> = gc[0].iter().map(|v| I * v).collect();
    let f3: Vec<Complex64> = gc[2].iter().map(|v| I * v).collect();
    let f4 = -I * r.Cp * r.R * (g.f4 + (r.CD / r.Cp) * g0_slope);

    let mut out = StateFunction::from_coefficients(l, n, [&f0, &f1, &f2, &f3], f4);
    out.trusted_order = g.trusted_order;
    out
}

/// f = A⁻¹g by the explicit iterated-integral formulas.
///
/// The result is recomputed from the half-degree subgrid and compared at the
/// shared nodes; a relative gap above `RICHARDSON_TOL` means the grid does
/// not resolve g.
pub fn apply_inverse(g: &StateFunction, model: &Model) -> Result<StateFunction> {
    if g.length() != model.raw().L {
        return Err(Error::GridMismatch);
    }
    let f = inverse_on_grid(g, model);
    if let Some(half) = g.subsample_half() {
        if half.degree() >= 8 {
            let coarse = inverse_on_grid(&half, model);
            let scale = f.max_abs();
            if scale > 0.0 {
                let mut gap: f64 = (f.f4 - coarse.f4).norm();
                for k in [0, 2] {
                    for (j, c) in coarse.values(k).iter().enumerate() {
                        gap = gap.max((f.values(k)[2 * j] - c).norm());
                    }
                }
                let estimate = gap / scale;
                if estimate > RICHARDSON_TOL {
                    return Err(Error::GridTooCoarse { estimate });
                }
            }
        }
    }
    Ok(f)
}

/// A f for a state in the operator domain.
pub fn apply_operator(f: &StateFunction, model: &Model) -> StateFunction {
    let r = model.raw();
    let d = model.derived.D;
    let d4 = f.derivative_coefficients(0, 4);
    let d2 = f.derivative_coefficients(2, 2);
    let f1_slope = cheb::value_at_right(&f.derivative_coefficients(1, 1));
    let mix = |a: Complex64, b: Complex64| -> Vec<Complex64> {
        cheb::add(
            &d4.iter().map(|c| c * a).collect::<Vec<_>>(),
            &d2.iter().map(|c| c * b).collect::<Vec<_>>(),
        )
    };
    let c1 = mix(I * (r.E * r.J / d), I * (r.G * r.S / d));
    let c3 = mix(-I * (r.E * r.S / d), -I * (r.G * r.m / d));
    let c0: Vec<Complex64> = f.coefficients(1).iter().map(|v| -I * v).collect();
    let c2: Vec<Complex64> = f.coefficients(3).iter().map(|v| -I * v).collect();
    let c4 = I * (r.CD / r.Cp) * f1_slope + I / (r.Cp * r.R) * f.f4;
    StateFunction::from_coefficients(f.length(), f.degree(), [&c0, &c1, &c2, &c3], c4)
}

/// Residuals of the domain conditions at x = L for a state f:
/// f₀'''(L), E f₀''(L) + k₁ f₁'(L) + C_I f₄ and G f₂'(L) + k₂ f₃(L).
pub fn right_end_defects(f: &StateFunction, model: &Model) -> [Complex64; 3] {
    let r = model.raw();
    let end = |k: usize, order: usize| cheb::value_at_right(&f.derivative_coefficients(k, order));
    [
        end(0, 3),
        r.E * end(0, 2) + r.k1 * end(1, 1) + r.CI * f.f4,
        r.G * end(2, 1) + r.k2 * cheb::value_at_right(&f.coefficients(3)),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct PowerIteration {
    /// Eigenvalue of A of smallest modulus, 1/μ for the dominant μ of A⁻¹.
    pub lambda: Complex64,
    /// Change of the estimate over the last iteration.
    pub last_change: f64,
    pub iterations: u32,
}

/// Power iteration on A⁻¹ from a seeded random state, with the Rayleigh
/// quotient taken in the energy inner product.
pub fn inverse_power_iteration(model: &Model, n: usize, iterations: u32, seed: u64) -> Result<PowerIteration> {
    use crate::verification::energy::energy_inner_product;
    use rand::SeedableRng;

    let p = model.raw();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut v = StateFunction::random_admissible(&mut rng, p.L, n, 12);
    let mut lambda = Complex64::new(f64::NAN, f64::NAN);
    let mut last_change = f64::INFINITY;
    for it in 1..=iterations {
        let w = apply_inverse(&v, model)?;
        let mu = energy_inner_product(&w, &v, p)? / energy_inner_product(&v, &v, p)?;
        let next = mu.inv();
        last_change = (next - lambda).norm();
        lambda = next;
        let norm = energy_inner_product(&w, &w, p)?.re.sqrt();
        v = w.scaled(Complex64::new(1.0 / norm, 0.0));
        if last_change <= 1e-14 * lambda.norm() {
            return Ok(PowerIteration { lambda, last_change, iterations: it });
        }
    }
    Ok(PowerIteration { lambda, last_change, iterations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BeamParameters, Strictness};
    use crate::verification::energy::product_norm1;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn model() -> Model {
        Model::new(BeamParameters::default(), Strictness::default()).unwrap()
    }

    #[test]
    fn zero_maps_to_zero() {
        let m = model();
        let g = StateFunction::zero(1.0, 32);
        let f = apply_inverse(&g, &m).unwrap();
        assert_eq!(f.max_abs(), 0.0);
    }

    #[test]
    fn inverse_lands_in_the_domain() {
        let m = model();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = StateFunction::random_admissible(&mut rng, 1.0, 128, 16);
        let f = apply_inverse(&g, &m).unwrap();
        assert!(f.membership_defect() < 1e-12);
        for d in right_end_defects(&f, &m) {
            assert!(d.norm() < 1e-8, "{d}");
        }
    }

    #[test]
    fn forward_residual_small() {
        let m = model();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let g = StateFunction::random_admissible(&mut rng, 1.0, 128, 24);
        let f = apply_inverse(&g, &m).unwrap();
        let res = apply_operator(&f, &m).combine(Complex64::new(1.0, 0.0), &g, Complex64::new(-1.0, 0.0)).unwrap();
        let ratio = (product_norm1(&res).unwrap() / product_norm1(&g).unwrap()).sqrt();
        assert!(ratio < 1e-7, "{ratio}");
    }

    #[test]
    fn power_iteration_finds_lowest_mode() {
        // The determinant root of smallest modulus lies on the imaginary
        // axis; check it is a zero of the dispersion function.
        let m = model();
        let pi = inverse_power_iteration(&m, 64, 200, 1).unwrap();
        assert!(pi.last_change < 1e-10, "{pi:?}");
        let d = crate::dispersion::dispersion_function(pi.lambda, &m).unwrap();
        assert!(d.relative() < 1e-8, "{} {}", pi.lambda, d.relative());
    }

    #[test]
    fn unresolved_input_is_reported() {
        let m = model();
        let g = StateFunction::from_fn(
            1.0,
            16,
            |t| {
                let v = Complex64::new((40.0 * t).sin() * t, 0.0);
                [v, v, v, v]
            },
            Complex64::new(0.0, 0.0),
        );
        assert!(matches!(apply_inverse(&g, &m), Err(Error::GridTooCoarse { .. })));
    }
}
