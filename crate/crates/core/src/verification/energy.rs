//! Energy inner product, the reference norm ‖·‖₁ and the constants relating
//! them.

use num_complex::Complex64;
use serde::Serialize;

use crate::chebyshev as cheb;
use crate::error::{Error, Result};
use crate::model::BeamParameters;
use crate::verification::state::StateFunction;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Series sampled on a finer grid together with quadrature weights for ∫₀ᴸ.
struct Fine {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Fine {
    fn for_state(f: &StateFunction) -> Fine {
        let m = 2 * f.degree();
        let half = 0.5 * f.length();
        Fine {
            nodes: cheb::lobatto_nodes(m),
            weights: cheb::clenshaw_curtis_weights(m).into_iter().map(|w| w * half).collect(),
        }
    }

    fn sample(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        self.nodes.iter().map(|&s| cheb::evaluate(coeffs, s)).collect()
    }
}

/// The eight fields entering the energy: f₀'', f₁, f₂', f₃ on the fine grid.
fn energy_fields(f: &StateFunction, fine: &Fine) -> [Vec<Complex64>; 4] {
    [
        fine.sample(&f.derivative_coefficients(0, 2)),
        fine.sample(&f.coefficients(1)),
        fine.sample(&f.derivative_coefficients(2, 1)),
        fine.sample(&f.coefficients(3)),
    ]
}

/// ⟨f, g⟩ in the energy space, linear in f and antilinear in g.
pub fn energy_inner_product(f: &StateFunction, g: &StateFunction, p: &BeamParameters) -> Result<Complex64> {
    if !f.same_grid(g) {
        return Err(Error::GridMismatch);
    }
    let fine = Fine::for_state(f);
    let a = energy_fields(f, &fine);
    let b = energy_fields(g, &fine);
    let mut acc = Complex64::new(0.0, 0.0);
    for (j, w) in fine.weights.iter().enumerate() {
        let cross = a[1][j] * b[3][j].conj() + a[3][j] * b[1][j].conj();
        let local = a[0][j] * b[0][j].conj() * p.E
            + a[1][j] * b[1][j].conj() * p.m
            + a[2][j] * b[2][j].conj() * p.G
            + a[3][j] * b[3][j].conj() * p.J
            + cross * p.S;
        acc += local * *w;
    }
    Ok(acc * 0.5 + f.f4 * g.f4.conj() * (0.5 * p.Cp))
}

/// Squared reference norm ∫(|f₀|² + |f₀'|² + |f₀''|² + |f₁|² + |f₂|² + |f₂'|² + |f₃|²) + |f₄|².
pub fn product_norm1(f: &StateFunction) -> Result<f64> {
    let fine = Fine::for_state(f);
    let fields = [
        f.coefficients(0),
        f.derivative_coefficients(0, 1),
        f.derivative_coefficients(0, 2),
        f.coefficients(1),
        f.coefficients(2),
        f.derivative_coefficients(2, 1),
        f.coefficients(3),
    ];
    let mut total = 0.0;
    for c in &fields {
        let v = fine.sample(c);
        total += v.iter().zip(fine.weights.iter()).map(|(x, w)| x.norm_sqr() * w).sum::<f64>();
    }
    Ok(total + f.f4.norm_sqr())
}

/// c and C with c‖f‖₁² ≤ ⟨f, f⟩ ≤ C‖f‖₁² on the energy space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormConstants {
    pub lower: f64,
    pub upper: f64,
}

pub fn norm_constants(p: &BeamParameters) -> NormConstants {
    let l2 = p.L * p.L;
    let c0 = 1.0 / (l2 * l2 + l2 + 1.0);
    let c2 = 1.0 / (l2 + 1.0);
    let lower = 0.5 * [p.E * c0, p.m - p.S, p.G * c2, p.J - p.S, p.Cp].into_iter().fold(f64::INFINITY, f64::min);
    let upper = 0.5 * [p.E, p.m + p.S, p.G, p.J + p.S, p.Cp].into_iter().fold(0.0, f64::max);
    NormConstants { lower, upper }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormEquivalence {
    pub energy: f64,
    pub norm1: f64,
    pub ratio: f64,
    pub holds: bool,
}

/// Compares ⟨f, f⟩ with ‖f‖₁² against the two constants.
pub fn norm_equivalence_check(f: &StateFunction, p: &BeamParameters) -> Result<NormEquivalence> {
    let energy = energy_inner_product(f, f, p)?.re;
    let norm1 = product_norm1(f)?;
    let k = norm_constants(p);
    let slack = 1e-12 * norm1;
    Ok(NormEquivalence {
        energy,
        norm1,
        ratio: energy / norm1,
        holds: energy >= k.lower * norm1 - slack && energy <= k.upper * norm1 + slack,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormSweep {
    pub constants: NormConstants,
    pub samples: usize,
    pub violations: Vec<NormEquivalence>,
    pub min_ratio: f64,
    pub max_ratio: f64,
}

/// Norm equivalence over `samples` random admissible states drawn from a
/// seeded generator.
pub fn norm_equivalence_sweep(samples: usize, p: &BeamParameters, seed: u64) -> Result<NormSweep> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = NormSweep {
        constants: norm_constants(p),
        samples,
        violations: Vec::new(),
        min_ratio: f64::INFINITY,
        max_ratio: 0.0,
    };
    for _ in 0..samples {
        let f = StateFunction::random_admissible(&mut rng, p.L, 32, 12);
        let r = norm_equivalence_check(&f, p)?;
        out.min_ratio = out.min_ratio.min(r.ratio);
        out.max_ratio = out.max_ratio.max(r.ratio);
        if !r.holds {
            out.violations.push(r);
        }
    }
    Ok(out)
}
