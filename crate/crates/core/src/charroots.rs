//! The six characteristic roots ζ of the spectral ODE at a fixed λ.
//!
//! The roots come in ± pairs, and ζ² solves a cubic. The exact path uses
//! Cardano's formulas, falling back to a companion-matrix eigensolve near
//! double roots. The asymptotic path evaluates the large-λ expansions. Exact
//! roots are labeled so that they line up with the asymptotic ones.

use nalgebra::Matrix3;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{DerivedConstants, Model};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Relative gap between two cubic roots below which they count as coincident.
pub const DEGENERACY_TOL: f64 = 1e-8;

/// Default lower bound on |λ| for the asymptotic expansions.
pub const ASYMPTOTIC_FLOOR: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RootKind {
    Exact,
    /// Large-λ expansion truncated after the given number of terms.
    Asymptotic { order: u8 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharacteristicRoots {
    pub lambda: Complex64,
    /// ζ₁ … ζ₆ stored at indices 0 … 5.
    pub zeta: [Complex64; 6],
    pub kind: RootKind,
    /// 1 when the labeling is unambiguous, falling toward 0 as two candidate
    /// labelings become equally plausible.
    pub label_confidence: f64,
    /// Two cubic roots coincide to within `DEGENERACY_TOL`.
    pub degenerate: bool,
}

impl CharacteristicRoots {
    /// ζⱼ with a 1-based index.
    pub fn get(&self, j: usize) -> Complex64 {
        self.zeta[j - 1]
    }

    /// The representatives ζ₁, ζ₃, ζ₅.
    pub fn odd(&self) -> [Complex64; 3] {
        [self.zeta[0], self.zeta[2], self.zeta[4]]
    }

    fn from_odd(lambda: Complex64, odd: [Complex64; 3], kind: RootKind) -> Self {
        CharacteristicRoots {
            lambda,
            zeta: [odd[0], -odd[0], odd[1], -odd[1], odd[2], -odd[2]],
            kind,
            label_confidence: 1.0,
            degenerate: false,
        }
    }
}

fn omega() -> Complex64 {
    Complex64::new(-0.5, 3f64.sqrt() / 2.0)
}

/// Residual scale for z³ + pz + q.
fn depressed_scale(p: Complex64, q: Complex64) -> f64 {
    p.norm().powf(1.5).max(q.norm())
}

fn newton_polish(z: Complex64, f: impl Fn(Complex64) -> (Complex64, Complex64)) -> Complex64 {
    let mut best = z;
    let mut best_res = f(z).0.norm();
    let mut cur = z;
    for _ in 0..3 {
        let (val, der) = f(cur);
        if der == Complex64::new(0.0, 0.0) {
            break;
        }
        cur -= val / der;
        let res = f(cur).0.norm();
        if res < best_res {
            best = cur;
            best_res = res;
        } else {
            break;
        }
    }
    best
}

fn companion_roots(p: Complex64, q: Complex64) -> [Complex64; 3] {
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let m = Matrix3::new(zero, zero, -q, one, zero, -p, zero, one, zero);
    let eig = nalgebra::linalg::Schur::new(m)
        .eigenvalues()
        .expect("complex Schur form is triangular");
    [eig[0], eig[1], eig[2]]
}

/// Roots of z³ + pz + q = 0.
///
/// The first root uses the principal cube root and the other two follow by
/// the rotations e^{±i2π/3}. Near a double root the roots come from the
/// companion matrix instead. Every root receives a Newton polish.
pub fn solve_depressed_cubic(p: Complex64, q: Complex64) -> [Complex64; 3] {
    let zero = Complex64::new(0.0, 0.0);
    if p == zero && q == zero {
        return [zero; 3];
    }
    let half_q = q / 2.0;
    let third_p = p / 3.0;
    let disc = half_q * half_q + third_p * third_p * third_p;
    let size = half_q.norm_sqr() + third_p.norm().powi(3);
    let cubic = |z: Complex64| (z * z * z + p * z + q, 3.0 * z * z + p);

    let raw = if disc.norm() <= DEGENERACY_TOL * size {
        companion_roots(p, q)
    } else {
        let mut s = disc.sqrt();
        if (-half_q + s).norm() < (-half_q - s).norm() {
            s = -s;
        }
        let u = (-half_q + s).powf(1.0 / 3.0);
        // The second cube root is tied to the first by u v = p/3.
        let v = third_p / u;
        let w = omega();
        let w2 = w * w;
        [u - v, w * u - w2 * v, w2 * u - w * v]
    };
    [
        newton_polish(raw[0], cubic),
        newton_polish(raw[1], cubic),
        newton_polish(raw[2], cubic),
    ]
}

/// |z³ + pz + q| relative to max(|p|^{3/2}, |q|).
pub fn depressed_residual(z: Complex64, p: Complex64, q: Complex64) -> f64 {
    let scale = depressed_scale(p, q);
    let r = (z * z * z + p * z + q).norm();
    if scale == 0.0 {
        r
    } else {
        r / scale
    }
}

/// Coefficients (p, q) of the depressed cubic at λ.
pub fn depressed_coefficients(lambda: Complex64, d: &DerivedConstants) -> (Complex64, Complex64) {
    let l2 = lambda * lambda;
    let l4 = l2 * l2;
    let (a, b, g) = (d.alpha, d.beta, d.gamma);
    let p = -(l4 * (a * a / 3.0) + l2 * b);
    let q = l4 * l2 * (2.0 * a * a * a / 27.0) + l4 * (a * b / 3.0 - g);
    (p, q)
}

fn asymptotic_odd(lambda: Complex64, d: &DerivedConstants) -> [Complex64; 3] {
    let s = lambda.sqrt();
    let inv = lambda.inv();
    [
        I * d.a1 * lambda * (1.0 + (d.a2 / d.a1) * inv * inv),
        I * d.a3 * s * (1.0 - (d.a4 / d.a3) * inv),
        d.a3 * s * (1.0 + (d.a4 / d.a3) * inv),
    ]
}

const PERMUTATIONS: [[usize; 3]; 6] = [
    [0, 1, 2],
    [0, 2, 1],
    [1, 0, 2],
    [1, 2, 0],
    [2, 0, 1],
    [2, 1, 0],
];

/// Exact roots at λ, labeled against the asymptotic predictions.
pub fn characteristic_roots_exact(lambda: Complex64, d: &DerivedConstants) -> Result<CharacteristicRoots> {
    if lambda == Complex64::new(0.0, 0.0) {
        return Err(Error::ZeroLambda);
    }
    let (p, q) = depressed_coefficients(lambda, d);
    let shift = lambda * lambda * (d.alpha / 3.0);
    let l2 = lambda * lambda;
    let cubic = |y: Complex64| {
        (
            y * y * y + d.alpha * l2 * y * y - d.beta * l2 * y - d.gamma * l2 * l2,
            3.0 * y * y + 2.0 * d.alpha * l2 * y - d.beta * l2,
        )
    };
    let z = solve_depressed_cubic(p, q);
    let y: Vec<Complex64> = z.iter().map(|&zj| newton_polish(zj - shift, cubic)).collect();

    let pred = asymptotic_odd(lambda, d);
    let pred_y: Vec<Complex64> = pred.iter().map(|z| z * z).collect();
    let mut costs: Vec<(f64, usize)> = PERMUTATIONS
        .iter()
        .enumerate()
        .map(|(k, perm)| {
            let c: f64 = (0..3).map(|j| (y[perm[j]] - pred_y[j]).norm()).sum();
            (c, k)
        })
        .collect();
    costs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let perm = PERMUTATIONS[costs[0].1];
    let mut confidence = if costs[1].0 > 0.0 {
        ((costs[1].0 - costs[0].0) / costs[1].0).clamp(0.0, 1.0)
    } else {
        0.0
    };

    let ymax = y.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let degenerate = (0..3).any(|a| {
        ((a + 1)..3).any(|b| (y[a] - y[b]).norm() <= DEGENERACY_TOL * ymax)
    });
    if degenerate {
        confidence = 0.0;
    }

    let mut odd = [Complex64::new(0.0, 0.0); 3];
    for j in 0..3 {
        let s = y[perm[j]].sqrt();
        odd[j] = if (s - pred[j]).norm() <= (-s - pred[j]).norm() { s } else { -s };
    }
    let mut roots = CharacteristicRoots::from_odd(lambda, odd, RootKind::Exact);
    roots.label_confidence = confidence;
    roots.degenerate = degenerate;
    Ok(roots)
}

/// The large-λ expansions, truncated after two terms.
pub fn characteristic_roots_asymptotic(
    lambda: Complex64,
    d: &DerivedConstants,
    floor: f64,
) -> Result<CharacteristicRoots> {
    if lambda.norm() < floor {
        return Err(Error::BelowAsymptoticFloor { modulus: lambda.norm(), floor });
    }
    Ok(CharacteristicRoots::from_odd(
        lambda,
        asymptotic_odd(lambda, d),
        RootKind::Asymptotic { order: 2 },
    ))
}

/// Value of EGζ⁶ + EJλ²ζ⁴ − Gmλ²ζ² − Dλ⁴ together with the sum of the
/// magnitudes of its four terms.
pub fn sextic_residual(zeta: Complex64, lambda: Complex64, model: &Model) -> (f64, f64) {
    let r = model.raw();
    let z2 = zeta * zeta;
    let l2 = lambda * lambda;
    let terms = [
        r.E * r.G * z2 * z2 * z2,
        r.E * r.J * l2 * z2 * z2,
        -r.G * r.m * l2 * z2,
        -model.derived.D * l2 * l2,
    ];
    let value: Complex64 = terms.iter().sum();
    let scale: f64 = terms.iter().map(|t| t.norm()).sum();
    (value.norm(), scale)
}
