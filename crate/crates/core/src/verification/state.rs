//! Quintuples (f₀, f₁, f₂, f₃, f₄) sampled on a Chebyshev–Lobatto grid over
//! [0, L], the discrete stand-in for elements of the energy space.

use num_complex::Complex64;
use rand::Rng;

use crate::chebyshev as cheb;
use crate::error::{Error, Result};

/// Coefficients below this fraction of the largest one, from some index on,
/// are treated as rounding noise and dropped before differentiation.
pub const CHOP_TOL: f64 = 1e-13;

/// Samples and the Chebyshev series they came from are kept side by side, so
/// that high derivatives never have to be recovered from rounded samples.
#[derive(Debug, Clone, PartialEq)]
pub struct StateFunction {
    length: f64,
    grid: Vec<f64>,
    f: [Vec<Complex64>; 4],
    coeffs: [Vec<Complex64>; 4],
    pub f4: Complex64,
    /// Highest derivative order the samples are trusted for.
    pub trusted_order: u8,
}

/// Truncates the noise plateau of a coefficient series.
pub fn chop(coeffs: &[Complex64]) -> Vec<Complex64> {
    let big = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if big == 0.0 {
        return vec![Complex64::new(0.0, 0.0)];
    }
    let keep = coeffs
        .iter()
        .rposition(|c| c.norm() > CHOP_TOL * big)
        .map_or(1, |k| k + 1);
    coeffs[..keep].to_vec()
}

impl StateFunction {
    pub fn new(length: f64, f: [Vec<Complex64>; 4], f4: Complex64) -> Result<Self> {
        let len = f[0].len();
        if len < 2 || f.iter().any(|v| v.len() != len) {
            return Err(Error::GridMismatch);
        }
        if !(length > 0.0) {
            return Err(Error::InvalidArgument("state length must be positive".into()));
        }
        let coeffs = [0, 1, 2, 3].map(|k| chop(&cheb::values_to_coeffs(&f[k])));
        Ok(StateFunction {
            length,
            grid: cheb::mapped_nodes(len - 1, length),
            f,
            coeffs,
            f4,
            trusted_order: 4,
        })
    }

    pub fn zero(length: f64, n: usize) -> Self {
        let z = vec![Complex64::new(0.0, 0.0); n + 1];
        StateFunction::new(length, [z.clone(), z.clone(), z.clone(), z], Complex64::new(0.0, 0.0))
            .expect("valid zero state")
    }

    /// Samples component functions of t ∈ [0, L].
    pub fn from_fn(
        length: f64,
        n: usize,
        f: impl Fn(f64) -> [Complex64; 4],
        f4: Complex64,
    ) -> Self {
        let grid = cheb::mapped_nodes(n, length);
        let vals: Vec<[Complex64; 4]> = grid.iter().map(|&t| f(t)).collect();
        let comp = |k: usize| vals.iter().map(|v| v[k]).collect::<Vec<_>>();
        StateFunction::new(length, [comp(0), comp(1), comp(2), comp(3)], f4).expect("valid state")
    }

    /// Builds a state on the degree-n grid from Chebyshev series in
    /// s = 2t/L − 1. The series are stored as given, without chopping, and
    /// may be longer than n + 1.
    pub fn from_coefficients(length: f64, n: usize, coeffs: [&[Complex64]; 4], f4: Complex64) -> Self {
        assert!(n >= 1 && length > 0.0);
        StateFunction {
            length,
            grid: cheb::mapped_nodes(n, length),
            f: coeffs.map(|c| cheb::coeffs_to_values(c, n)),
            coeffs: coeffs.map(|c| c.to_vec()),
            f4,
            trusted_order: 4,
        }
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn degree(&self) -> usize {
        self.grid.len() - 1
    }

    pub fn same_grid(&self, other: &StateFunction) -> bool {
        self.length == other.length && self.grid.len() == other.grid.len()
    }

    /// Samples of component k (0..4) on the grid.
    pub fn values(&self, k: usize) -> &[Complex64] {
        &self.f[k]
    }

    /// Chebyshev coefficients of component k (0..4). Series recovered from
    /// samples are chopped at `CHOP_TOL`.
    pub fn coefficients(&self, k: usize) -> Vec<Complex64> {
        self.coeffs[k].clone()
    }

    /// Coefficients of the `order`-th t-derivative of component k.
    pub fn derivative_coefficients(&self, k: usize, order: usize) -> Vec<Complex64> {
        let mut c = self.coefficients(k);
        for _ in 0..order {
            c = cheb::scale(&cheb::derivative(&c), 2.0 / self.length);
        }
        c
    }

    /// max(|f₀(0)|, L|f₀'(0)|, |f₂(0)|), the violation of the conditions at
    /// the clamped end.
    pub fn membership_defect(&self) -> f64 {
        let d0 = cheb::value_at_left(&self.derivative_coefficients(0, 1)).norm() * self.length;
        self.f[0][0].norm().max(d0).max(self.f[2][0].norm())
    }

    /// Largest sample magnitude over all components.
    pub fn max_abs(&self) -> f64 {
        self.f
            .iter()
            .flat_map(|v| v.iter())
            .map(|c| c.norm())
            .fold(self.f4.norm(), f64::max)
    }

    pub fn scaled(&self, a: Complex64) -> StateFunction {
        let mul = |v: Vec<Complex64>| v.into_iter().map(|c| c * a).collect::<Vec<_>>();
        StateFunction {
            f: self.f.clone().map(mul),
            coeffs: self.coeffs.clone().map(mul),
            f4: self.f4 * a,
            ..self.clone()
        }
    }

    /// a·self + b·other.
    pub fn combine(&self, a: Complex64, other: &StateFunction, b: Complex64) -> Result<StateFunction> {
        if !self.same_grid(other) {
            return Err(Error::GridMismatch);
        }
        let mut out = self.clone();
        for k in 0..4 {
            for (x, y) in out.f[k].iter_mut().zip(other.f[k].iter()) {
                *x = *x * a + y * b;
            }
            let len = self.coeffs[k].len().max(other.coeffs[k].len());
            let at = |c: &[Complex64], j: usize| c.get(j).copied().unwrap_or_default();
            out.coeffs[k] = (0..len).map(|j| at(&self.coeffs[k], j) * a + at(&other.coeffs[k], j) * b).collect();
        }
        out.f4 = self.f4 * a + other.f4 * b;
        out.trusted_order = self.trusted_order.min(other.trusted_order);
        Ok(out)
    }

    /// The same functions on the grid of half the degree (every other node).
    pub fn subsample_half(&self) -> Option<StateFunction> {
        let n = self.degree();
        if !n.is_multiple_of(2) {
            return None;
        }
        let f = self.f.clone().map(|v| v.into_iter().step_by(2).collect::<Vec<_>>());
        StateFunction::new(self.length, f, self.f4).ok()
    }

    /// A random smooth state in the energy space: Chebyshev series of degree
    /// `degree` with coefficients decaying like k⁻⁴, adjusted so that
    /// f₀(0) = f₀'(0) = f₂(0) = 0 exactly.
    pub fn random_admissible<R: Rng>(rng: &mut R, length: f64, n: usize, degree: usize) -> StateFunction {
        let series = |rng: &mut R| -> Vec<Complex64> {
            (0..=degree)
                .map(|k| {
                    let d = ((k + 1) as f64).powi(4);
                    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) / d
                })
                .collect()
        };
        let mut c0 = series(rng);
        let c1 = series(rng);
        let mut c2 = series(rng);
        let c3 = series(rng);
        // T_k'(−1) = (−1)^{k+1} k² and T_1' = 1, so the slope is fixed via c₁.
        let slope: Complex64 = c0
            .iter()
            .enumerate()
            .map(|(k, c)| c * (if k % 2 == 1 { 1.0 } else { -1.0 } * (k * k) as f64))
            .sum();
        c0[1] -= slope;
        let v0 = cheb::value_at_left(&c0);
        c0[0] -= v0;
        let v2 = cheb::value_at_left(&c2);
        c2[0] -= v2;
        let f4 = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        StateFunction::from_coefficients(length, n, [&c0, &c1, &c2, &c3], f4)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_states_are_admissible_and_smooth() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let s = StateFunction::random_admissible(&mut rng, 1.3, 64, 20);
            assert!(s.membership_defect() < 1e-13, "{}", s.membership_defect());
            assert!(s.coefficients(0).len() <= 21);
            assert!(s.grid().windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn derivatives_of_a_polynomial_state() {
        let l = 2.0;
        let s = StateFunction::from_fn(
            l,
            32,
            |t| {
                let z = Complex64::new(t.powi(3), 0.0);
                [z, z, z, z]
            },
            Complex64::new(0.0, 0.0),
        );
        let d3 = s.derivative_coefficients(0, 3);
        for t in [0.1, 1.0, 1.9] {
            let v = cheb::evaluate(&d3, 2.0 * t / l - 1.0);
            assert!((v.re - 6.0).abs() < 1e-10);
        }
        assert!(s.derivative_coefficients(0, 4).iter().all(|c| c.norm() < 1e-9));
    }

    #[test]
    fn mismatched_components_rejected() {
        let z = vec![Complex64::new(0.0, 0.0); 5];
        let short = vec![Complex64::new(0.0, 0.0); 4];
        assert_eq!(
            StateFunction::new(1.0, [z.clone(), z.clone(), short, z], Complex64::new(0.0, 0.0)),
            Err(Error::GridMismatch)
        );
    }
}
