//! Chebyshev collocation of the first-order five-component system.
//!
//! Unknowns are f₀, w = f₀'', f₁, f₂, f₃ on the N+1 nodes plus the scalar f₄.
//! Domain conditions replace selected rows, which turns Ax = λBx into a
//! generalized problem with B a 0/1 diagonal. Writing Q for the columns of
//! the identity on the dynamic unknowns, μ = 1/λ solves the standard problem
//! QᵀA⁻¹Q y = μ y, which is what is handed to the dense Schur solver.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::chebyshev::diff_matrix_descending;
use crate::error::{Error, Result};
use crate::model::Model;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Two eigenvalues from different grids count as the same when they agree to
/// this relative tolerance.
pub const STABILITY_TOL: f64 = 1e-6;
/// Eigenvalues below this modulus are outside the scope of the solver.
pub const MIN_MODULUS: f64 = 0.3;

struct Layout {
    n: usize,
}

impl Layout {
    fn f0(&self, j: usize) -> usize {
        j
    }
    fn w(&self, j: usize) -> usize {
        self.n + 1 + j
    }
    fn f1(&self, j: usize) -> usize {
        2 * (self.n + 1) + j
    }
    fn f2(&self, j: usize) -> usize {
        3 * (self.n + 1) + j
    }
    fn f3(&self, j: usize) -> usize {
        4 * (self.n + 1) + j
    }
    fn f4(&self) -> usize {
        5 * (self.n + 1)
    }
    fn size(&self) -> usize {
        5 * (self.n + 1) + 1
    }

    /// Unknowns multiplied by λ in their own row.
    fn dynamic(&self) -> Vec<usize> {
        let n = self.n;
        let mut d: Vec<usize> = (0..=n).map(|j| self.f0(j)).collect();
        d.extend((1..n).map(|j| self.f1(j)));
        d.extend((0..=n).map(|j| self.f2(j)));
        d.extend((1..n).map(|j| self.f3(j)));
        d.push(self.f4());
        d
    }
}

/// The collocation matrix A. Node 0 is the clamped end t = 0, node N the
/// tip t = L.
fn operator_matrix(model: &Model, n: usize) -> DMatrix<Complex64> {
    let r = model.raw();
    let d = model.derived.D;
    let (dx, _) = diff_matrix_descending(n);
    let d1 = dx * (-2.0 / r.L);
    let d2 = &d1 * &d1;
    let lay = Layout { n };
    let mut a = DMatrix::<Complex64>::zeros(lay.size(), lay.size());
    let c = |x: f64| Complex64::new(x, 0.0);

    for j in 0..=n {
        a[(lay.f0(j), lay.f1(j))] = -I;
        a[(lay.f2(j), lay.f3(j))] = -I;
    }
    // w = f₀'' inside, clamping conditions at the ends.
    for j in 1..n {
        a[(lay.w(j), lay.w(j))] = c(1.0);
        for k in 0..=n {
            a[(lay.w(j), lay.f0(k))] = c(-d2[(j, k)]);
        }
    }
    a[(lay.w(0), lay.f0(0))] = c(1.0);
    for k in 0..=n {
        a[(lay.w(n), lay.f0(k))] = c(d1[(0, k)]);
    }
    // Momentum rows.
    for j in 1..n {
        for k in 0..=n {
            a[(lay.f1(j), lay.w(k))] = I * (r.E * r.J / d) * d2[(j, k)];
            a[(lay.f1(j), lay.f2(k))] = I * (r.G * r.S / d) * d2[(j, k)];
            a[(lay.f3(j), lay.w(k))] = -I * (r.E * r.S / d) * d2[(j, k)];
            a[(lay.f3(j), lay.f2(k))] = -I * (r.G * r.m / d) * d2[(j, k)];
        }
    }
    // Tip conditions: w'(L) = 0 and E w(L) + k₁ f₁'(L) + C_I f₄ = 0.
    for k in 0..=n {
        a[(lay.f1(n), lay.w(k))] = c(d1[(n, k)]);
        a[(lay.f1(0), lay.f1(k))] = c(r.k1 * d1[(n, k)]);
    }
    a[(lay.f1(0), lay.w(n))] += c(r.E);
    a[(lay.f1(0), lay.f4())] = c(r.CI);
    // Torsion: f₂(0) = 0 and G f₂'(L) + k₂ f₃(L) = 0.
    a[(lay.f3(0), lay.f2(0))] = c(1.0);
    for k in 0..=n {
        a[(lay.f3(n), lay.f2(k))] = c(r.G * d1[(n, k)]);
    }
    a[(lay.f3(n), lay.f3(n))] = c(r.k2);
    // Circuit.
    for k in 0..=n {
        a[(lay.f4(), lay.f1(k))] = I * (r.CD / r.Cp) * d1[(n, k)];
    }
    a[(lay.f4(), lay.f4())] = I / (r.Cp * r.R);
    a
}

/// Every eigenvalue of the degree-N discretisation, sorted by modulus.
pub fn collocation_raw(model: &Model, n: usize) -> Result<Vec<Complex64>> {
    if n < 32 {
        return Err(Error::InvalidArgument(format!("collocation needs N >= 32, got {n}")));
    }
    let lay = Layout { n };
    let a = operator_matrix(model, n);
    let dynamic = lay.dynamic();
    let mut q = DMatrix::<Complex64>::zeros(lay.size(), dynamic.len());
    for (col, &row) in dynamic.iter().enumerate() {
        q[(row, col)] = Complex64::new(1.0, 0.0);
    }
    let sol = a
        .lu()
        .solve(&q)
        .ok_or_else(|| Error::InvalidArgument("collocation matrix is singular".into()))?;
    let k = DMatrix::from_fn(dynamic.len(), dynamic.len(), |i, j| sol[(dynamic[i], j)]);
    let mu = k
        .schur()
        .eigenvalues()
        .ok_or_else(|| Error::InvalidArgument("Schur form did not converge".into()))?;
    let mut lambdas: Vec<Complex64> =
        mu.iter().filter(|m| m.norm() > 0.0).map(|m| m.inv()).filter(|l| l.is_finite()).collect();
    lambdas.sort_by(|x, y| x.norm().total_cmp(&y.norm()).then(x.re.total_cmp(&y.re)));
    Ok(lambdas)
}

/// Keeps the eigenvalues of the first list that reappear in the second.
pub fn two_grid_filter(coarse: &[Complex64], fine: &[Complex64], tol: f64) -> Vec<Complex64> {
    coarse
        .iter()
        .copied()
        .filter(|l| l.norm() >= MIN_MODULUS)
        .filter(|l| fine.iter().any(|m| (l - m).norm() <= tol * l.norm()))
        .collect()
}

/// Eigenvalues at degree N that are stable against the degree ⌈5N/4⌉ grid.
pub fn collocation_eigenvalues(model: &Model, n: usize) -> Result<Vec<Complex64>> {
    let fine_n = (5 * n).div_ceil(4);
    let (coarse, fine) = rayon::join(|| collocation_raw(model, n), || collocation_raw(model, fine_n));
    let kept = two_grid_filter(&coarse?, &fine?, STABILITY_TOL);
    if kept.is_empty() {
        return Err(Error::ResolutionInsufficient);
    }
    Ok(kept)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asymptotics::{unperturbed_branch, Branch};
    use crate::model::{BeamParameters, Strictness};

    #[test]
    fn decoupled_torsion_matches_closed_form() {
        let p = BeamParameters { S: 0.0, ..Default::default() };
        let m = Model::new(p, Strictness::default()).unwrap();
        let eig = collocation_eigenvalues(&m, 48).unwrap();
        for n in 1..=5 {
            let want = unperturbed_branch(Branch::One, n, &m).unwrap();
            let best = eig.iter().map(|l| (l - want).norm()).fold(f64::INFINITY, f64::min);
            assert!(best <= 1e-6 * want.norm(), "n = {n}: {best}");
        }
    }

    #[test]
    fn small_grid_rejected() {
        let m = Model::new(BeamParameters::default(), Strictness::default()).unwrap();
        assert!(matches!(collocation_raw(&m, 16), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn filter_keeps_only_repeated_values() {
        let a = [Complex64::new(1.0, 1.0), Complex64::new(5.0, 0.0), Complex64::new(0.1, 0.0)];
        let b = [Complex64::new(1.0, 1.0 + 1e-9), Complex64::new(5.1, 0.0), Complex64::new(0.1, 0.0)];
        assert_eq!(two_grid_filter(&a, &b, 1e-6), vec![a[0]]);
    }
}
