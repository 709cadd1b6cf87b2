//! Chebyshev–Lobatto grids, coefficient transforms, spectral differentiation
//! and Clenshaw–Curtis weights.
//!
//! Grids of degree n have nodes sⱼ = −cos(πj/n), j = 0..n, increasing on
//! [−1, 1]. Series are Σ cₖ Tₖ(s) with k = 0..n.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Increasing Lobatto nodes on [−1, 1].
pub fn lobatto_nodes(n: usize) -> Vec<f64> {
    assert!(n >= 1);
    (0..=n)
        .map(|j| {
            // Symmetric evaluation keeps the nodes exactly antisymmetric.
            let v = (PI * (2.0 * j as f64 - n as f64) / (2.0 * n as f64)).sin();
            if 2 * j == n { 0.0 } else { v }
        })
        .collect()
}

/// Nodes mapped to [0, L].
pub fn mapped_nodes(n: usize, length: f64) -> Vec<f64> {
    lobatto_nodes(n).into_iter().map(|s| (s + 1.0) * 0.5 * length).collect()
}

fn cos_table(n: usize) -> Vec<f64> {
    (0..2 * n).map(|m| (PI * m as f64 / n as f64).cos()).collect()
}

/// Coefficients of the degree-n interpolant through values on the grid.
pub fn values_to_coeffs(values: &[Complex64]) -> Vec<Complex64> {
    let n = values.len() - 1;
    let table = cos_table(n);
    (0..=n)
        .map(|k| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, v) in values.iter().enumerate() {
                // Node j sits at x = cos(π(n−j)/n).
                let c = table[(k * (n - j)) % (2 * n)];
                let w = if j == 0 || j == n { 0.5 } else { 1.0 };
                acc += v * (w * c);
            }
            let g = if k == 0 || k == n { 1.0 / n as f64 } else { 2.0 / n as f64 };
            acc * g
        })
        .collect()
}

/// Values on the degree-`n` grid of a series of any length (extra
/// coefficients are evaluated, not dropped).
pub fn coeffs_to_values(coeffs: &[Complex64], n: usize) -> Vec<Complex64> {
    lobatto_nodes(n).iter().map(|&s| evaluate(coeffs, s)).collect()
}

/// Clenshaw evaluation of Σ cₖ Tₖ(s).
pub fn evaluate(coeffs: &[Complex64], s: f64) -> Complex64 {
    let mut b1 = Complex64::new(0.0, 0.0);
    let mut b2 = Complex64::new(0.0, 0.0);
    for c in coeffs.iter().skip(1).rev() {
        let b0 = c + b1 * (2.0 * s) - b2;
        b2 = b1;
        b1 = b0;
    }
    match coeffs.first() {
        Some(c0) => c0 + b1 * s - b2,
        None => Complex64::new(0.0, 0.0),
    }
}

pub fn value_at_right(coeffs: &[Complex64]) -> Complex64 {
    coeffs.iter().sum()
}

pub fn value_at_left(coeffs: &[Complex64]) -> Complex64 {
    coeffs
        .iter()
        .enumerate()
        .map(|(k, c)| if k % 2 == 0 { *c } else { -c })
        .sum()
}

/// d/ds of a series.
pub fn derivative(coeffs: &[Complex64]) -> Vec<Complex64> {
    let n = coeffs.len();
    if n <= 1 {
        return vec![Complex64::new(0.0, 0.0)];
    }
    let mut d = vec![Complex64::new(0.0, 0.0); n];
    for k in (1..n).rev() {
        let next = if k + 1 < n { d[k + 1] } else { Complex64::new(0.0, 0.0) };
        d[k - 1] = next + coeffs[k] * (2.0 * k as f64);
    }
    d[0] *= 0.5;
    d.truncate(n - 1);
    d
}

/// Antiderivative in s vanishing at s = −1.
pub fn integral(coeffs: &[Complex64]) -> Vec<Complex64> {
    let n = coeffs.len();
    let at = |k: usize| coeffs.get(k).copied().unwrap_or(Complex64::new(0.0, 0.0));
    let mut b = vec![Complex64::new(0.0, 0.0); n + 1];
    if n == 0 {
        return b;
    }
    b[1] = at(0) - at(2) * 0.5;
    for (k, bk) in b.iter_mut().enumerate().take(n + 1).skip(2) {
        *bk = (at(k - 1) - at(k + 1)) / (2.0 * k as f64);
    }
    b[0] = -value_at_left(&b);
    b
}

pub fn scale(coeffs: &[Complex64], factor: f64) -> Vec<Complex64> {
    coeffs.iter().map(|c| c * factor).collect()
}

pub fn add(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let n = a.len().max(b.len());
    (0..n)
        .map(|k| {
            a.get(k).copied().unwrap_or_default() + b.get(k).copied().unwrap_or_default()
        })
        .collect()
}

/// Differentiation matrix on the nodes xⱼ = cos(πj/n) (decreasing order),
/// as used by the collocation discretisation.
pub fn diff_matrix_descending(n: usize) -> (DMatrix<f64>, Vec<f64>) {
    let x: Vec<f64> = (0..=n).map(|j| (PI * j as f64 / n as f64).cos()).collect();
    let c: Vec<f64> = (0..=n)
        .map(|j| {
            let base = if j == 0 || j == n { 2.0 } else { 1.0 };
            if j % 2 == 0 { base } else { -base }
        })
        .collect();
    let mut d = DMatrix::<f64>::zeros(n + 1, n + 1);
    for i in 0..=n {
        for j in 0..=n {
            if i != j {
                d[(i, j)] = c[i] / c[j] / (x[i] - x[j]);
            }
        }
    }
    for i in 0..=n {
        let s: f64 = (0..=n).filter(|&j| j != i).map(|j| d[(i, j)]).sum();
        d[(i, i)] = -s;
    }
    (d, x)
}

/// Clenshaw–Curtis weights on the degree-n Lobatto grid for ∫₋₁¹. The
/// weights are symmetric, so node order does not matter.
pub fn clenshaw_curtis_weights(n: usize) -> Vec<f64> {
    assert!(n >= 1);
    if n == 1 {
        return vec![1.0, 1.0];
    }
    let nf = n as f64;
    let mut w = vec![0.0; n + 1];
    let end = if n.is_multiple_of(2) { 1.0 / (nf * nf - 1.0) } else { 1.0 / (nf * nf) };
    w[0] = end;
    w[n] = end;
    for (j, wj) in w.iter_mut().enumerate().take(n).skip(1) {
        let theta = PI * j as f64 / nf;
        let mut v = 1.0;
        for k in 1..=((n - 1) / 2) {
            let kf = k as f64;
            v -= 2.0 * (2.0 * kf * theta).cos() / (4.0 * kf * kf - 1.0);
        }
        if n.is_multiple_of(2) {
            v -= (nf * theta).cos() / (nf * nf - 1.0);
        }
        *wj = 2.0 * v / nf;
    }
    w
}
