//! Closed-form 3×3 complex determinant and inverse.

use nalgebra::Matrix3;
use num_complex::Complex64;

pub type M3 = Matrix3<Complex64>;

/// Relative threshold on |det| against the product of row norms.
pub const SINGULAR_TOL: f64 = 1e-12;

pub fn det3(a: &M3) -> Complex64 {
    a[(0, 0)] * (a[(1, 1)] * a[(2, 2)] - a[(1, 2)] * a[(2, 1)])
        - a[(0, 1)] * (a[(1, 0)] * a[(2, 2)] - a[(1, 2)] * a[(2, 0)])
        + a[(0, 2)] * (a[(1, 0)] * a[(2, 1)] - a[(1, 1)] * a[(2, 0)])
}

pub fn row_norm_product(a: &M3) -> f64 {
    (0..3)
        .map(|i| (0..3).map(|j| a[(i, j)].norm_sqr()).sum::<f64>().sqrt())
        .product()
}

/// Inverse by cofactors together with the determinant, or `None` when the
/// matrix is singular relative to `SINGULAR_TOL`.
pub fn inverse3(a: &M3) -> Option<(M3, Complex64)> {
    let det = det3(a);
    let scale = row_norm_product(a);
    if !det.is_finite() || det.norm() <= SINGULAR_TOL * scale || scale == 0.0 {
        return None;
    }
    let c = |i: usize, j: usize| {
        let r = [(i + 1) % 3, (i + 2) % 3];
        let s = [(j + 1) % 3, (j + 2) % 3];
        a[(r[0], s[0])] * a[(r[1], s[1])] - a[(r[0], s[1])] * a[(r[1], s[0])]
    };
    let inv_det = det.inv();
    // The cyclic index choice absorbs the checkerboard sign.
    let inv = M3::from_fn(|i, j| c(j, i) * inv_det);
    Some((inv, det))
}

/// Sum over all six permutations of the product of entry magnitudes; the
/// natural size of a 3×3 determinant built from these entries.
pub fn leibniz_scale(a: &M3) -> f64 {
    const P: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    P.iter()
        .map(|p| a[(0, p[0])].norm() * a[(1, p[1])].norm() * a[(2, p[2])].norm())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn inverse_round_trip() {
        let a = M3::new(
            c(1.0, 2.0), c(0.5, -1.0), c(3.0, 0.0),
            c(-2.0, 0.1), c(4.0, 4.0), c(0.0, 1.0),
            c(0.3, 0.3), c(-1.0, 0.0), c(2.0, -2.0),
        );
        let (inv, det) = inverse3(&a).unwrap();
        let id = a * inv;
        assert!((id - M3::identity()).norm() < 1e-14);
        let lu = a.lu().determinant();
        assert!((det - lu).norm() < 1e-12 * lu.norm());
        assert!(leibniz_scale(&a) >= det.norm());
    }

    #[test]
    fn singular_detected() {
        let a = M3::new(
            c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0),
            c(2.0, 0.0), c(4.0, 0.0), c(6.0, 0.0),
            c(0.0, 1.0), c(1.0, 0.0), c(0.0, 0.0),
        );
        assert!(inverse3(&a).is_none());
    }
}
