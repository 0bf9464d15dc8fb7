//! Dense matrix polynomials with complex coefficients.

use crate::linalg::{identity, norm, zeros, CMat, C64};

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixPolynomial {
    /// `coeffs[j]` multiplies `z^j`.
    pub coeffs: Vec<CMat>,
}

impl MatrixPolynomial {
    pub fn new(coeffs: Vec<CMat>) -> Self {
        assert!(!coeffs.is_empty(), "a matrix polynomial needs at least one coefficient");
        MatrixPolynomial { coeffs }
    }

    pub fn identity(k: usize) -> Self {
        MatrixPolynomial::new(vec![identity(k)])
    }

    pub fn zero(k: usize) -> Self {
        MatrixPolynomial::new(vec![zeros(k, k)])
    }

    pub fn dim(&self) -> usize {
        self.coeffs[0].nrows()
    }

    /// Formal degree (length of the coefficient list minus one).
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, z: C64) -> CMat {
        let k = self.dim();
        let mut acc = zeros(k, k);
        for a in self.coeffs.iter().rev() {
            acc = acc * z + a;
        }
        acc
    }

    /// Monic means the top coefficient is the identity, to within `tol` in norm.
    pub fn is_monic(&self, tol: f64) -> bool {
        let top = self.coeffs.last().unwrap();
        norm(&(top - identity(self.dim()))) <= tol
    }

    pub fn scale(&self) -> f64 {
        self.coeffs.iter().map(norm).fold(0.0, f64::max)
    }

    /// max_j ‖A_j − B_j‖ / max_j ‖B_j‖ over the union of coefficient ranges.
    pub fn rel_distance(&self, other: &MatrixPolynomial) -> f64 {
        let k = self.dim();
        let n = self.coeffs.len().max(other.coeffs.len());
        let z = zeros(k, k);
        let mut d: f64 = 0.0;
        for j in 0..n {
            let a = self.coeffs.get(j).unwrap_or(&z);
            let b = other.coeffs.get(j).unwrap_or(&z);
            d = d.max(norm(&(a - b)));
        }
        let s = other.scale();
        if s > 0.0 {
            d / s
        } else {
            d
        }
    }

    pub fn left_mul(&self, m: &CMat) -> Self {
        MatrixPolynomial::new(self.coeffs.iter().map(|a| m * a).collect())
    }

    pub fn right_mul(&self, m: &CMat) -> Self {
        MatrixPolynomial::new(self.coeffs.iter().map(|a| a * m).collect())
    }
}

/// Scalar polynomial helpers used for determinant comparisons and fits.
pub fn scalar_poly_eval(coeffs: &[C64], z: C64) -> C64 {
    coeffs.iter().rev().fold(C64::new(0.0, 0.0), |acc, &a| acc * z + a)
}

/// Coefficients of Π (z − r) in ascending order.
pub fn poly_from_roots(roots: &[C64]) -> Vec<C64> {
    let mut p = vec![C64::new(1.0, 0.0)];
    for &r in roots {
        let mut q = vec![C64::new(0.0, 0.0); p.len() + 1];
        for (j, &a) in p.iter().enumerate() {
            q[j + 1] += a;
            q[j] -= a * r;
        }
        p = q;
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    #[test]
    fn horner_matches_direct_sum() {
        let a0 = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(2.0, 0.0), c(0.0, 1.0), c(3.0, 0.0)]);
        let a1 = identity(2);
        let p = MatrixPolynomial::new(vec![a0.clone(), a1.clone()]);
        let z = c(0.3, -1.2);
        let direct = a0 + a1 * z;
        assert!(norm(&(p.eval(z) - direct)) < 1e-15);
        assert!(p.is_monic(0.0));
    }

    #[test]
    fn roots_expand() {
        let p = poly_from_roots(&[c(1.0, 0.0), c(-2.0, 0.0)]);
        assert_eq!(p, vec![c(-2.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)]);
    }
}
