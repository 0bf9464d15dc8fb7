//! Small dense complex matrix helpers.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(k: usize) -> CMat {
    CMat::identity(k, k)
}

pub fn zeros(r: usize, c: usize) -> CMat {
    CMat::zeros(r, c)
}

/// Induced infinity norm (max absolute row sum).
pub fn norm(m: &CMat) -> f64 {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Induced one norm (max absolute column sum).
pub fn norm1(m: &CMat) -> f64 {
    (0..m.ncols())
        .map(|j| (0..m.nrows()).map(|i| m[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// ‖a − b‖ / ‖b‖, falling back to the absolute difference when ‖b‖ vanishes.
pub fn rel_diff(a: &CMat, b: &CMat) -> f64 {
    let d = norm(&(a - b));
    let s = norm(b);
    if s > 0.0 {
        d / s
    } else {
        d
    }
}

pub fn inverse(m: &CMat, op: &'static str) -> Result<CMat> {
    let inv = m
        .clone()
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::domain(op, "matrix is singular"))?;
    if inv.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain(op, "matrix inverse is not finite"));
    }
    Ok(inv)
}

pub fn det(m: &CMat) -> C64 {
    m.clone().lu().determinant()
}

/// One-norm condition estimate ‖A‖₁‖A⁻¹‖₁ (infinite when singular).
pub fn condition(m: &CMat) -> f64 {
    match m.clone().lu().try_inverse() {
        Some(inv) => norm1(m) * norm1(&inv),
        None => f64::INFINITY,
    }
}

pub fn is_finite(m: &CMat) -> bool {
    m.iter().all(|v| v.is_finite())
}

/// Principal complex logarithm increment used for winding counts.
pub fn phase_step(a: C64, b: C64) -> f64 {
    (b / a).arg()
}

/// Companion-matrix roots of a real polynomial, coefficients in ascending order.
pub fn real_poly_roots(coeffs: &[f64]) -> Vec<C64> {
    let mut n = coeffs.len() - 1;
    while n > 0 && coeffs[n] == 0.0 {
        n -= 1;
    }
    if n == 0 {
        return Vec::new();
    }
    let lead = coeffs[n];
    let mut comp = DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        comp[(i, i - 1)] = 1.0;
    }
    for i in 0..n {
        comp[(i, n - 1)] = -coeffs[i] / lead;
    }
    comp.complex_eigenvalues().iter().copied().collect()
}

pub fn eval_real_poly(coeffs: &[f64], z: C64) -> C64 {
    coeffs.iter().rev().fold(C64::new(0.0, 0.0), |acc, &a| acc * z + a)
}

pub fn eval_real_poly_deriv(coeffs: &[f64], z: C64) -> C64 {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .rev()
        .fold(C64::new(0.0, 0.0), |acc, (j, &a)| acc * z + a * j as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norms_of_diagonal() {
        let m = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![c(2.0, 0.0), c(0.0, -3.0)]));
        assert_eq!(norm(&m), 3.0);
        assert_eq!(norm1(&m), 3.0);
        assert!((condition(&m) - 1.5).abs() < 1e-14);
    }

    #[test]
    fn quartic_roots() {
        // (x+1)(x+2)(x+3)(x+4)
        let r = real_poly_roots(&[24.0, 50.0, 35.0, 10.0, 1.0]);
        let mut re: Vec<f64> = r.iter().map(|z| z.re).collect();
        re.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (x, e) in re.iter().zip([-4.0, -3.0, -2.0, -1.0]) {
            assert!((x - e).abs() < 1e-10);
        }
    }

    #[test]
    fn singular_inverse_is_error() {
        let m = CMat::from_element(2, 2, c(1.0, 0.0));
        assert!(inverse(&m, "test").is_err());
    }
}
