//! Circle contours, trapezoidal quadrature, Cauchy transforms and
//! coefficient extraction.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{norm, zeros, CMat, C64};
use crate::poly::MatrixPolynomial;

pub const MIN_NODES: usize = 64;
pub const MAX_NODES: usize = 16384;
pub const ADAPTIVE_TOL: f64 = 1e-12;
pub const EXTRACT_TOL: f64 = 1e-8;
/// Points closer than this fraction of the radius count as on the contour.
pub const CONTOUR_GUARD: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircleContour {
    pub center: C64,
    pub radius: f64,
    pub m: usize,
}

/// Value of an adaptive integration and the node count that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadrature {
    pub value: CMat,
    pub nodes: usize,
    pub defect: f64,
}

impl CircleContour {
    pub fn new(center: C64, radius: f64, m: usize) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::Config(format!("contour radius must be positive, got {radius}")));
        }
        if m < MIN_NODES || !m.is_power_of_two() {
            return Err(Error::Config(format!(
                "node count must be a power of two >= {MIN_NODES}, got {m}"
            )));
        }
        Ok(CircleContour { center, radius, m })
    }

    pub fn centered(radius: f64, m: usize) -> Result<Self> {
        CircleContour::new(C64::new(0.0, 0.0), radius, m)
    }

    pub fn with_nodes(&self, m: usize) -> Result<Self> {
        CircleContour::new(self.center, self.radius, m)
    }

    pub fn with_radius(&self, radius: f64) -> Result<Self> {
        CircleContour::new(self.center, radius, self.m)
    }

    /// z_j = center + radius·exp(2πi(j + ½)/M).
    pub fn node(&self, j: usize) -> C64 {
        let t = 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / self.m as f64;
        self.center + C64::from_polar(self.radius, t)
    }

    pub fn nodes(&self) -> Vec<C64> {
        (0..self.m).map(|j| self.node(j)).collect()
    }

    /// Trapezoidal weight so that Σ w_j f(z_j) ≈ (1/2πi)∮ f(z) dz.
    pub fn weight(&self, j: usize) -> C64 {
        (self.node(j) - self.center) / self.m as f64
    }

    pub fn contains(&self, z: C64) -> bool {
        (z - self.center).norm() < self.radius
    }

    pub fn distance(&self, z: C64) -> f64 {
        ((z - self.center).norm() - self.radius).abs()
    }

    pub fn sample<F>(&self, f: &F) -> Result<Vec<CMat>>
    where
        F: Fn(C64) -> Result<CMat> + Sync,
    {
        (0..self.m).into_par_iter().map(|j| f(self.node(j))).collect()
    }

    /// Fixed-node trapezoidal estimate of (1/2πi)∮ f(z) dz.
    pub fn integrate_fixed<F>(&self, f: &F) -> Result<CMat>
    where
        F: Fn(C64) -> Result<CMat> + Sync,
    {
        let samples = self.sample(f)?;
        Ok(self.sum_weighted(&samples))
    }

    pub fn sum_weighted(&self, samples: &[CMat]) -> CMat {
        let (r, c) = samples[0].shape();
        samples
            .iter()
            .enumerate()
            .fold(zeros(r, c), |acc, (j, s)| acc + s * self.weight(j))
    }

    /// Adaptive estimate: doubles the node count until two successive values
    /// agree to `ADAPTIVE_TOL` relative to the integral and integrand scales.
    pub fn integrate<F>(&self, f: &F) -> Result<Quadrature>
    where
        F: Fn(C64) -> Result<CMat> + Sync,
    {
        self.integrate_with(f, ADAPTIVE_TOL, MAX_NODES)
    }

    pub fn integrate_with<F>(&self, f: &F, tol: f64, cap: usize) -> Result<Quadrature>
    where
        F: Fn(C64) -> Result<CMat> + Sync,
    {
        let scaled = |s: &[CMat]| s.iter().map(norm).sum::<f64>() / s.len() as f64 * self.radius;
        let mut cur = *self;
        let samples = cur.sample(f)?;
        let mut prev = cur.sum_weighted(&samples);
        let mut mag = scaled(&samples);
        let mut defect = f64::INFINITY;
        while cur.m < cap {
            cur = cur.with_nodes(cur.m * 2)?;
            let samples = cur.sample(f)?;
            let next = cur.sum_weighted(&samples);
            mag = mag.max(scaled(&samples));
            let scale = norm(&next).max(mag);
            defect = norm(&(&next - &prev)) / scale.max(f64::MIN_POSITIVE);
            prev = next;
            if defect <= tol {
                return Ok(Quadrature {
                    value: prev,
                    nodes: cur.m,
                    defect,
                });
            }
        }
        Err(Error::NonConvergence { nodes: cur.m, defect })
    }

    /// (1/2πi)∮ f(s)/(s − z) ds from samples of f at the nodes.
    pub fn cauchy_transform(&self, samples: &[CMat], z: C64) -> Result<CMat> {
        let d = self.distance(z);
        if d < CONTOUR_GUARD * self.radius {
            return Err(Error::TooCloseToContour { distance: d });
        }
        assert_eq!(samples.len(), self.m, "one sample per node required");
        let (r, c) = samples[0].shape();
        Ok(samples.iter().enumerate().fold(zeros(r, c), |acc, (j, s)| {
            acc + s * (self.weight(j) / (self.node(j) - z))
        }))
    }

    /// Coefficients of f in powers of (z − center) up to `degree`, and the
    /// relative size of the discarded coefficients at indices degree+1 and −1.
    pub fn extract_with_defect<F>(&self, f: &F, degree: usize) -> Result<(MatrixPolynomial, f64)>
    where
        F: Fn(C64) -> Result<CMat> + Sync,
    {
        if self.m < degree + 3 {
            return Err(Error::Config(format!(
                "{} nodes cannot resolve a degree-{degree} polynomial",
                self.m
            )));
        }
        let samples = self.sample(f)?;
        Ok(self.extract_from_samples(&samples, degree))
    }

    pub fn extract_from_samples(&self, samples: &[CMat], degree: usize) -> (MatrixPolynomial, f64) {
        let (r, c) = samples[0].shape();
        let coeff = |j: i64| -> CMat {
            samples.iter().enumerate().fold(zeros(r, c), |acc, (m, s)| {
                let u = (self.node(m) - self.center) / self.radius;
                acc + s * (u.powi(-(j as i32)) / self.m as f64)
            })
        };
        // Coefficients of f(center + radius·u) in powers of u.
        let scaled: Vec<CMat> = (0..=degree as i64).map(coeff).collect();
        let over = norm(&coeff(degree as i64 + 1));
        let under = norm(&coeff(-1));
        let scale = scaled.iter().map(norm).fold(0.0, f64::max);
        let defect = over.max(under) / scale.max(f64::MIN_POSITIVE);
        let poly = MatrixPolynomial::new(
            scaled
                .into_iter()
                .enumerate()
                .map(|(j, a)| a / C64::from(self.radius.powi(j as i32)))
                .collect(),
        );
        (poly, defect)
    }

    /// Coefficient extraction with the degree check enforced.
    pub fn extract_poly_coeffs<F>(&self, f: &F, degree: usize) -> Result<MatrixPolynomial>
    where
        F: Fn(C64) -> Result<CMat> + Sync,
    {
        let (p, defect) = self.extract_with_defect(f, degree)?;
        if defect > EXTRACT_TOL {
            return Err(Error::DegreeMismatch { degree, defect });
        }
        Ok(p)
    }

    /// Winding number of the closed curve traced by `values` at the nodes.
    pub fn winding(values: &[C64]) -> i64 {
        let n = values.len();
        let total: f64 = (0..n).map(|j| (values[(j + 1) % n] / values[j]).arg()).sum();
        (total / (2.0 * std::f64::consts::PI)).round() as i64
    }
}

/// The orthogonality contour Γ and the kernel contour Γ′ around it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourPair {
    pub gamma: CircleContour,
    pub gamma_prime: CircleContour,
}

impl ContourPair {
    /// Circles centred at 0 separating `enclosed` from `excluded`.
    pub fn auto(enclosed: &[C64], excluded: &[C64], m: usize) -> Result<Self> {
        let max_in = enclosed.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let min_out = excluded.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
        if max_in >= min_out {
            return Err(Error::ContourGeometryImpossible {
                max_enclosed: max_in,
                min_excluded: min_out,
            });
        }
        let (r, rp) = if min_out.is_infinite() {
            let r = (2.0 * max_in).max(1.0);
            (r, 2.0 * r)
        } else if max_in == 0.0 {
            let r = 0.5 * min_out;
            (r, (r * min_out).sqrt())
        } else {
            let r = (max_in * min_out).sqrt();
            (r, (r * min_out).sqrt())
        };
        Ok(ContourPair {
            gamma: CircleContour::centered(r, m)?,
            gamma_prime: CircleContour::centered(rp, m)?,
        })
    }

    pub fn for_weight(w: &dyn crate::weights::Weight, m: usize) -> Result<Self> {
        ContourPair::auto(&w.enclosed_points(), &w.excluded_points(), m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, identity};

    fn scalar(v: C64) -> CMat {
        CMat::from_element(1, 1, v)
    }

    #[test]
    fn residue_of_one_over_z() {
        let g = CircleContour::centered(1.0, 64).unwrap();
        let q = g.integrate(&|z: C64| Ok(scalar(1.0 / z))).unwrap();
        assert!((q.value[(0, 0)] - 1.0).norm() < 1e-14);
    }

    #[test]
    fn analytic_integrands_vanish() {
        let g = CircleContour::centered(1.3, 64).unwrap();
        for j in 0..5 {
            let q = g.integrate(&|z: C64| Ok(scalar(z.powi(j)))).unwrap();
            assert!(q.value[(0, 0)].norm() < 1e-14);
        }
        let a = c(0.2, -0.3);
        let q = g.integrate(&|z: C64| Ok(scalar(1.0 / ((z - a) * (z - a))))).unwrap();
        assert!(q.value[(0, 0)].norm() < 1e-13);
    }

    #[test]
    fn cauchy_transform_constant_and_partial_fraction() {
        let g = CircleContour::centered(1.0, 256).unwrap();
        let ones: Vec<CMat> = vec![identity(1); g.m];
        assert!((g.cauchy_transform(&ones, c(0.1, 0.2)).unwrap()[(0, 0)] - 1.0).norm() < 1e-13);
        assert!(g.cauchy_transform(&ones, c(2.0, 0.5)).unwrap()[(0, 0)].norm() < 1e-13);
        let a = c(0.3, 0.1);
        let s: Vec<CMat> = g.nodes().into_iter().map(|z| scalar(1.0 / (z - a))).collect();
        let z = c(-1.7, 0.4);
        let v = g.cauchy_transform(&s, z).unwrap()[(0, 0)];
        assert!((v + 1.0 / (z - a)).norm() < 1e-13);
        assert!(matches!(
            g.cauchy_transform(&ones, c(1.0, 0.0)),
            Err(Error::TooCloseToContour { .. })
        ));
    }

    #[test]
    fn extraction_examples() {
        let g = CircleContour::centered(2.0, 64).unwrap();
        let p = g.extract_poly_coeffs(&|z: C64| Ok(identity(2) * (z * z)), 2).unwrap();
        assert!(norm(&p.coeffs[0]) < 1e-14 && norm(&p.coeffs[1]) < 1e-14);
        assert!(norm(&(&p.coeffs[2] - identity(2))) < 1e-14);
        let p = g.extract_poly_coeffs(&|_z: C64| Ok(identity(1) * c(3.0, 1.0)), 0).unwrap();
        assert!((p.coeffs[0][(0, 0)] - c(3.0, 1.0)).norm() < 1e-14);
        assert!(matches!(
            g.extract_poly_coeffs(&|z: C64| Ok(identity(1) * z.powi(3)), 2),
            Err(Error::DegreeMismatch { .. })
        ));
        assert!(matches!(
            g.extract_poly_coeffs(&|z: C64| Ok(identity(1) * (z + 1.0 / z)), 1),
            Err(Error::DegreeMismatch { .. })
        ));
    }

    #[test]
    fn doubling_reduces_error() {
        let a = 0.8;
        let f = |z: C64| Ok(scalar(1.0 / (z - a) + 1.0 / (z - 1.4)));
        let mut last = f64::INFINITY;
        for m in [64, 128] {
            let g = CircleContour::centered(1.0, m).unwrap();
            let v = g.integrate_fixed(&f).unwrap()[(0, 0)];
            let err = (v - 1.0).norm();
            assert!(err < last);
            last = err;
        }
    }

    #[test]
    fn winding_counts() {
        let g = CircleContour::centered(1.0, 64).unwrap();
        let v: Vec<C64> = g.nodes().into_iter().map(|z| (z - 0.3) * (z + 0.2) * (z - 4.0)).collect();
        assert_eq!(CircleContour::winding(&v), 2);
    }

    #[test]
    fn contour_pair_geometry() {
        let p = ContourPair::auto(&[c(0.0, 0.0), c(0.5, 0.0)], &[c(8.0, 0.0)], 64).unwrap();
        assert!((p.gamma.radius - 2.0).abs() < 1e-15);
        assert!((p.gamma_prime.radius - 4.0).abs() < 1e-15);
        assert!(ContourPair::auto(&[c(2.0, 0.0)], &[c(1.0, 0.0)], 64).is_err());
        assert!(CircleContour::centered(1.0, 48).is_err());
    }
}
