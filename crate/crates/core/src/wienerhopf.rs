//! Wiener–Hopf factors of W on Γ built from the MVOPs, and the reverse map.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::contour::{CircleContour, MIN_NODES};
use crate::error::{Error, Result};
use crate::linalg::{det, identity, inverse, norm, rel_diff, CMat, C64};
use crate::mvop::MvopSolution;
use crate::poly::MatrixPolynomial;
use crate::weights::Weight;

/// Relative radial offset for boundary values, extrapolated from h, 2h, 4h.
pub const BOUNDARY_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, Serialize, PartialEq, Eq)]
pub struct WindingCheck {
    /// Winding of det(P_N W) around Γ.
    pub winding: i64,
    /// Zeros of det W inside Γ.
    pub expected: usize,
    pub ok: bool,
}

#[derive(Debug, Clone)]
pub struct WhFactorization {
    pub n: usize,
    pub gamma: CircleContour,
    pub p: MatrixPolynomial,
    pub phat: MatrixPolynomial,
    /// P_N W and W P̂_N as polynomials, extracted on Γ.
    pub pw: MatrixPolynomial,
    pub wphat: MatrixPolynomial,
    pub extraction_defect: f64,
    pub winding: WindingCheck,
}

fn extraction_circle(c: &CircleContour, degree: usize) -> Result<CircleContour> {
    c.with_nodes(c.m.max((4 * (degree + 2)).next_power_of_two()).max(256))
}

fn build(sol: &MvopSolution, w: &dyn Weight, c: &CircleContour, strict: bool) -> Result<WhFactorization> {
    let degree = sol.n + w.degree_at_infinity();
    let ex = extraction_circle(c, degree)?;
    let pw_samples = ex.sample(&|z| Ok(sol.p.eval(z) * w.eval(z)?))?;
    let wphat_samples = ex.sample(&|z| Ok(w.eval(z)? * sol.phat.eval(z)))?;
    let (pw, d1) = ex.extract_from_samples(&pw_samples, degree);
    let (wphat, d2) = ex.extract_from_samples(&wphat_samples, degree);
    let defect = d1.max(d2);
    if strict && defect > crate::contour::EXTRACT_TOL {
        return Err(Error::DegreeMismatch { degree, defect });
    }
    let dets: Vec<C64> = pw_samples.iter().map(det).collect();
    let winding = CircleContour::winding(&dets);
    let expected = w.excluded_points().iter().filter(|&&z| c.contains(z)).count();
    let check = WindingCheck {
        winding,
        expected,
        ok: winding == 0 && expected == 0,
    };
    if strict && !check.ok {
        return Err(Error::ZeroInsideContour { winding, expected });
    }
    Ok(WhFactorization {
        n: sol.n,
        gamma: *c,
        p: sol.p.clone(),
        phat: sol.phat.clone(),
        pw,
        wphat,
        extraction_defect: defect,
        winding: check,
    })
}

/// φ = P_N^{-1} outside Γ and P_N W inside; φ̂ = P̂_N^{-1} outside and W P̂_N inside.
pub fn factors_from_mvop(sol: &MvopSolution, w: &dyn Weight, c: &CircleContour) -> Result<WhFactorization> {
    build(sol, w, c, true)
}

/// Same construction without the polynomiality and winding hypotheses enforced.
pub fn factors_unchecked(sol: &MvopSolution, w: &dyn Weight, c: &CircleContour) -> Result<WhFactorization> {
    build(sol, w, c, false)
}

fn richardson<F: Fn(C64) -> Result<CMat>>(f: F, s: C64, c: &CircleContour, outward: bool) -> Result<CMat> {
    let u = (s - c.center) / (s - c.center).norm();
    let h = BOUNDARY_EPS * c.radius * if outward { 1.0 } else { -1.0 };
    let f1 = f(s + u * h)?;
    let f2 = f(s + u * (2.0 * h))?;
    let f4 = f(s + u * (4.0 * h))?;
    Ok((f1 * C64::from(8.0) - f2 * C64::from(6.0) + f4) / C64::from(3.0))
}

impl WhFactorization {
    pub fn k(&self) -> usize {
        self.p.dim()
    }

    pub fn phi(&self, z: C64) -> Result<CMat> {
        if self.gamma.contains(z) {
            Ok(self.pw.eval(z))
        } else {
            inverse(&self.p.eval(z), "eval_phi")
        }
    }

    pub fn phihat(&self, z: C64) -> Result<CMat> {
        if self.gamma.contains(z) {
            Ok(self.wphat.eval(z))
        } else {
            inverse(&self.phat.eval(z), "eval_phihat")
        }
    }

    /// φ^{-1}(z), evaluated without inverting where a polynomial form exists.
    pub fn phi_inv(&self, z: C64) -> Result<CMat> {
        if self.gamma.contains(z) {
            inverse(&self.pw.eval(z), "eval_phi_inv")
        } else {
            Ok(self.p.eval(z))
        }
    }

    pub fn phihat_inv(&self, z: C64) -> Result<CMat> {
        if self.gamma.contains(z) {
            inverse(&self.wphat.eval(z), "eval_phihat_inv")
        } else {
            Ok(self.phat.eval(z))
        }
    }

    /// Interior boundary value φ_+ at a point s of Γ.
    pub fn phi_plus(&self, s: C64) -> Result<CMat> {
        richardson(|z| Ok(self.pw.eval(z)), s, &self.gamma, false)
    }

    /// Exterior boundary value φ_− at a point s of Γ.
    pub fn phi_minus(&self, s: C64) -> Result<CMat> {
        richardson(|z| inverse(&self.p.eval(z), "eval_phi_minus"), s, &self.gamma, true)
    }

    pub fn phihat_plus(&self, s: C64) -> Result<CMat> {
        richardson(|z| Ok(self.wphat.eval(z)), s, &self.gamma, false)
    }

    pub fn phihat_minus(&self, s: C64) -> Result<CMat> {
        richardson(|z| inverse(&self.phat.eval(z), "eval_phihat_minus"), s, &self.gamma, true)
    }

    fn boundary_contour(&self) -> Result<CircleContour> {
        self.gamma.with_nodes(self.gamma.m.max(256))
    }

    /// Q_{N-1}(z) from boundary values of the factors.
    pub fn q(&self, z: C64) -> Result<CMat> {
        let c = self.boundary_contour()?;
        let samples = c.sample(&|s| Ok(inverse(&self.phihat_plus(s)?, "q_from_factors")? * self.phi_minus(s)?))?;
        self.q_from_samples(&c, &samples, z)
    }

    fn q_from_samples(&self, c: &CircleContour, samples: &[CMat], z: C64) -> Result<CMat> {
        let ct = c.cauchy_transform(samples, z)?;
        if c.contains(z) {
            Err(Error::domain(
                "q_from_factors",
                "the interior branch needs W; use q_interior",
            ))
        } else {
            Ok(ct * self.phi_inv(z)?)
        }
    }

    /// Interior branch of the factor formula for Q_{N-1}.
    pub fn q_interior(&self, w: &dyn Weight, z: C64) -> Result<CMat> {
        let c = self.boundary_contour()?;
        let samples = c.sample(&|s| Ok(inverse(&self.phihat_plus(s)?, "q_from_factors")? * self.phi_minus(s)?))?;
        let ct = c.cauchy_transform(&samples, z)?;
        Ok(ct * self.phi(z)? * inverse(&w.eval(z)?, "q_from_factors")? - self.phihat_inv(z)?)
    }

    /// Coefficients of Q_{N-1} from the factor formula, extracted outside Γ.
    pub fn q_polynomial(&self) -> Result<MatrixPolynomial> {
        let k = self.k();
        if self.n == 0 {
            return Ok(MatrixPolynomial::zero(k));
        }
        let c = self.boundary_contour()?;
        let samples = c.sample(&|s| Ok(inverse(&self.phihat_plus(s)?, "q_from_factors")? * self.phi_minus(s)?))?;
        let ex = CircleContour::new(self.gamma.center, 2.0 * self.gamma.radius, MIN_NODES.max((4 * self.n).next_power_of_two()))?;
        ex.extract_poly_coeffs(&|z| self.q_from_samples(&c, &samples, z), self.n - 1)
    }
}

/// P_N and P̂_N recovered from φ^{-1} and φ̂^{-1} on a circle outside Γ.
pub fn mvop_from_factors(f: &WhFactorization) -> Result<(MatrixPolynomial, MatrixPolynomial)> {
    let m = MIN_NODES.max((4 * (f.n + 2)).next_power_of_two());
    let ex = CircleContour::new(f.gamma.center, 2.0 * f.gamma.radius, m)?;
    let p = ex.extract_poly_coeffs(&|z| inverse(&f.phi(z)?, "mvop_from_factors"), f.n)?;
    let phat = ex.extract_poly_coeffs(&|z| inverse(&f.phihat(z)?, "mvop_from_factors"), f.n)?;
    Ok((p, phat))
}

#[derive(Debug, Clone, Serialize)]
pub struct FactorizationReport {
    /// max over nodes of ‖φ_−φ_+ − W‖/‖W‖ and ‖φ̂_+φ̂_− − W‖/‖W‖.
    pub residuals: [f64; 2],
    /// ‖z^N φ(z) − I‖ and ‖z^N φ̂(z) − I‖ at |z| = 10³ r.
    pub normalization_defect: [f64; 2],
    /// Ratio of the φ defect at 10³ r to the one at 10⁴ r; about 10 for O(1/z) decay.
    pub normalization_decay: f64,
    pub min_boundary_det: f64,
    pub winding_check: WindingCheck,
    /// max relative gap |det φ − det φ̂| at the off-contour probes.
    pub det_agreement: f64,
    /// max ‖φ_−(s) − P_N^{-1}(s)‖ relative, over nodes.
    pub exterior_identity: f64,
    pub extraction_defect: f64,
}

impl FactorizationReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.residuals[0] < tol && self.residuals[1] < tol && self.winding_check.ok
    }
}

/// 16 off-contour probes, half inside and half outside.
pub fn probe_points(c: &CircleContour, seed: u64) -> Vec<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..16)
        .map(|i| {
            let t = rng.gen_range(0.0..std::f64::consts::TAU);
            let r = if i % 2 == 0 {
                rng.gen_range(0.3..0.9)
            } else {
                rng.gen_range(1.1..3.0)
            };
            c.center + C64::from_polar(r * c.radius, t)
        })
        .collect()
}

pub fn verify_factorization(f: &WhFactorization, w: &dyn Weight) -> Result<FactorizationReport> {
    let k = f.k();
    let nodes = f.gamma.nodes();
    let per_node: Vec<(f64, f64, f64, f64)> = nodes
        .par_iter()
        .map(|&s| {
            let ws = w.eval(s)?;
            let (pm, pp) = (f.phi_minus(s)?, f.phi_plus(s)?);
            let (hp, hm) = (f.phihat_plus(s)?, f.phihat_minus(s)?);
            let r1 = rel_diff(&(&pm * &pp), &ws);
            let r2 = rel_diff(&(&hp * &hm), &ws);
            let dmin = [&pm, &pp, &hp, &hm].iter().map(|m| det(m).norm()).fold(f64::INFINITY, f64::min);
            let ext = rel_diff(&pm, &inverse(&f.p.eval(s), "verify_factorization")?);
            Ok((r1, r2, dmin, ext))
        })
        .collect::<Result<_>>()?;
    let fold = |g: fn(&(f64, f64, f64, f64)) -> f64, init: f64, op: fn(f64, f64) -> f64| {
        per_node.iter().map(g).fold(init, op)
    };
    let far = f.gamma.center + C64::from(1e3 * f.gamma.radius);
    let farther = f.gamma.center + C64::from(1e4 * f.gamma.radius);
    let norm_def = |m: CMat, z: C64| norm(&(m * z.powi(f.n as i32) - identity(k)));
    let det_agreement = probe_points(&f.gamma, 17)
        .into_iter()
        .map(|z| {
            let a = det(&f.phi(z)?);
            let b = det(&f.phihat(z)?);
            Ok((a - b).norm() / b.norm().max(f64::MIN_POSITIVE))
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(FactorizationReport {
        residuals: [fold(|t| t.0, 0.0, f64::max), fold(|t| t.1, 0.0, f64::max)],
        normalization_defect: [norm_def(f.phi(far)?, far), norm_def(f.phihat(far)?, far)],
        normalization_decay: norm_def(f.phi(far)?, far) / norm_def(f.phi(farther)?, farther).max(f64::MIN_POSITIVE),
        min_boundary_det: fold(|t| t.2, f64::INFINITY, f64::min),
        winding_check: f.winding,
        det_agreement,
        exterior_identity: fold(|t| t.3, 0.0, f64::max),
        extraction_defect: f.extraction_defect,
    })
}

/// Largest relative gap between two k×k fields sampled at the nodes of `c`.
pub fn max_node_gap<F, G>(c: &CircleContour, f: F, g: G) -> Result<f64>
where
    F: Fn(C64) -> Result<CMat> + Sync,
    G: Fn(C64) -> Result<CMat> + Sync,
{
    let gaps: Vec<f64> = c
        .nodes()
        .par_iter()
        .map(|&s| Ok(rel_diff(&f(s)?, &g(s)?)))
        .collect::<Result<_>>()?;
    Ok(gaps.into_iter().fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mvop;
    use crate::weights::IdentityWeight;

    #[test]
    fn identity_weight_degree_zero() {
        let g = CircleContour::centered(1.0, 64).unwrap();
        let w = IdentityWeight { k: 2 };
        let sol = mvop::solve(&w, &g, 0).unwrap();
        let f = factors_from_mvop(&sol, &w, &g).unwrap();
        let z = C64::new(0.2, 0.1);
        assert!(norm(&(f.phi(z).unwrap() - identity(2))) < 1e-14);
        let (p, ph) = mvop_from_factors(&f).unwrap();
        assert!(p.rel_distance(&MatrixPolynomial::identity(2)) < 1e-14);
        assert!(ph.rel_distance(&MatrixPolynomial::identity(2)) < 1e-14);
        let rep = verify_factorization(&f, &w).unwrap();
        assert!(rep.residuals[0] < 1e-14 && rep.residuals[1] < 1e-14);
    }

    #[test]
    fn richardson_recovers_smooth_boundary_value() {
        let g = CircleContour::centered(1.0, 64).unwrap();
        let s = g.node(3);
        let v = richardson(|z| Ok(CMat::from_element(1, 1, z * z * z)), s, &g, true).unwrap();
        assert!((v[(0, 0)] - s * s * s).norm() < 1e-10);
    }
}
