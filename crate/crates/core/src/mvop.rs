//! Monic matrix-valued orthogonal polynomials from block moments, the
//! Riemann–Hilbert matrix Y and the reproducing kernel R_N.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::contour::CircleContour;
use crate::error::{Error, Result};
use crate::linalg::{condition, identity, inverse, norm, zeros, CMat, C64};
use crate::poly::MatrixPolynomial;
use crate::weights::{Weight, WeightData};

/// Condition estimate above which the moment system is rejected.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone)]
pub struct MomentTable {
    /// M_j = (1/2πi)∮ W(z) z^j dz for j = 0..=upto.
    pub moments: Vec<CMat>,
    pub contour: CircleContour,
    pub nodes_used: usize,
    pub defect: f64,
}

impl MomentTable {
    pub fn dim(&self) -> usize {
        self.moments[0].nrows()
    }

    pub fn upto(&self) -> usize {
        self.moments.len() - 1
    }

    pub fn scale(&self) -> f64 {
        norm(&self.moments[0])
    }
}

/// Block moments, integrated adaptively as one stacked integrand.
pub fn compute_moments(w: &dyn Weight, c: &CircleContour, upto: usize) -> Result<MomentTable> {
    let k = w.dim();
    let rho = c.radius;
    let f = |z: C64| -> Result<CMat> {
        let wz = w.eval(z)?;
        let mut out = zeros(k, k * (upto + 1));
        let u = (z - c.center) / rho;
        let mut pw = C64::new(1.0, 0.0);
        for j in 0..=upto {
            out.view_mut((0, j * k), (k, k)).copy_from(&(&wz * pw));
            pw *= u;
        }
        Ok(out)
    };
    let q = c.integrate(&f)?;
    let moments = (0..=upto)
        .map(|j| q.value.view((0, j * k), (k, k)).into_owned() * C64::from(rho.powi(j as i32)))
        .collect();
    Ok(MomentTable {
        moments,
        contour: *c,
        nodes_used: q.nodes,
        defect: q.defect,
    })
}

/// Moments scaled by ρ^{-j} so the Hankel blocks have comparable size.
fn scaled_moments(t: &MomentTable) -> Vec<CMat> {
    let rho = t.contour.radius;
    t.moments
        .iter()
        .enumerate()
        .map(|(j, m)| m / C64::from(rho.powi(j as i32)))
        .collect()
}

fn hankel(mu: &[CMat], n: usize, k: usize) -> CMat {
    let mut h = zeros(n * k, n * k);
    for a in 0..n {
        for b in 0..n {
            h.view_mut((a * k, b * k), (k, k)).copy_from(&mu[a + b]);
        }
    }
    h
}

fn require_moments(t: &MomentTable, needed: usize) -> Result<()> {
    if t.upto() < needed {
        return Err(Error::Config(format!(
            "moment table holds M_0..M_{} but M_{needed} is required",
            t.upto()
        )));
    }
    Ok(())
}

/// Solves X H = B for X; returns X and the condition estimate of H.
fn solve_left_system(h: &CMat, b: &CMat) -> Result<(CMat, f64)> {
    let cond = condition(h);
    if !cond.is_finite() || cond > MAX_CONDITION {
        return Err(Error::SingularMomentSystem { condition: cond });
    }
    let ht = h.transpose();
    let bt = b.transpose();
    let x = ht
        .lu()
        .solve(&bt)
        .ok_or(Error::SingularMomentSystem { condition: cond })?;
    Ok((x.transpose(), cond))
}

fn solve_right_system(h: &CMat, b: &CMat) -> Result<(CMat, f64)> {
    let cond = condition(h);
    if !cond.is_finite() || cond > MAX_CONDITION {
        return Err(Error::SingularMomentSystem { condition: cond });
    }
    let x = h
        .clone()
        .lu()
        .solve(b)
        .ok_or(Error::SingularMomentSystem { condition: cond })?;
    Ok((x, cond))
}

/// Moment-system condition estimate for degree n (after scaling).
pub fn moment_condition(t: &MomentTable, n: usize) -> f64 {
    if n == 0 {
        return 1.0;
    }
    condition(&hankel(&scaled_moments(t), n, t.dim()))
}

/// Monic P_N with (1/2πi)∮ P_N W z^j dz = 0 for j < N.
pub fn solve_left(t: &MomentTable, n: usize) -> Result<MatrixPolynomial> {
    let k = t.dim();
    if n == 0 {
        return Ok(MatrixPolynomial::identity(k));
    }
    require_moments(t, 2 * n - 1)?;
    let mu = scaled_moments(t);
    let h = hankel(&mu, n, k);
    let mut rhs = zeros(k, n * k);
    for j in 0..n {
        rhs.view_mut((0, j * k), (k, k)).copy_from(&(-&mu[n + j]));
    }
    let (x, _) = solve_left_system(&h, &rhs)?;
    let rho = t.contour.radius;
    let mut coeffs: Vec<CMat> = (0..n)
        .map(|m| x.view((0, m * k), (k, k)).into_owned() * C64::from(rho.powi((n - m) as i32)))
        .collect();
    coeffs.push(identity(k));
    Ok(MatrixPolynomial::new(coeffs))
}

/// Monic P̂_N with (1/2πi)∮ W P̂_N z^j dz = 0 for j < N.
pub fn solve_right(t: &MomentTable, n: usize) -> Result<MatrixPolynomial> {
    let k = t.dim();
    if n == 0 {
        return Ok(MatrixPolynomial::identity(k));
    }
    require_moments(t, 2 * n - 1)?;
    let mu = scaled_moments(t);
    let h = hankel(&mu, n, k);
    let mut rhs = zeros(n * k, k);
    for j in 0..n {
        rhs.view_mut((j * k, 0), (k, k)).copy_from(&(-&mu[n + j]));
    }
    let (x, _) = solve_right_system(&h, &rhs)?;
    let rho = t.contour.radius;
    let mut coeffs: Vec<CMat> = (0..n)
        .map(|m| x.view((m * k, 0), (k, k)).into_owned() * C64::from(rho.powi((n - m) as i32)))
        .collect();
    coeffs.push(identity(k));
    Ok(MatrixPolynomial::new(coeffs))
}

/// Q_{N-1} of degree ≤ N−1 with orthogonality 0, …, 0, −I.
pub fn solve_q(t: &MomentTable, n: usize) -> Result<MatrixPolynomial> {
    let k = t.dim();
    if n == 0 {
        return Ok(MatrixPolynomial::zero(k));
    }
    require_moments(t, 2 * n - 2)?;
    let mu = scaled_moments(t);
    let h = hankel(&mu, n, k);
    let mut rhs = zeros(k, n * k);
    rhs.view_mut((0, (n - 1) * k), (k, k)).copy_from(&(-identity(k)));
    let (x, _) = solve_left_system(&h, &rhs)?;
    let rho = t.contour.radius;
    let coeffs = (0..n)
        .map(|m| x.view((0, m * k), (k, k)).into_owned() / C64::from(rho.powi((m + n - 1) as i32)))
        .collect();
    Ok(MatrixPolynomial::new(coeffs))
}

/// Orthogonality defects, all normalized by ‖M_0‖.
#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct Residuals {
    pub left: f64,
    pub right: f64,
    pub q: f64,
    /// Left and right defects for j = N..=2N.
    pub strong_left: f64,
    pub strong_right: f64,
}

fn left_defect(t: &MomentTable, p: &MatrixPolynomial, j: usize) -> CMat {
    p.coeffs
        .iter()
        .enumerate()
        .fold(zeros(t.dim(), t.dim()), |acc, (m, a)| acc + a * &t.moments[m + j])
}

fn right_defect(t: &MomentTable, p: &MatrixPolynomial, j: usize) -> CMat {
    p.coeffs
        .iter()
        .enumerate()
        .fold(zeros(t.dim(), t.dim()), |acc, (m, a)| acc + &t.moments[m + j] * a)
}

pub fn residuals(t: &MomentTable, n: usize, p: &MatrixPolynomial, phat: &MatrixPolynomial, q: &MatrixPolynomial) -> Residuals {
    let s = t.scale().max(f64::MIN_POSITIVE);
    let k = t.dim();
    let max_over = |range: std::ops::Range<usize>, f: &dyn Fn(usize) -> f64| range.map(f).fold(0.0, f64::max);
    let strong_end = (2 * n + 1).min(t.upto().saturating_sub(n) + 1);
    Residuals {
        left: max_over(0..n, &|j| norm(&left_defect(t, p, j)) / s),
        right: max_over(0..n, &|j| norm(&right_defect(t, phat, j)) / s),
        q: max_over(0..n, &|j| {
            let target = if j + 1 == n { -identity(k) } else { zeros(k, k) };
            norm(&(left_defect(t, q, j) - target))
        }),
        strong_left: max_over(n..strong_end, &|j| norm(&left_defect(t, p, j)) / s),
        strong_right: max_over(n..strong_end, &|j| norm(&right_defect(t, phat, j)) / s),
    }
}

#[derive(Debug, Clone)]
pub struct MvopSolution {
    pub n: usize,
    pub p: MatrixPolynomial,
    pub phat: MatrixPolynomial,
    pub q: MatrixPolynomial,
    pub moments: MomentTable,
    pub condition: f64,
    pub residuals: Residuals,
    /// Exactly inverted Gram matrix, filled by [`solve_exact`]; R_N then uses it.
    pub gram_inverse: Option<Vec<Vec<CMat>>>,
}

impl MvopSolution {
    pub fn dim(&self) -> usize {
        self.p.dim()
    }

    pub fn contour(&self) -> &CircleContour {
        &self.moments.contour
    }
}

/// Moments up to 3N (enough for the strong-orthogonality check) and all solves.
pub fn solve(w: &dyn Weight, c: &CircleContour, n: usize) -> Result<MvopSolution> {
    let moments = compute_moments(w, c, (3 * n).max(1))?;
    solve_from_moments(moments, n)
}

pub fn solve_from_moments(moments: MomentTable, n: usize) -> Result<MvopSolution> {
    let p = solve_left(&moments, n)?;
    let phat = solve_right(&moments, n)?;
    let q = solve_q(&moments, n)?;
    let residuals = residuals(&moments, n, &p, &phat, &q);
    Ok(MvopSolution {
        n,
        condition: moment_condition(&moments, n),
        p,
        phat,
        q,
        moments,
        residuals,
        gram_inverse: None,
    })
}

/// Same as [`solve`] for Aztec weights, with moments and coefficients computed
/// exactly and rounded once. `c` is kept as the contour of the table.
pub fn solve_exact(w: &WeightData, c: &CircleContour, n: usize) -> Result<MvopSolution> {
    let (p, phat, q) = crate::exact::solve_exact_all(w, n)?;
    let moments = MomentTable {
        moments: crate::exact::exact_moments(w, (3 * n).max(1))?,
        contour: *c,
        nodes_used: 0,
        defect: 0.0,
    };
    let residuals = exact_residuals(w, n, &p, &phat, &q)?;
    Ok(MvopSolution {
        n,
        condition: moment_condition(&moments, n),
        p,
        phat,
        q,
        moments,
        residuals,
        gram_inverse: Some(crate::exact::gram_inverse(w, n)?),
    })
}

/// [`residuals`] with every moment sum accumulated exactly.
pub fn exact_residuals(w: &WeightData, n: usize, p: &MatrixPolynomial, phat: &MatrixPolynomial, q: &MatrixPolynomial) -> Result<Residuals> {
    use crate::exact::{moment_products, orthogonality_defect};
    let k = w.k;
    let q_defect = moment_products(w, q, false, 0..n)?
        .iter()
        .enumerate()
        .map(|(j, v)| if j + 1 == n { norm(&(v + identity(k))) } else { norm(v) })
        .fold(0.0, f64::max);
    Ok(Residuals {
        left: orthogonality_defect(w, p, false, 0..n)?,
        right: orthogonality_defect(w, phat, true, 0..n)?,
        q: q_defect,
        strong_left: orthogonality_defect(w, p, false, n..2 * n + 1)?,
        strong_right: orthogonality_defect(w, phat, true, n..2 * n + 1)?,
    })
}

/// Scalar coefficients of det P(z), degree `degree`, by extraction on a circle.
pub fn det_poly(p: &MatrixPolynomial, radius: f64, degree: usize) -> Result<(Vec<C64>, f64)> {
    let m = (4 * (degree + 3)).next_power_of_two().max(crate::contour::MIN_NODES);
    let c = CircleContour::centered(radius, m)?;
    let f = |z: C64| Ok(CMat::from_element(1, 1, crate::linalg::det(&p.eval(z))));
    let (poly, defect) = c.extract_with_defect(&f, degree)?;
    Ok((poly.coeffs.iter().map(|a| a[(0, 0)]).collect(), defect))
}

/// Pointwise evaluators for Y, R_N and the contour formulas for Q_{N-1},
/// built from samples on Γ.
pub struct RhSolution<'a> {
    pub sol: &'a MvopSolution,
    pub contour: CircleContour,
    pw: Vec<CMat>,
    qw: Vec<CMat>,
    /// P̂^{-1} W^{-1} P^{-1} at the nodes.
    inner: Vec<CMat>,
    rn: Vec<Vec<CMat>>,
}

impl<'a> RhSolution<'a> {
    /// `m` overrides the node count on Γ used for the Cauchy transforms.
    pub fn new(sol: &'a MvopSolution, w: &dyn Weight, m: Option<usize>) -> Result<Self> {
        let base = sol.moments.contour;
        let m = m.unwrap_or_else(|| (2 * sol.moments.nodes_used).clamp(256, crate::contour::MAX_NODES));
        let contour = base.with_nodes(m)?;
        let nodes = contour.nodes();
        let samples: Vec<(CMat, CMat, CMat)> = nodes
            .par_iter()
            .map(|&s| {
                let ws = w.eval(s)?;
                let p = sol.p.eval(s);
                let ph = sol.phat.eval(s);
                let inner = inverse(&ph, "assemble_Y")? * inverse(&ws, "assemble_Y")? * inverse(&p, "assemble_Y")?;
                Ok((&p * &ws, sol.q.eval(s) * &ws, inner))
            })
            .collect::<Result<_>>()?;
        let mut pw = Vec::with_capacity(m);
        let mut qw = Vec::with_capacity(m);
        let mut inner = Vec::with_capacity(m);
        for (a, b, c) in samples {
            pw.push(a);
            qw.push(b);
            inner.push(c);
        }
        let mut out = RhSolution {
            sol,
            contour,
            pw,
            qw,
            inner,
            rn: Vec::new(),
        };
        out.rn = match &sol.gram_inverse {
            Some(g) => g.clone(),
            None => out.rn_coefficients_from_contour(),
        };
        Ok(out)
    }

    pub fn k(&self) -> usize {
        self.sol.dim()
    }

    pub fn eval_y(&self, z: C64) -> Result<CMat> {
        let k = self.k();
        let mut y = zeros(2 * k, 2 * k);
        y.view_mut((0, 0), (k, k)).copy_from(&self.sol.p.eval(z));
        y.view_mut((0, k), (k, k)).copy_from(&self.contour.cauchy_transform(&self.pw, z)?);
        y.view_mut((k, 0), (k, k)).copy_from(&self.sol.q.eval(z));
        y.view_mut((k, k), (k, k)).copy_from(&self.contour.cauchy_transform(&self.qw, z)?);
        Ok(y)
    }

    /// Lower-right block of Y^{-1}(z), which equals P̂_N(z).
    pub fn phat_from_y(&self, z: C64) -> Result<CMat> {
        let k = self.k();
        let yi = inverse(&self.eval_y(z)?, "assemble_Y")?;
        Ok(yi.view((k, k), (k, k)).into_owned())
    }

    /// Christoffel–Darboux form (0 I) Y^{-1}(w) Y(z) (I 0)^T / (z − w).
    pub fn rn_via_y(&self, w: C64, z: C64) -> Result<CMat> {
        let k = self.k();
        if self.sol.n == 0 {
            return Ok(zeros(k, k));
        }
        if (z - w).norm() < 1e-10 * (1.0 + z.norm()) {
            return Err(Error::domain("reproducing_kernel", "the Y route needs w ≠ z"));
        }
        let yi = inverse(&self.eval_y(w)?, "reproducing_kernel")?;
        let yz = self.eval_y(z)?;
        let prod = yi.view((k, 0), (k, 2 * k)) * yz.view((0, 0), (2 * k, k));
        Ok(prod / (z - w))
    }

    /// P̂(w) [(1/2πi)∮ P̂^{-1}W^{-1}P^{-1}(s) ds/((s−z)(s−w))] P(z) for w, z outside Γ.
    pub fn rn_via_contour(&self, w: C64, z: C64) -> Result<CMat> {
        let k = self.k();
        if self.sol.n == 0 {
            return Ok(zeros(k, k));
        }
        for pt in [w, z] {
            if self.contour.contains(pt) || self.contour.distance(pt) < crate::contour::CONTOUR_GUARD * self.contour.radius {
                return Err(Error::TooCloseToContour {
                    distance: self.contour.distance(pt),
                });
            }
        }
        let mut acc = zeros(k, k);
        for (j, f) in self.inner.iter().enumerate() {
            let s = self.contour.node(j);
            acc += f * (self.contour.weight(j) / ((s - z) * (s - w)));
        }
        Ok(self.sol.phat.eval(w) * acc * self.sol.p.eval(z))
    }

    /// R_{mn} with R_N(w, z) = Σ w^m R_{mn} z^n, from the series of the contour formula.
    fn rn_coefficients_from_contour(&self) -> Vec<Vec<CMat>> {
        let n = self.sol.n;
        let k = self.k();
        if n == 0 {
            return Vec::new();
        }
        let mu: Vec<CMat> = (0..=2 * n.saturating_sub(1))
            .map(|e| {
                let mut acc = zeros(k, k);
                for (j, f) in self.inner.iter().enumerate() {
                    let s = self.contour.node(j);
                    acc += f * (self.contour.weight(j) * s.powi(e as i32));
                }
                acc
            })
            .collect();
        let ph = &self.sol.phat.coeffs;
        let p = &self.sol.p.coeffs;
        (0..n)
            .map(|m| {
                (0..n)
                    .map(|nn| {
                        let mut acc = zeros(k, k);
                        for a in m + 1..=n {
                            for b in nn + 1..=n {
                                acc += &ph[a] * &mu[(a - m - 1) + (b - nn - 1)] * &p[b];
                            }
                        }
                        acc
                    })
                    .collect()
            })
            .collect()
    }

    /// Replaces the contour-built R_{mn}, e.g. with an exactly inverted Gram matrix.
    pub fn with_rn_coefficients(mut self, rn: Vec<Vec<CMat>>) -> Self {
        self.rn = rn;
        self
    }

    pub fn rn_coefficients(&self) -> &[Vec<CMat>] {
        &self.rn
    }

    /// R_N(w, z) from the coefficient form (valid for any w, z).
    pub fn rn(&self, w: C64, z: C64) -> CMat {
        let k = self.k();
        let mut acc = zeros(k, k);
        for (m, row) in self.rn.iter().enumerate() {
            for (n, r) in row.iter().enumerate() {
                acc += r * (w.powi(m as i32) * z.powi(n as i32));
            }
        }
        acc
    }

    /// R_N at (w, z) by both pointwise routes; returns the two values and their relative gap.
    pub fn reproducing_kernel(&self, w: C64, z: C64) -> Result<(CMat, CMat, f64)> {
        let a = self.rn_via_y(w, z)?;
        let b = self.rn_via_contour(w, z)?;
        let gap = crate::linalg::rel_diff(&a, &b);
        Ok((a, b, gap))
    }

    /// Q_{N-1}(z) for z outside Γ by the contour formula.
    pub fn q_via_contour(&self, z: C64) -> Result<CMat> {
        let ct = self.contour.cauchy_transform(&self.inner, z)?;
        Ok(ct * self.sol.p.eval(z))
    }

    /// Coefficients of Q_{N-1} from the contour formula on a circle outside Γ.
    pub fn q_polynomial_via_contour(&self, radius: f64) -> Result<MatrixPolynomial> {
        let k = self.k();
        let n = self.sol.n;
        if n == 0 {
            return Ok(MatrixPolynomial::zero(k));
        }
        let c = CircleContour::centered(radius, crate::contour::MIN_NODES.max((4 * n).next_power_of_two()))?;
        c.extract_poly_coeffs(&|z| self.q_via_contour(z), n - 1)
    }

    /// (1/2πi)∮ Q_{N-1}(s)W(s)/(s − z) ds.
    pub fn cauchy_qw(&self, z: C64) -> Result<CMat> {
        self.contour.cauchy_transform(&self.qw, z)
    }

    /// max over m < N of ‖(1/2πi)∮ R_N(z₀, s) W(s) s^m ds − z₀^m I‖ / |z₀|^m.
    pub fn reproducing_defect(&self, w: &dyn Weight, z0: C64) -> Result<f64> {
        let k = self.k();
        let n = self.sol.n;
        let mut worst: f64 = 0.0;
        for m in 0..n {
            let q = self.contour.integrate(&|s| Ok(self.rn(z0, s) * w.eval(s)? * s.powi(m as i32)))?;
            let target = identity(k) * z0.powi(m as i32);
            worst = worst.max(norm(&(q.value - &target)) / z0.norm().powi(m as i32));
        }
        Ok(worst)
    }

    /// Same defect with the pairing done on exact moments: R_N(z₀, ·) is a matrix
    /// polynomial C(s), and ∮ C(s) W(s) s^m ds = Σ_b C_b M_{b+m}.
    pub fn reproducing_defect_exact(&self, w: &WeightData, z0: C64) -> Result<f64> {
        let k = self.k();
        let n = self.sol.n;
        if n == 0 {
            return Ok(0.0);
        }
        let c: Vec<CMat> = (0..n)
            .map(|b| {
                self.rn
                    .iter()
                    .enumerate()
                    .fold(zeros(k, k), |acc, (a, row)| acc + &row[b] * z0.powi(a as i32))
            })
            .collect();
        let sums = crate::exact::moment_products(w, &MatrixPolynomial::new(c), false, 0..n)?;
        Ok(sums
            .iter()
            .enumerate()
            .map(|(m, v)| norm(&(v - identity(k) * z0.powi(m as i32))) / z0.norm().powi(m as i32))
            .fold(0.0, f64::max))
    }

    /// max relative gap ‖P̂_N^{-1}(z) − (1/2πi)∮ Q_{N-1}W/(s − z) ds‖ over the points.
    pub fn remarkable_identity(&self, points: &[C64]) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for &z in points {
            let a = inverse(&self.sol.phat.eval(z), "remarkable_identity")?;
            worst = worst.max(crate::linalg::rel_diff(&self.cauchy_qw(z)?, &a));
        }
        Ok(worst)
    }
}

/// G^{-1} for the Gram matrix G_{mn} = M_{m+n}: the Gram-form coefficients of R_N.
pub fn rn_coefficients_gram(t: &MomentTable, n: usize) -> Result<Vec<Vec<CMat>>> {
    let k = t.dim();
    if n == 0 {
        return Ok(Vec::new());
    }
    let h = hankel(&t.moments, n, k);
    let hi: DMatrix<C64> = inverse(&h, "reproducing_kernel")?;
    Ok((0..n)
        .map(|a| (0..n).map(|b| hi.view((a * k, b * k), (k, k)).into_owned()).collect())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;
    use crate::weights::{IdentityWeight, ScalarRational};

    #[test]
    fn scalar_moments_are_powers() {
        let beta = 0.4;
        let w = ScalarRational {
            scale: 1.0,
            zeros: vec![],
            poles: vec![beta],
        };
        let g = CircleContour::centered(1.0, 64).unwrap();
        let t = compute_moments(&w, &g, 6).unwrap();
        for (j, m) in t.moments.iter().enumerate() {
            assert!((m[(0, 0)] - beta.powi(j as i32)).norm() < 1e-13);
        }
    }

    #[test]
    fn identity_weight_moments_vanish() {
        let g = CircleContour::centered(1.0, 64).unwrap();
        let t = compute_moments(&IdentityWeight { k: 2 }, &g, 4).unwrap();
        assert!(t.moments.iter().all(|m| norm(m) < 1e-14));
    }

    #[test]
    fn moments_are_linear_in_prefactor() {
        let g = CircleContour::centered(1.0, 64).unwrap();
        let w1 = ScalarRational { scale: 1.0, zeros: vec![2.0], poles: vec![0.3, 0.5] };
        let w3 = ScalarRational { scale: 3.0, ..w1.clone() };
        let a = compute_moments(&w1, &g, 3).unwrap();
        let b = compute_moments(&w3, &g, 3).unwrap();
        for j in 0..4 {
            assert!(norm(&(&a.moments[j] * c(3.0, 0.0) - &b.moments[j])) < 1e-13);
        }
    }

    #[test]
    fn degree_zero_conventions() {
        let g = CircleContour::centered(1.0, 64).unwrap();
        let w = ScalarRational { scale: 1.0, zeros: vec![], poles: vec![0.5] };
        let t = compute_moments(&w, &g, 2).unwrap();
        assert_eq!(solve_left(&t, 0).unwrap(), MatrixPolynomial::identity(1));
        assert_eq!(solve_right(&t, 0).unwrap(), MatrixPolynomial::identity(1));
        let q = solve_q(&t, 1).unwrap();
        assert!((q.coeffs[0][(0, 0)] + 1.0).norm() < 1e-13);
    }

    #[test]
    fn rank_one_scalar_system_is_singular_for_n_two() {
        let g = CircleContour::centered(1.0, 64).unwrap();
        let w = ScalarRational { scale: 1.0, zeros: vec![], poles: vec![0.5] };
        let t = compute_moments(&w, &g, 6).unwrap();
        assert!(matches!(solve_left(&t, 2), Err(Error::SingularMomentSystem { .. })));
        let p = solve_left(&t, 1).unwrap();
        assert!((p.coeffs[0][(0, 0)] + 0.5).norm() < 1e-13);
    }
}
