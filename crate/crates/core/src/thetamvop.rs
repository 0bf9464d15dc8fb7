//! Explicit MVOPs of the 2×2-periodic Aztec diamond from theta functions on the
//! spectral curve, and numerical checks of the structural lemmas behind them.

use std::f64::consts::PI;

use serde::Serialize;

use crate::contour::{CircleContour, EXTRACT_TOL};
use crate::elliptic::{EllipticData, Side};
use crate::error::{Error, Result};
use crate::linalg::{det, inverse, max_abs, norm, rel_diff, CMat, C64};
use crate::poly::{poly_from_roots, MatrixPolynomial};
use crate::weights::WeightData;

/// Default node count on the extraction circle.
pub const THETA_NODES: usize = 128;
/// Relative off-triangle mass allowed in C_N and Ĉ_N.
pub const TRIANGULAR_TOL: f64 = 1e-8;

pub struct ThetaFrame {
    pub data: EllipticData,
    /// Zeros α_i^v / γ_i^v of det φ for the two columns.
    pub det_zeros: [f64; 2],
}

#[derive(Debug, Clone, Serialize)]
pub struct ThetaPolynomial {
    #[serde(skip)]
    pub poly: MatrixPolynomial,
    /// C_N for P_N, Ĉ_N for P̂_N.
    #[serde(skip)]
    pub normalizer: CMat,
    pub extraction_defect: f64,
    pub off_triangle: f64,
    pub radius: f64,
}

fn sigma1() -> CMat {
    CMat::from_row_slice(2, 2, &[C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0)])
}

fn diag(a: C64, b: C64) -> CMat {
    CMat::from_row_slice(2, 2, &[a, C64::new(0.0, 0.0), C64::new(0.0, 0.0), b])
}

impl ThetaFrame {
    pub fn new(data: EllipticData) -> Self {
        let p = &data.curve.period;
        let z = |i: usize| p.alpha[0][i] * p.alpha[1][i] / (p.gamma[0][i] * p.gamma[1][i]);
        ThetaFrame {
            det_zeros: [z(0), z(1)],
            data,
        }
    }

    pub fn from_weights(w: &WeightData) -> Result<Self> {
        Ok(ThetaFrame::new(EllipticData::from_weights(w)?))
    }

    fn check_domain(&self, op: &'static str, z: C64) -> Result<()> {
        let [x3, _, _, x0] = self.data.x;
        if z.im == 0.0 && z.re >= x3 && z.re <= x0 {
            return Err(Error::domain(op, format!("z = {} lies on [x₃, x₀]", z.re)));
        }
        Ok(())
    }

    fn b(&self) -> (f64, f64) {
        (self.data.curve.b1, self.data.curve.b2)
    }

    /// (z − β₁^v)(z − β₂^v) [[Φ₁₂, Φ₁₂], [λ₁ − Φ₁₁, λ₂ − Φ₁₁]].
    pub fn e(&self, z: C64) -> Result<CMat> {
        self.check_domain("eval_E", z)?;
        let m = self.data.curve.phi(z)?;
        let (l1, l2) = self.data.eigen_branches(z)?;
        let (b1, b2) = self.b();
        let pre = (z - b1) * (z - b2);
        Ok(CMat::from_row_slice(
            2,
            2,
            &[m[(0, 1)] * pre, m[(0, 1)] * pre, (l1 - m[(0, 0)]) * pre, (l2 - m[(0, 0)]) * pre],
        ))
    }

    /// Unreduced (𝒜(z^{(1)}), 𝒜(z^{(2)})).
    pub fn abel_pair(&self, z: C64) -> Result<(C64, C64)> {
        let u = self.data.abel1(z, Side::Off)?;
        Ok((u, -u))
    }

    fn g_of(&self, u: C64) -> C64 {
        let d = &self.data;
        let k = d.k;
        let th = |c: f64| d.theta(u - c - k);
        th(d.abel_p[0]) * th(d.abel_p[1]) / (th(d.abel_p_inf(1)) * th(d.abel_p_inf(2)))
    }

    pub fn g(&self, z: C64) -> Result<(C64, C64)> {
        self.check_domain("eval_G", z)?;
        let (u1, u2) = self.abel_pair(z)?;
        Ok((self.g_of(u1), self.g_of(u2)))
    }

    pub fn g_matrix(&self, z: C64, n: usize) -> Result<CMat> {
        let (g1, g2) = self.g(z)?;
        Ok(diag(g1.powi(n as i32), g2.powi(n as i32)))
    }

    /// ψ_row(u; ω) with row 1 anchored at p* and row 2 at p**.
    pub fn psi(&self, row: usize, u: C64, omega: f64) -> C64 {
        let d = &self.data;
        let a = if row == 1 { d.abel_p_star } else { d.abel_p_star2 };
        d.theta(u - omega - a - d.k) / d.theta(u - a - d.k)
    }

    pub fn e_omega(&self, omega: f64, z: C64) -> Result<CMat> {
        let e = self.e(z)?;
        let (u1, u2) = self.abel_pair(z)?;
        let u = [u1, u2];
        Ok(CMat::from_fn(2, 2, |r, c| e[(r, c)] * self.psi(r + 1, u[c], omega)))
    }

    /// E_{−Nω₀}(z) G^N(z) E^{-1}(z).
    pub fn u_matrix(&self, z: C64, n: usize) -> Result<CMat> {
        let w = -(n as f64) * self.data.omega0;
        Ok(self.e_omega(w, z)? * self.g_matrix(z, n)? * inverse(&self.e(z)?, "theorem_PN")?)
    }

    /// E(z) G^N(z) E_{Nω₀}^{-1}(z).
    pub fn uhat_matrix(&self, z: C64, n: usize) -> Result<CMat> {
        let w = n as f64 * self.data.omega0;
        Ok(self.e(z)? * self.g_matrix(z, n)? * inverse(&self.e_omega(w, z)?, "theorem_PNhat")?)
    }

    /// 2·max(|x₃|, β_i^v, α_i^v/γ_i^v, 1).
    pub fn extraction_radius(&self) -> f64 {
        let (b1, b2) = self.b();
        2.0 * [self.data.x[0].abs(), b1, b2, self.det_zeros[0], self.det_zeros[1], 1.0]
            .into_iter()
            .fold(0.0, f64::max)
    }

    fn extract<F>(&self, f: F, n: usize, m: usize) -> Result<(MatrixPolynomial, f64, f64)>
    where
        F: Fn(C64) -> Result<CMat> + Sync,
    {
        let radius = self.extraction_radius();
        let c = CircleContour::centered(radius, m)?;
        let (poly, defect) = c.extract_with_defect(&f, n)?;
        if defect > EXTRACT_TOL {
            return Err(Error::DegreeMismatch { degree: n, defect });
        }
        Ok((poly, defect, radius))
    }

    fn triangular(c: &CMat) -> Result<f64> {
        let mass = c[(0, 1)].norm() / max_abs(c).max(f64::MIN_POSITIVE);
        if mass > TRIANGULAR_TOL {
            return Err(Error::TriangularityViolation { mass });
        }
        Ok(mass)
    }

    /// P_N = C_N E_{−Nω₀} G^N E^{-1} with C_N the inverse leading coefficient.
    pub fn theorem_pn(&self, n: usize, nodes: Option<usize>) -> Result<ThetaPolynomial> {
        if n == 0 {
            return Ok(ThetaPolynomial {
                poly: MatrixPolynomial::identity(2),
                normalizer: CMat::identity(2, 2),
                extraction_defect: 0.0,
                off_triangle: 0.0,
                radius: self.extraction_radius(),
            });
        }
        let (u, defect, radius) = self.extract(|z| self.u_matrix(z, n), n, nodes.unwrap_or(THETA_NODES))?;
        let cn = inverse(&u.coeffs[n], "theorem_PN")?;
        let off = Self::triangular(&cn)?;
        Ok(ThetaPolynomial {
            poly: u.left_mul(&cn),
            normalizer: cn,
            extraction_defect: defect,
            off_triangle: off,
            radius,
        })
    }

    /// P̂_N = E G^N E_{Nω₀}^{-1} Ĉ_N.
    pub fn theorem_pnhat(&self, n: usize, nodes: Option<usize>) -> Result<ThetaPolynomial> {
        if n == 0 {
            return self.theorem_pn(0, nodes);
        }
        let (u, defect, radius) = self.extract(|z| self.uhat_matrix(z, n), n, nodes.unwrap_or(THETA_NODES))?;
        let cn = inverse(&u.coeffs[n], "theorem_PNhat")?;
        let off = Self::triangular(&cn)?;
        Ok(ThetaPolynomial {
            poly: u.right_mul(&cn),
            normalizer: cn,
            extraction_defect: defect,
            off_triangle: off,
            radius,
        })
    }

    /// max relative spread of det U(z) / ((z − β₁^v)(z − β₂^v))^N over probe points.
    pub fn det_u_spread(&self, n: usize, probes: &[C64]) -> Result<f64> {
        let (b1, b2) = self.b();
        let ratios: Vec<C64> = probes
            .iter()
            .map(|&z| Ok(det(&self.u_matrix(z, n)?) / ((z - b1) * (z - b2)).powi(n as i32)))
            .collect::<Result<_>>()?;
        let r0 = ratios[0];
        Ok(ratios.iter().map(|r| (r - r0).norm() / r0.norm()).fold(0.0, f64::max))
    }
}

/// Offsets for one-sided limits at real x.
fn eps_at(x: f64) -> f64 {
    1e-6 * x.abs().max(1.0)
}

/// Boundary value at x from the side of sign(e), Richardson-extrapolated.
fn limit<F: Fn(C64) -> Result<CMat>>(f: &F, x: f64, e: f64) -> Result<CMat> {
    Ok(f(C64::new(x, e))? * C64::from(2.0) - f(C64::new(x, 2.0 * e))?)
}

#[derive(Debug, Clone, Serialize)]
pub struct LemmaReport {
    /// ‖E₁₁ − E₁₂‖ relative, at probes.
    pub e11_e12_gap: f64,
    /// Degree-1 fit defect of E₁₁ and |E₁₁(x*)| relative to its scale.
    pub e11_fit_defect: f64,
    pub e11_at_x_star: f64,
    /// Degree-3 fit defect of E₂₁E₂₂ and its relative size at 0, x*, x**.
    pub e21e22_fit_defect: f64,
    pub e21e22_zero_residual: f64,
    pub e_jump: f64,
    pub g_jump: f64,
    pub e_omega_jump: f64,
    /// Degree-6 fit defect of (det E_ω)² and the coefficient gap to lead·Π(z − x_j)(z − x*)².
    pub det_e_omega_fit_defect: f64,
    pub det_e_omega_zero_gap: f64,
    /// |g₁(β_j^v)| relative to max |g₁| on a small circle around β_j^v.
    pub g1_zero_residual: f64,
    /// min |g₂(β_j^v)| relative to the same neighbourhood scale.
    pub g2_at_poles: f64,
    pub det_g_fit_defect: f64,
    pub det_g_zero_gap: f64,
    /// g_j(z)/z at two large radii: relative change and the limits.
    pub c_inf_change: f64,
    pub c_inf: [[f64; 2]; 2],
}

fn interior_points(a: f64, b: f64) -> [f64; 3] {
    [a + 0.23 * (b - a), a + 0.51 * (b - a), a + 0.77 * (b - a)]
}

impl ThetaFrame {
    fn fit<F>(&self, f: F, degree: usize) -> Result<(Vec<C64>, f64)>
    where
        F: Fn(C64) -> Result<C64> + Sync,
    {
        let c = CircleContour::centered(self.extraction_radius(), 64)?;
        let (p, d) = c.extract_with_defect(&|z| Ok(CMat::from_element(1, 1, f(z)?)), degree)?;
        Ok((p.coeffs.iter().map(|a| a[(0, 0)]).collect(), d))
    }

    fn root_gap(coeffs: &[C64], roots: &[C64]) -> f64 {
        let lead = *coeffs.last().unwrap();
        let expect: Vec<C64> = poly_from_roots(roots).into_iter().map(|v| v * lead).collect();
        let scale = expect.iter().fold(0.0f64, |s, v| s.max(v.norm()));
        coeffs.iter().zip(&expect).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max) / scale
    }

    /// Max over sample points of ‖F₊ − J(F₋)‖ / ‖F₊‖ in each real interval.
    fn jump<F, J>(&self, f: &F, jumps: &[(f64, f64, J)]) -> Result<f64>
    where
        F: Fn(C64) -> Result<CMat>,
        J: Fn(&CMat) -> CMat,
    {
        let mut worst: f64 = 0.0;
        for (a, b, j) in jumps {
            for x in interior_points(*a, *b) {
                let e = eps_at(x);
                let up = limit(f, x, e)?;
                let low = limit(f, x, -e)?;
                worst = worst.max(rel_diff(&j(&low), &up));
            }
        }
        Ok(worst)
    }

    pub fn lemma_report(&self, omega: f64) -> Result<LemmaReport> {
        let d = &self.data;
        let [x3, x2, x1, x0] = d.x;
        let (xs, xss) = (d.x_star, d.x_star2);
        let (b1, b2) = self.b();
        let probes = [C64::new(-0.7, 1.3), C64::new(2.1, -0.4), C64::new(-3.3, -2.2)];
        let mut gap: f64 = 0.0;
        for &z in &probes {
            let e = self.e(z)?;
            gap = gap.max((e[(0, 0)] - e[(0, 1)]).norm() / e[(0, 0)].norm());
        }
        let (e11, e11_def) = self.fit(|z| Ok(self.e(z)?[(0, 0)]), 1)?;
        let e11_scale = e11.iter().fold(0.0f64, |s, v| s.max(v.norm())) * xs.abs().max(1.0);
        let e11_at = crate::poly::scalar_poly_eval(&e11, C64::from(xs)).norm() / e11_scale;
        let (e2, e2_def) = self.fit(
            |z| {
                let e = self.e(z)?;
                Ok(e[(1, 0)] * e[(1, 1)])
            },
            3,
        )?;
        let e2_gap = Self::root_gap(&e2, &[C64::from(0.0), C64::from(xs), C64::from(xss)]);

        let swap = |m: &CMat| m * sigma1();
        let same = |m: &CMat| m.clone();
        let cuts_e: Vec<(f64, f64, Box<dyn Fn(&CMat) -> CMat>)> = vec![
            (x3, x2, Box::new(swap)),
            (x1, x0, Box::new(swap)),
            (x2, x1, Box::new(same)),
            (x0, x0 + (x0 - x3).max(1.0), Box::new(same)),
            (x3 - (x0 - x3).max(1.0), x3, Box::new(same)),
        ];
        let e_jump = self.jump(&|z| self.e(z), &cuts_e)?;

        let w0 = d.omega0;
        let ph = |t: f64| C64::new(0.0, 2.0 * PI * t).exp();
        let g_cuts: Vec<(f64, f64, Box<dyn Fn(&CMat) -> CMat>)> = vec![
            (x3, x2, Box::new(|m: &CMat| sigma1() * m * sigma1())),
            (x1, x0, Box::new(|m: &CMat| sigma1() * m * sigma1())),
            (x2, x1, Box::new(move |m: &CMat| m * diag(ph(w0), ph(-w0)))),
            (x0, x0 + (x0 - x3).max(1.0), Box::new(same)),
        ];
        let g_jump = self.jump(&|z| self.g_matrix(z, 1), &g_cuts)?;
        let eo_cuts: Vec<(f64, f64, Box<dyn Fn(&CMat) -> CMat>)> = vec![
            (x3, x2, Box::new(swap)),
            (x1, x0, Box::new(swap)),
            (x2, x1, Box::new(move |m: &CMat| m * diag(ph(omega), ph(-omega)))),
            (x0, x0 + (x0 - x3).max(1.0), Box::new(same)),
        ];
        let e_omega_jump = self.jump(&|z| self.e_omega(omega, z), &eo_cuts)?;

        let (de, de_def) = self.fit(
            |z| {
                let v = det(&self.e_omega(omega, z)?);
                Ok(v * v)
            },
            6,
        )?;
        let de_gap = Self::root_gap(
            &de,
            &[x3, x2, x1, x0, xs, xs].map(C64::from),
        );

        let mut g1_res: f64 = 0.0;
        let mut g2_min = f64::INFINITY;
        for b in [b1, b2] {
            let ring = CircleContour::new(C64::from(b), 0.05 * (b - x0), 64)?;
            let local = ring
                .nodes()
                .into_iter()
                .map(|z| Ok(self.g(z)?.0.norm()))
                .collect::<Result<Vec<f64>>>()?
                .into_iter()
                .fold(0.0, f64::max);
            let local2 = ring
                .nodes()
                .into_iter()
                .map(|z| Ok(self.g(z)?.1.norm()))
                .collect::<Result<Vec<f64>>>()?
                .into_iter()
                .fold(0.0, f64::max);
            let (g1, g2) = self.g(C64::from(b))?;
            g1_res = g1_res.max(g1.norm() / local);
            g2_min = g2_min.min(g2.norm() / local2);
        }
        let (dg, dg_def) = self.fit(
            |z| {
                let (g1, g2) = self.g(z)?;
                Ok(g1 * g2)
            },
            2,
        )?;
        let dg_gap = Self::root_gap(&dg, &[C64::from(b1), C64::from(b2)]);

        let r = 1e4 * self.extraction_radius();
        let z1 = C64::new(0.3 * r, 0.8 * r);
        let z2 = z1 * 10.0;
        let (a1, a2) = self.g(z1)?;
        let (c1, c2) = self.g(z2)?;
        let lim = [a1 / z1, a2 / z1, c1 / z2, c2 / z2];
        let change = ((lim[2] - lim[0]).norm() / lim[2].norm()).max((lim[3] - lim[1]).norm() / lim[3].norm());
        Ok(LemmaReport {
            e11_e12_gap: gap,
            e11_fit_defect: e11_def,
            e11_at_x_star: e11_at,
            e21e22_fit_defect: e2_def,
            e21e22_zero_residual: e2_gap,
            e_jump,
            g_jump,
            e_omega_jump,
            det_e_omega_fit_defect: de_def,
            det_e_omega_zero_gap: de_gap,
            g1_zero_residual: g1_res,
            g2_at_poles: g2_min,
            det_g_fit_defect: dg_def,
            det_g_zero_gap: dg_gap,
            c_inf_change: change,
            c_inf: [[lim[2].re, lim[2].im], [lim[3].re, lim[3].im]],
        })
    }

    /// max over the branch points of ‖U(x_j + δe^{iθ})‖ at δ = 1e−7 relative to δ = 1e−3, θ = ±π/4, ±3π/4.
    pub fn branch_point_growth(&self, n: usize) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for &x in &self.data.x {
            for k in [1.0, 3.0, 5.0, 7.0] {
                let dir = C64::from_polar(1.0, k * PI / 4.0);
                let s = x.abs().max(1.0);
                let far = norm(&self.u_matrix(C64::from(x) + dir * (1e-3 * s), n)?);
                let near = norm(&self.u_matrix(C64::from(x) + dir * (1e-7 * s), n)?);
                worst = worst.max(near / far);
            }
        }
        Ok(worst)
    }

    /// Relative gap of U across each real interval, between x + iε and x − iε.
    pub fn u_seam(&self, n: usize) -> Result<f64> {
        let [x3, x2, x1, x0] = self.data.x;
        let mut worst: f64 = 0.0;
        for (a, b) in [(x3, x2), (x2, x1), (x1, x0)] {
            for x in interior_points(a, b) {
                let e = eps_at(x);
                let up = limit(&|z| self.u_matrix(z, n), x, e)?;
                let low = limit(&|z| self.u_matrix(z, n), x, -e)?;
                worst = worst.max(rel_diff(&up, &low));
            }
        }
        Ok(worst)
    }

    /// ‖E_ω(x* ± iε)‖ and ‖E_ω(x** ± iε)‖ for shrinking ε, as a growth ratio.
    pub fn e_omega_growth(&self, omega: f64) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for x in [self.data.x_star, self.data.x_star2] {
            for sign in [1.0, -1.0] {
                let far = norm(&self.e_omega(omega, C64::new(x, sign * 1e-3))?);
                let near = norm(&self.e_omega(omega, C64::new(x, sign * 1e-9))?);
                worst = worst.max(near / far);
            }
        }
        Ok(worst)
    }
}

/// Eigen identity Φ E(:, j) = λ_j E(:, j), relative residual.
pub fn eigen_residual(frame: &ThetaFrame, z: C64) -> Result<f64> {
    let e = frame.e(z)?;
    let m = frame.data.curve.phi(z)?;
    let (l1, l2) = frame.data.eigen_branches(z)?;
    let lhs = &m * &e;
    let rhs = CMat::from_fn(2, 2, |r, c| e[(r, c)] * if c == 0 { l1 } else { l2 });
    Ok(rel_diff(&lhs, &rhs))
}
