//! Spectral curve of the 2×2-periodic Aztec diamond: branch points, eigenvalue
//! branches, periods, the Abel map, Jacobi theta functions and special points.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::num::NonZeroUsize;
use std::sync::{OnceLock, RwLock};

use gauss_quad::GaussLegendre;
use serde::Serialize;

use crate::contour::CircleContour;
use crate::error::{Error, Result};
use crate::linalg::{det, eval_real_poly, eval_real_poly_deriv, real_poly_roots, CMat, C64};
use crate::weights::{phi_b, phi_g, PeriodBlock, WeightData};

/// Relative separation below which x₂ and x₁ count as one double root.
pub const GENUS_ZERO_TOL: f64 = 1e-6;
pub const NONREAL_TOL: f64 = 1e-10;
/// Relative size of (γ₁₁γ₁₂ − γ₂₁γ₂₂)² below which x₃ is at −∞.
pub const INFINITE_BRANCH_TOL: f64 = 1e-12;
pub const ABEL_TOL: f64 = 1e-14;

type RealPoly = Vec<f64>;

fn pmul(a: &[f64], b: &[f64]) -> RealPoly {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn padd(a: &[f64], b: &[f64]) -> RealPoly {
    let mut out = vec![0.0; a.len().max(b.len())];
    for (i, x) in a.iter().enumerate() {
        out[i] += x;
    }
    for (i, y) in b.iter().enumerate() {
        out[i] += y;
    }
    out
}

type PolyMat = [[RealPoly; 2]; 2];

fn pm_mul(a: &PolyMat, b: &PolyMat) -> PolyMat {
    let entry = |r: usize, c: usize| padd(&pmul(&a[r][0], &b[0][c]), &pmul(&a[r][1], &b[1][c]));
    [[entry(0, 0), entry(0, 1)], [entry(1, 0), entry(1, 1)]]
}

fn trim(mut p: RealPoly) -> RealPoly {
    while p.len() > 1 && *p.last().unwrap() == 0.0 {
        p.pop();
    }
    p
}

/// Φ = φ₁φ₂φ₃φ₄ for one 2×2 period, with Ψ = (z − β₁^v)(z − β₂^v)Φ and D = (TrΨ)² − 4 detΨ.
#[derive(Debug, Clone)]
pub struct SpectralCurve {
    pub period: PeriodBlock,
    pub b1: f64,
    pub b2: f64,
    /// Ψ entries, ascending coefficients.
    pub psi: PolyMat,
    /// D, ascending coefficients, length 5.
    pub disc: Vec<f64>,
    /// z-power dropped when forming Ψ; both low coefficients must vanish.
    pub psi_low_defect: f64,
}

impl SpectralCurve {
    pub fn new(period: &PeriodBlock) -> Result<Self> {
        let shape_ok = |m: &Vec<Vec<f64>>| m.len() == 2 && m.iter().all(|r| r.len() == 2);
        let period = match period.alpha.first().map(|r| r.len()) {
            Some(1) => PeriodBlock {
                alpha: period.alpha.iter().map(|r| vec![r[0], r[0]]).collect(),
                beta: period.beta.iter().map(|r| vec![r[0], r[0]]).collect(),
                gamma: period.gamma.iter().map(|r| vec![r[0], r[0]]).collect(),
            },
            _ => period.clone(),
        };
        if !(shape_ok(&period.alpha) && shape_ok(&period.beta) && shape_ok(&period.gamma)) {
            return Err(Error::domain(
                "spectral_curve",
                "the elliptic construction needs k = 2 and period 2",
            ));
        }
        let (a, b, g) = (&period.alpha, &period.beta, &period.gamma);
        let b1 = b[0][0] * b[1][0];
        let b2 = b[0][1] * b[1][1];
        // z φ^b and (z − β^v) φ^g as polynomial matrices.
        let zb = |i: usize| -> PolyMat {
            [
                [vec![0.0, g[0][i]], vec![a[1][i]]],
                [vec![0.0, a[0][i]], vec![0.0, g[1][i]]],
            ]
        };
        let zg = |i: usize| -> PolyMat { [[vec![0.0, 1.0], vec![b[1][i]]], [vec![0.0, b[0][i]], vec![0.0, 1.0]]] };
        let full = pm_mul(&pm_mul(&pm_mul(&zb(0), &zg(0)), &zb(1)), &zg(1));
        let mut low: f64 = 0.0;
        let mut scale: f64 = 0.0;
        let psi: PolyMat = std::array::from_fn(|r| {
            std::array::from_fn(|c| {
                let p = &full[r][c];
                scale = p.iter().fold(scale, |s, v| s.max(v.abs()));
                low = low.max(p.first().copied().unwrap_or(0.0).abs());
                low = low.max(p.get(1).copied().unwrap_or(0.0).abs());
                trim(p.iter().skip(2).copied().chain(std::iter::once(0.0)).collect())
            })
        });
        let tr = padd(&psi[0][0], &psi[1][1]);
        let dt = padd(&pmul(&psi[0][0], &psi[1][1]), &pmul(&psi[0][1], &psi[1][0]).iter().map(|v| -v).collect::<Vec<_>>());
        let mut disc = padd(&pmul(&tr, &tr), &dt.iter().map(|v| -4.0 * v).collect::<Vec<_>>());
        disc.resize(5, 0.0);
        Ok(SpectralCurve {
            period,
            b1,
            b2,
            psi,
            disc,
            psi_low_defect: low / scale.max(f64::MIN_POSITIVE),
        })
    }

    pub fn from_weights(w: &WeightData) -> Result<Self> {
        match w.period() {
            Some(p) if w.k == 2 => SpectralCurve::new(p),
            _ => Err(Error::domain(
                "spectral_curve",
                "the elliptic construction needs k = 2 weights given by a period block",
            )),
        }
    }

    fn col(&self, m: &[Vec<f64>], i: usize) -> [f64; 2] {
        [m[0][i], m[1][i]]
    }

    pub fn phi(&self, z: C64) -> Result<CMat> {
        let p = &self.period;
        let mut acc = CMat::identity(2, 2);
        for i in 0..2 {
            acc *= phi_b(&self.col(&p.alpha, i), &self.col(&p.gamma, i), z)?;
            acc *= phi_g(&self.col(&p.beta, i), z)?;
        }
        Ok(acc)
    }

    pub fn psi_eval(&self, z: C64) -> CMat {
        CMat::from_fn(2, 2, |r, c| eval_real_poly(&self.psi[r][c], z))
    }

    /// Leading coefficient L = (γ₁₁γ₁₂ − γ₂₁γ₂₂)² of D.
    pub fn lead(&self) -> f64 {
        self.disc[4]
    }

    /// Limits of the eigenvalues at infinity, (Φ₁₁(∞), Φ₂₂(∞)).
    pub fn lambda_inf(&self) -> (f64, f64) {
        let g = &self.period.gamma;
        (g[0][0] * g[0][1], g[1][0] * g[1][1])
    }

    fn disc_scale(&self) -> f64 {
        self.disc.iter().fold(0.0, |s, v| s.max(v.abs()))
    }

    /// Real roots x₃ < x₂ < x₁ < x₀ of D.
    pub fn branch_points(&self) -> Result<[f64; 4]> {
        if self.lead() <= INFINITE_BRANCH_TOL * self.disc_scale() {
            return Err(Error::DegeneratePosition {
                detail: "γ₁₁γ₁₂ = γ₂₁γ₂₂, so x₃ = −∞ and the eigenvalues agree at infinity".into(),
            });
        }
        branch_points_of_quartic(&self.disc)
    }

    pub fn x_star(&self) -> f64 {
        let (a, b, g) = (&self.period.alpha, &self.period.beta, &self.period.gamma);
        let (a21, a12, a22) = (a[1][0], a[0][1], a[1][1]);
        let (b11, b21, b22) = (b[0][0], b[1][0], b[1][1]);
        let (g11, g12, g22) = (g[0][0], g[0][1], g[1][1]);
        (-a12 * a21 * b22 - a12 * b21 * b22 * g11 - a21 * a22 * b11 - a21 * b11 * b22 * g12)
            / (a21 * g22 + a22 * g11 + b21 * g11 * g22 + b22 * g11 * g12)
    }

    pub fn x_star2(&self) -> f64 {
        let (a, b, g) = (&self.period.alpha, &self.period.beta, &self.period.gamma);
        let (a11, a12, a22) = (a[0][0], a[0][1], a[1][1]);
        let (b11, b21, b12) = (b[0][0], b[1][0], b[0][1]);
        let (g21, g12, g22) = (g[1][0], g[0][1], g[1][1]);
        (-a11 * a12 * b21 - a11 * a22 * b12 - a11 * b12 * b21 * g22 - a22 * b11 * b12 * g21)
            / (a11 * g12 + a12 * g21 + b11 * g12 * g21 + b12 * g21 * g22)
    }
}

/// Sorted real roots of a quartic with real coefficients, polished by Newton.
pub fn branch_points_of_quartic(disc: &[f64]) -> Result<[f64; 4]> {
    let mut roots = real_poly_roots(disc);
    if roots.len() != 4 {
        return Err(Error::domain("branch_points", format!("discriminant has degree {}", roots.len())));
    }
    roots.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
    let scale = roots.iter().fold(1.0f64, |s, r| s.max(r.norm()));
    let (x2, x1) = (roots[1], roots[2]);
    if (x1 - x2).norm() < GENUS_ZERO_TOL * scale {
        return Err(Error::GenusZero { x2: x2.re, x1: x1.re });
    }
    let mut out = [0.0; 4];
    for (i, r) in roots.iter().enumerate() {
        let mut z = *r;
        let d = eval_real_poly_deriv(disc, z);
        if d.norm() > 0.0 {
            z -= eval_real_poly(disc, z) / d;
        }
        if z.im.abs() > NONREAL_TOL * (1.0 + z.re.abs()) {
            return Err(Error::NonRealBranchPoint { re: z.re, im: z.im });
        }
        out[i] = z.re;
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if out[3] > NONREAL_TOL * scale {
        return Err(Error::domain(
            "branch_points",
            format!("largest branch point {} is positive", out[3]),
        ));
    }
    Ok(out)
}

/// Branch points of z ↦ Φ(z) from sampling (TrΦ)² − 4 detΦ times ((z − b₁)(z − b₂))².
pub fn branch_points_by_sampling<F>(phi: F, b1: f64, b2: f64, radius: f64) -> Result<[f64; 4]>
where
    F: Fn(C64) -> Result<CMat> + Sync,
{
    let c = CircleContour::centered(radius, 64)?;
    let (p, _) = c.extract_with_defect(
        &|z| {
            let m = phi(z)?;
            let tr = m[(0, 0)] + m[(1, 1)];
            let q = (z - b1) * (z - b2);
            Ok(CMat::from_element(1, 1, (tr * tr - det(&m) * 4.0) * q * q))
        },
        4,
    )?;
    let coeffs: Vec<f64> = p.coeffs.iter().map(|a| a[(0, 0)].re).collect();
    branch_points_of_quartic(&coeffs)
}

fn gl_nodes() -> &'static [(f64, f64)] {
    static NODES: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    NODES.get_or_init(|| {
        GaussLegendre::new(NonZeroUsize::new(16).unwrap())
            .as_node_weight_pairs()
            .to_vec()
    })
}

fn gl_panel<F: Fn(f64) -> C64>(f: &F, a: f64, b: f64) -> C64 {
    let (m, h) = (0.5 * (a + b), 0.5 * (b - a));
    gl_nodes().iter().map(|&(x, w)| f(m + h * x) * w).sum::<C64>() * h
}

/// Panel budget of one adaptive integration.
const GL_MAX_PANELS: usize = 1 << 16;

/// Adaptive Gauss–Legendre on [a, b] with interval bisection; `tol` is relative to ∫|f|.
pub fn adaptive_gl<F: Fn(f64) -> C64>(f: &F, a: f64, b: f64, tol: f64) -> C64 {
    fn rec<F: Fn(f64) -> C64>(f: &F, a: f64, b: f64, whole: C64, abs_tol: f64, depth: u32, budget: &mut usize) -> C64 {
        let m = 0.5 * (a + b);
        let (l, r) = (gl_panel(f, a, m), gl_panel(f, m, b));
        let both = l + r;
        *budget = budget.saturating_sub(2);
        if depth == 0 || *budget == 0 || (both - whole).norm() <= abs_tol {
            both
        } else {
            rec(f, a, m, l, abs_tol, depth - 1, budget) + rec(f, m, b, r, abs_tol, depth - 1, budget)
        }
    }
    let (m, h) = (0.5 * (a + b), 0.5 * (b - a));
    let mag: f64 = gl_nodes().iter().map(|&(x, w)| f(m + h * x).norm() * w).sum::<f64>() * h.abs();
    let abs_tol = (tol * mag).max(f64::MIN_POSITIVE);
    let mut budget = GL_MAX_PANELS;
    rec(f, a, b, gl_panel(f, a, b), abs_tol, 40, &mut budget)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Side {
    Upper,
    Lower,
    Off,
}

#[derive(Debug, Clone, Serialize)]
pub struct EllipticDiagnostics {
    pub branch_points: [f64; 4],
    pub c: f64,
    pub tau: [f64; 2],
    pub tau_closed_form: [f64; 2],
    pub tau_doubled_change: f64,
    pub a_cycle: [f64; 2],
    pub omega0: f64,
    pub omega0_four_term: f64,
    pub torsion_distance: Option<f64>,
    pub x_star: f64,
    pub x_star2: f64,
    pub sheet_p_star: u8,
    pub sheet_p_star2: u8,
    pub abel_p: [f64; 2],
    pub abel_p_inf1: f64,
    pub sheet_p_inf1: u8,
}

/// Periods, Abel map and special points of a genus-one spectral curve.
pub struct EllipticData {
    pub curve: SpectralCurve,
    /// x₃, x₂, x₁, x₀.
    pub x: [f64; 4],
    pub c: f64,
    pub tau: C64,
    pub tau_closed_form: C64,
    pub tau_doubled_change: f64,
    pub a_cycle: C64,
    pub k: C64,
    sqrt_l: f64,
    sigma: f64,
    h0: f64,
    /// 𝒜(p₁), 𝒜(p₂) along the real axis on the sheet of each pole.
    pub abel_p: [f64; 2],
    pub sheet_p: [u8; 2],
    /// 𝒜(∞^{(1)}) and the sheet of p_{∞,1} = (∞, γ₁₁γ₁₂).
    pub abel_inf: f64,
    pub sheet_p_inf1: u8,
    pub x_star: f64,
    pub x_star2: f64,
    pub sheet_p_star: u8,
    pub sheet_p_star2: u8,
    pub abel_p_star: C64,
    pub abel_p_star2: C64,
    pub omega0: f64,
    pub omega0_four_term: f64,
    cache: RwLock<HashMap<(u64, u64, Side), C64>>,
}

impl std::fmt::Debug for EllipticData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EllipticData")
            .field("x", &self.x)
            .field("c", &self.c)
            .field("tau", &self.tau)
            .field("omega0", &self.omega0)
            .finish()
    }
}

/// Π_j √(z − x_j) with principal roots; real z is read as the upper limit.
fn sqrt_product(x: &[f64; 4], z: C64) -> C64 {
    let z = if z.im == 0.0 { C64::new(z.re, 0.0) } else { z };
    x.iter().map(|&xj| (z - xj).sqrt()).product()
}

impl EllipticData {
    pub fn new(curve: SpectralCurve) -> Result<Self> {
        let x = curve.branch_points()?;
        let [x3, x2, x1, x0] = x;
        // √|q(t)| without the factor |t − e|.
        let q_rest = |e: f64, t: f64| x.iter().filter(|&&xj| xj != e).map(|&xj| (t - xj).abs()).product::<f64>().sqrt();
        // ∫_a^b dt/√|q| with square-root endpoints, split at the midpoint.
        let real_period = |a: f64, b: f64| -> f64 {
            let m = 0.5 * (a + b);
            let half = |e: f64| {
                let d = m - e;
                let f = |t: f64| C64::from(2.0 * d.signum() * d.abs().sqrt() / q_rest(e, e + d * t * t));
                adaptive_gl(&f, 0.0, 1.0, ABEL_TOL).re
            };
            half(a) - half(b)
        };
        let c = 2.0 * real_period(x2, x1);
        let t_closed = 2.0 * real_period(x1, x0);
        let sqrt_l = curve.lead().sqrt();
        let scale = x.iter().fold(1.0f64, |s, v| s.max(v.abs()));
        let h0 = 0.5 * (x0 - x3).max(1.0);
        let mut data = EllipticData {
            x,
            c,
            tau: C64::new(0.0, t_closed / c),
            tau_closed_form: C64::new(0.0, t_closed / c),
            tau_doubled_change: 0.0,
            a_cycle: C64::new(0.0, 0.0),
            k: C64::new(0.5, 0.0),
            sqrt_l,
            sigma: 1.0,
            h0,
            abel_p: [0.0; 2],
            sheet_p: [1; 2],
            abel_inf: 0.0,
            sheet_p_inf1: 1,
            x_star: curve.x_star(),
            x_star2: curve.x_star2(),
            sheet_p_star: 1,
            sheet_p_star2: 1,
            abel_p_star: C64::new(0.0, 0.0),
            abel_p_star2: C64::new(0.0, 0.0),
            omega0: 0.0,
            omega0_four_term: 0.0,
            cache: RwLock::new(HashMap::new()),
            curve,
        };
        data.sigma = data.fix_sigma()?;
        let (tau, change) = data.b_period()?;
        data.tau = tau;
        data.tau_doubled_change = change;
        if tau.re.abs() > 1e-8 || tau.im <= 0.0 {
            return Err(Error::PeriodNormalizationFailure {
                detail: format!("τ = {tau} is not in iℝ⁺"),
            });
        }
        data.k = (C64::new(1.0, 0.0) + tau) * 0.5;
        data.a_cycle = (data.abel1(C64::from(x2), Side::Upper)? - data.abel1(C64::from(x1), Side::Upper)?) * 2.0;
        if (data.a_cycle - 1.0).norm() > 1e-9 {
            return Err(Error::PeriodNormalizationFailure {
                detail: format!("∮_a η = {} instead of 1", data.a_cycle),
            });
        }
        data.special_points(scale)?;
        data.poles()?;
        Ok(data)
    }

    pub fn from_weights(w: &WeightData) -> Result<Self> {
        EllipticData::new(SpectralCurve::from_weights(w)?)
    }

    pub fn s(&self, z: C64) -> C64 {
        sqrt_product(&self.x, z)
    }

    fn fix_sigma(&self) -> Result<f64> {
        let zr = C64::new(self.x[3], self.x[3].abs() + 1.0);
        let m = self.curve.phi(zr)?;
        let tr = m[(0, 0)] + m[(1, 1)];
        let d = self.sqrt_l * self.s(zr) / ((zr - self.curve.b1) * (zr - self.curve.b2));
        Ok(if (tr + d).norm() >= (tr - d).norm() { 1.0 } else { -1.0 })
    }

    /// (λ₁, λ₂) with |λ₁| ≥ |λ₂| off the real axis; real z reads as the upper limit.
    pub fn eigen_branches(&self, z: C64) -> Result<(C64, C64)> {
        if z.im == 0.0 && self.on_cut(z.re) {
            return Err(Error::domain("eigen_branches", format!("z = {} lies on a cut", z.re)));
        }
        self.eigen_branches_unchecked(z)
    }

    fn eigen_branches_unchecked(&self, z: C64) -> Result<(C64, C64)> {
        let m = self.curve.phi(z)?;
        let tr = m[(0, 0)] + m[(1, 1)];
        let d = self.sigma * self.sqrt_l * self.s(z) / ((z - self.curve.b1) * (z - self.curve.b2));
        Ok(((tr + d) * 0.5, (tr - d) * 0.5))
    }

    pub fn on_cut(&self, x: f64) -> bool {
        let [x3, x2, x1, x0] = self.x;
        (x3..=x2).contains(&x) || (x1..=x0).contains(&x)
    }

    /// τ from the loop around [x₁, x₀] on sheet 1, and its change under node doubling.
    fn b_period(&self) -> Result<(C64, f64)> {
        let [_, x2, x1, x0] = self.x;
        let center = 0.5 * (x1 + x0);
        let radius = 0.5 * (x0 - x1) + 0.5 * (x1 - x2);
        let loop_c = CircleContour::new(C64::from(center), radius, 64)?;
        let f = |z: C64| Ok(CMat::from_element(1, 1, 1.0 / (self.c * self.s(z))));
        let q = loop_c.integrate(&f)?;
        // integrate returns (1/2πi)∮.
        let v = q.value[(0, 0)] * C64::new(0.0, 2.0 * PI);
        let doubled = loop_c.with_nodes((2 * q.nodes).min(crate::contour::MAX_NODES))?.integrate_fixed(&f)?[(0, 0)]
            * C64::new(0.0, 2.0 * PI);
        let sign = if v.im >= 0.0 { 1.0 } else { -1.0 };
        Ok((v * sign, (doubled - v).norm()))
    }

    fn seg(&self, a: C64, b: C64) -> C64 {
        let f = |t: f64| {
            let z = a + (b - a) * t;
            (b - a) / self.s(z)
        };
        adaptive_gl(&f, 0.0, 1.0, ABEL_TOL)
    }

    /// ∫_a^b dζ/s(ζ) with an inverse square-root singularity at a.
    fn seg_sing(&self, a: C64, b: C64) -> C64 {
        let at = self.x.iter().position(|&xj| a.im == 0.0 && a.re == xj);
        let f = |t: f64| {
            let z = a + (b - a) * (t * t);
            match at {
                // √(z − a) = t √(b − a) cancels the Jacobian exactly.
                Some(j) => {
                    let z = if z.im == 0.0 { C64::new(z.re, 0.0) } else { z };
                    let rest: C64 = (0..4).filter(|&i| i != j).map(|i| (z - self.x[i]).sqrt()).product();
                    (b - a).sqrt() * 2.0 / rest
                }
                None => (b - a) * (2.0 * t) / self.s(z),
            }
        };
        adaptive_gl(&f, 0.0, 1.0, ABEL_TOL)
    }

    /// Unreduced 𝒜(z^{(1)}).
    pub fn abel1(&self, z: C64, side: Side) -> Result<C64> {
        let key = (z.re.to_bits(), z.im.to_bits(), side);
        if let Some(v) = self.cache.read().unwrap().get(&key) {
            return Ok(*v);
        }
        let v = self.abel1_uncached(z, side)?;
        self.cache.write().unwrap().insert(key, v);
        Ok(v)
    }

    fn abel1_uncached(&self, z: C64, side: Side) -> Result<C64> {
        let [x3, _, _, x0] = self.x;
        let x0c = C64::from(x0);
        if z.im == 0.0 && z.re >= x0 {
            if z.re == x0 {
                return Ok(C64::new(0.0, 0.0));
            }
            return Ok(self.seg_sing(x0c, z) / self.c);
        }
        let sigma = if z.im > 0.0 {
            1.0
        } else if z.im < 0.0 {
            -1.0
        } else {
            match side {
                Side::Upper => 1.0,
                Side::Lower => -1.0,
                Side::Off if z.re < x3 => 1.0,
                Side::Off => return Err(Error::PathCrossesCut { re: z.re, im: z.im }),
            }
        };
        let h = z.im.abs().max(self.h0);
        let p1 = C64::new(x0, sigma * h);
        let p2 = C64::new(z.re, sigma * h);
        let mut acc = self.seg_sing(x0c, p1) + self.seg(p1, p2);
        if (p2 - z).norm() > 0.0 {
            acc += if z.im == 0.0 { -self.seg_sing(z, p2) } else { self.seg(p2, z) };
        }
        Ok(acc / self.c)
    }

    /// 𝒜(z^{(1)}) along x₀ → x₀ + iσh → Re z + iσh → z with h = height·max(|Im z|, h₀).
    pub fn abel1_detour(&self, z: C64, sigma: f64, height: f64) -> C64 {
        let x0 = self.x[3];
        let h = height * z.im.abs().max(self.h0);
        let p1 = C64::new(x0, sigma * h);
        let p2 = C64::new(z.re, sigma * h);
        (self.seg_sing(C64::from(x0), p1) + self.seg(p1, p2) + self.seg(p2, z)) / self.c
    }

    /// Unreduced 𝒜(z^{(sheet)}).
    pub fn abel_unreduced(&self, sheet: u8, z: C64, side: Side) -> Result<C64> {
        let v = self.abel1(z, side)?;
        Ok(if sheet == 1 { v } else { -v })
    }

    pub fn reduce(&self, u: C64) -> C64 {
        let m = (u.im / self.tau.im).round();
        let u = u - self.tau * m;
        C64::new(u.re - u.re.round(), u.im)
    }

    /// 𝒜(z^{(sheet)}) reduced to |Re| ≤ ½, |Im/Im τ| ≤ ½.
    pub fn abel_map(&self, sheet: u8, z: C64, side: Side) -> Result<C64> {
        Ok(self.reduce(self.abel_unreduced(sheet, z, side)?))
    }

    /// 𝒜(∞^{(1)}) along the real axis beyond x₀.
    pub fn abel_infinity(&self) -> f64 {
        let x0 = self.x[3];
        let d = (x0 - self.x[0]).max(1.0);
        let near = self.seg_sing(C64::from(x0), C64::from(x0 + d));
        let f = |v: f64| {
            let t = x0 + d + v / (1.0 - v);
            C64::from(1.0 / ((1.0 - v) * (1.0 - v))) / self.s(C64::from(t))
        };
        let far = adaptive_gl(&f, 0.0, 1.0, ABEL_TOL);
        ((near + far) / self.c).re
    }

    pub fn theta(&self, u: C64) -> C64 {
        theta(u, self.tau)
    }

    fn special_points(&mut self, scale: f64) -> Result<()> {
        let [_, x2, x1, _] = self.x;
        let (xs, xss) = (self.x_star, self.x_star2);
        for (name, v) in [("x*", xs), ("x**", xss)] {
            if !(v > x2 && v < x1) {
                return Err(Error::DegeneratePosition {
                    detail: format!("{name} = {v} is outside (x₂, x₁) = ({x2}, {x1})"),
                });
            }
        }
        if (xs - xss).abs() < 1e-10 * scale {
            return Err(Error::DegeneratePosition {
                detail: format!("x* = x** = {xs}"),
            });
        }
        let pick = |x: f64, target: C64| -> Result<u8> {
            let (l1, l2) = self.eigen_branches(C64::from(x))?;
            Ok(if (l1 - target).norm() <= (l2 - target).norm() { 1 } else { 2 })
        };
        let m1 = self.curve.phi(C64::from(xs))?;
        let m2 = self.curve.phi(C64::from(xss))?;
        let (s1, s2) = (pick(xs, m1[(1, 1)])?, pick(xss, m2[(0, 0)])?);
        self.sheet_p_star = s1;
        self.sheet_p_star2 = s2;
        let sgn = |s: u8| if s == 1 { 1.0 } else { -1.0 };
        self.abel_p_star = self.abel1(C64::from(xs), Side::Upper)? * sgn(self.sheet_p_star);
        self.abel_p_star2 = self.abel1(C64::from(xss), Side::Upper)? * sgn(self.sheet_p_star2);
        Ok(())
    }

    fn poles(&mut self) -> Result<()> {
        let x0 = C64::from(self.x[3]);
        for (i, b) in [self.curve.b1, self.curve.b2].into_iter().enumerate() {
            let probe = C64::from(b * (1.0 + 1e-6) + 1e-9);
            let (l1, l2) = self.eigen_branches(probe)?;
            self.sheet_p[i] = if l1.norm() >= l2.norm() { 1 } else { 2 };
            let v = (self.seg_sing(x0, C64::from(b)) / self.c).re;
            self.abel_p[i] = if self.sheet_p[i] == 1 { v } else { -v };
        }
        self.abel_inf = self.abel_infinity();
        let (i1, i2) = self.curve.lambda_inf();
        self.sheet_p_inf1 = if i1 > i2 { 1 } else { 2 };
        self.omega0 = (self.abel_p[0] + self.abel_p[1]).rem_euclid(1.0);
        // Independent route: generic Abel map on each sheet, ∞ by its own integral.
        let ap = |i: usize, b: f64| -> f64 {
            let v = self.abel1_detour(C64::from(b), 1.0, 1.0).re;
            if self.sheet_p[i] == 1 {
                v
            } else {
                -v
            }
        };
        let inf1 = self.abel_p_inf(1);
        let inf2 = self.abel_p_inf(2);
        self.omega0_four_term = (ap(0, self.curve.b1) + ap(1, self.curve.b2) - inf1 - inf2).rem_euclid(1.0);
        Ok(())
    }

    /// 𝒜(p_{∞,j}).
    pub fn abel_p_inf(&self, j: u8) -> f64 {
        let v = if self.sheet_p_inf1 == 1 { self.abel_inf } else { -self.abel_inf };
        if j == 1 {
            v
        } else {
            -v
        }
    }

    /// Distance of N ω₀ to the nearest integer.
    pub fn torsion_distance(&self, n: usize) -> f64 {
        let v = n as f64 * self.omega0;
        (v - v.round()).abs()
    }

    /// Difference of the two ω₀ formulas, reduced mod 1.
    pub fn omega0_gap(&self) -> f64 {
        let d = self.omega0 - self.omega0_four_term;
        (d - d.round()).abs()
    }

    pub fn diagnostics(&self, n: Option<usize>) -> EllipticDiagnostics {
        EllipticDiagnostics {
            branch_points: self.x,
            c: self.c,
            tau: [self.tau.re, self.tau.im],
            tau_closed_form: [self.tau_closed_form.re, self.tau_closed_form.im],
            tau_doubled_change: self.tau_doubled_change,
            a_cycle: [self.a_cycle.re, self.a_cycle.im],
            omega0: self.omega0,
            omega0_four_term: self.omega0_four_term,
            torsion_distance: n.map(|n| self.torsion_distance(n)),
            x_star: self.x_star,
            x_star2: self.x_star2,
            sheet_p_star: self.sheet_p_star,
            sheet_p_star2: self.sheet_p_star2,
            abel_p: self.abel_p,
            abel_p_inf1: self.abel_p_inf(1),
            sheet_p_inf1: self.sheet_p_inf1,
        }
    }
}

/// ϑ(u; τ) = Σ_n exp(πi n² τ + 2πi n u).
pub fn theta(u: C64, tau: C64) -> C64 {
    let t = tau.im;
    // Terms decay like exp(−π t n² + 2π |Im u| n); stop once they are below 1e−17 of the peak.
    let center = u.im.abs() / t;
    let nmax = (center + (40.0 / (PI * t)).sqrt()).ceil() as i64 + 2;
    let i_pi = C64::new(0.0, PI);
    (-nmax..=nmax)
        .map(|n| {
            let nf = n as f64;
            (i_pi * (tau * (nf * nf) + u * (2.0 * nf))).exp()
        })
        .sum()
}
