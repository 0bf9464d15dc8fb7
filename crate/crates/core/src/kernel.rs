//! Correlation kernel blocks of the k-periodic Aztec diamond by three routes:
//! the reproducing kernel R_N, the Wiener–Hopf factors, and P_N directly.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contour::{CircleContour, ContourPair};
use crate::error::{Error, Result};
use crate::linalg::{inverse, norm, zeros, CMat, C64};
use crate::mvop::{MvopSolution, RhSolution};
use crate::weights::WeightData;
use crate::wienerhopf::WhFactorization;

/// Entry (j, j′) of the block is K(x, ky + j; x′, ky′ + j′).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelQuery {
    pub x: usize,
    #[serde(rename = "x_prime")]
    pub xp: usize,
    pub y: usize,
    #[serde(rename = "y_prime")]
    pub yp: usize,
}

impl KernelQuery {
    pub fn new(x: usize, xp: usize, y: usize, yp: usize) -> Self {
        KernelQuery { x, xp, y, yp }
    }

    /// 0 < x, x′ < 2kN − 1 and 0 ≤ y, y′ ≤ N − 1.
    pub fn validate(&self, w: &WeightData) -> Result<()> {
        let top = w.factor_count();
        let n = w.n;
        let bad_x = |v: usize| v == 0 || v + 1 >= top;
        if bad_x(self.x) || bad_x(self.xp) {
            return Err(Error::InvalidQuery(format!(
                "x = {}, x' = {} must satisfy 0 < x, x' < {}",
                self.x,
                self.xp,
                top as i64 - 1
            )));
        }
        if self.y >= n || self.yp >= n {
            return Err(Error::InvalidQuery(format!(
                "y = {}, y' = {} must satisfy 0 <= y, y' <= {}",
                self.y,
                self.yp,
                n as i64 - 1
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct KernelValue {
    /// −χ_{x>x′} (1/2πi)∮ Π_{x′+1}^{x} φ_i(z) z^{y′−y−1} dz; zero when x ≤ x′.
    pub single: CMat,
    pub double: CMat,
    pub total: CMat,
}

impl KernelValue {
    fn new(single: CMat, double: CMat) -> Self {
        let total = &single + &double;
        KernelValue { single, double, total }
    }
}

pub fn single_term(q: &KernelQuery, w: &WeightData, gp: &CircleContour) -> Result<CMat> {
    if q.x <= q.xp {
        return Ok(zeros(w.k, w.k));
    }
    let e = q.yp as i32 - q.y as i32 - 1;
    let v = gp.integrate(&|z| Ok(w.eval_partial_product(q.xp, q.x, z)? * z.powi(e)))?;
    Ok(-v.value)
}

/// Stacked moments (1/2πi)∮ f(z) (z/r)^j dz, j = 0..count, rescaled by r^j.
fn stacked<F>(c: &CircleContour, k: usize, count: usize, f: F) -> Result<Vec<CMat>>
where
    F: Fn(C64) -> Result<CMat> + Sync,
{
    let r = c.radius;
    let q = c.integrate(&|z| {
        let base = f(z)?;
        let u = (z - c.center) / r;
        let mut out = zeros(k, k * count);
        let mut p = C64::new(1.0, 0.0);
        for j in 0..count {
            out.view_mut((0, j * k), (k, k)).copy_from(&(&base * p));
            p *= u;
        }
        Ok(out)
    })?;
    Ok((0..count)
        .map(|j| q.value.view((0, j * k), (k, k)).into_owned() * C64::from(r.powi(j as i32)))
        .collect())
}

/// Double integral over Γ′ × Γ′ with R_N, separated through the coefficients R_{mn}.
pub fn kernel_via_rn(q: &KernelQuery, rh: &RhSolution, w: &WeightData, pair: &ContourPair) -> Result<KernelValue> {
    q.validate(w)?;
    let k = w.k;
    let n = rh.sol.n;
    let gp = &pair.gamma_prime;
    let top = w.factor_count();
    let (yp, y) = (q.yp as i32, q.y as i32);
    let a = stacked(gp, k, n, |z| Ok(w.eval_partial_product(q.xp, top, z)? * z.powi(yp)))?;
    let b = stacked(gp, k, n, |z| Ok(w.eval_partial_product(0, q.x, z)? * z.powi(-y - 1)))?;
    let r = rh.rn_coefficients();
    let mut double = zeros(k, k);
    for (m, am) in a.iter().enumerate() {
        for (nn, bn) in b.iter().enumerate() {
            double += am * &r[m][nn] * bn;
        }
    }
    Ok(KernelValue::new(single_term(q, w, gp)?, double))
}

/// The R_N route with every contour integral and R_{mn} computed exactly.
pub fn kernel_via_rn_exact(q: &KernelQuery, w: &WeightData) -> Result<KernelValue> {
    q.validate(w)?;
    let (single, double) = crate::exact::kernel_rn(w, q.x, q.xp, q.y, q.yp)?;
    Ok(KernelValue::new(single, double))
}

/// −(1/(2πi)²) ∮_{Γ′}∮_Γ F(s) G(z) ds dz / (s − z) on the tensor grid of the two contours.
pub fn double_integral<F, G>(gamma: &CircleContour, gamma_prime: &CircleContour, f: F, g: G) -> Result<CMat>
where
    F: Fn(C64) -> Result<CMat> + Sync,
    G: Fn(C64) -> Result<CMat> + Sync,
{
    let fs = gamma.sample(&f)?;
    let gz = gamma_prime.sample(&g)?;
    let zs = gamma_prime.nodes();
    let ss = gamma.nodes();
    let (rows, cols) = (fs[0].nrows(), gz[0].ncols());
    let total = (0..ss.len())
        .into_par_iter()
        .map(|i| {
            let s = ss[i];
            let mut inner = zeros(gz[0].nrows(), cols);
            for (j, gj) in gz.iter().enumerate() {
                inner += gj * (gamma_prime.weight(j) / (s - zs[j]));
            }
            &fs[i] * inner * gamma.weight(i)
        })
        .reduce(|| zeros(rows, cols), |a, b| a + b);
    Ok(-total)
}

/// Double term with (Π_1^{x′} φ_i(s))^{-1} φ_−(s) on Γ and φ^{-1}(z) Π_1^{x} φ_i(z) on Γ′.
pub fn kernel_via_wh(q: &KernelQuery, f: &WhFactorization, w: &WeightData, pair: &ContourPair) -> Result<KernelValue> {
    q.validate(w)?;
    let (yp, y) = (q.yp as i32, q.y as i32);
    let double = double_integral(
        &pair.gamma,
        &pair.gamma_prime,
        |s| Ok(w.eval_partial_product_inverse(0, q.xp, s)? * f.phi_minus(s)? * s.powi(yp)),
        |z| Ok(f.phi_inv(z)? * w.eval_partial_product(0, q.x, z)? * z.powi(-y - 1)),
    )?;
    Ok(KernelValue::new(single_term(q, w, &pair.gamma_prime)?, double))
}

/// Same double term with φ_− = P_N^{-1} and φ^{-1} = P_N.
pub fn kernel_via_pn(q: &KernelQuery, sol: &MvopSolution, w: &WeightData, pair: &ContourPair) -> Result<KernelValue> {
    q.validate(w)?;
    let (yp, y) = (q.yp as i32, q.y as i32);
    let double = double_integral(
        &pair.gamma,
        &pair.gamma_prime,
        |s| {
            let left = w.eval_partial_product_inverse(0, q.xp, s)?;
            Ok(left * inverse(&sol.p.eval(s), "kernel_via_PN")? * s.powi(yp))
        },
        |z| Ok(sol.p.eval(z) * w.eval_partial_product(0, q.x, z)? * z.powi(-y - 1)),
    )?;
    Ok(KernelValue::new(single_term(q, w, &pair.gamma_prime)?, double))
}

#[derive(Debug, Clone)]
pub struct TripleKernel {
    pub rn: KernelValue,
    pub wh: KernelValue,
    pub pn: KernelValue,
    /// Largest pairwise relative gap between the three totals.
    pub cross_check: f64,
}

pub fn kernel_all_routes(
    q: &KernelQuery,
    rh: &RhSolution,
    f: &WhFactorization,
    w: &WeightData,
    pair: &ContourPair,
) -> Result<TripleKernel> {
    let rn = match rh.sol.gram_inverse {
        Some(_) => kernel_via_rn_exact(q, w)?,
        None => kernel_via_rn(q, rh, w, pair)?,
    };
    let wh = kernel_via_wh(q, f, w, pair)?;
    let pn = kernel_via_pn(q, rh.sol, w, pair)?;
    let scale = norm(&rn.total).max(norm(&wh.total)).max(norm(&pn.total)).max(f64::MIN_POSITIVE);
    let gap = |a: &CMat, b: &CMat| norm(&(a - b)) / scale;
    let cross_check = gap(&rn.total, &wh.total)
        .max(gap(&rn.total, &pn.total))
        .max(gap(&wh.total, &pn.total));
    Ok(TripleKernel { rn, wh, pn, cross_check })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::PeriodBlock;

    fn weights() -> WeightData {
        WeightData::from_period(
            2,
            2,
            PeriodBlock {
                alpha: vec![vec![1.0, 2.0], vec![1.5, 0.5]],
                beta: vec![vec![0.3, 0.2], vec![0.1, 0.4]],
                gamma: vec![vec![1.0, 1.0], vec![1.0, 1.0]],
            },
        )
        .unwrap()
    }

    #[test]
    fn admissible_ranges() {
        let w = weights();
        assert!(KernelQuery::new(1, 1, 0, 1).validate(&w).is_ok());
        assert!(KernelQuery::new(0, 1, 0, 0).validate(&w).is_err());
        assert!(KernelQuery::new(1, 7, 0, 0).validate(&w).is_err());
        assert!(KernelQuery::new(1, 6, 0, 0).validate(&w).is_ok());
        assert!(KernelQuery::new(1, 1, 2, 0).validate(&w).is_err());
    }

    #[test]
    fn single_term_vanishes_unless_x_exceeds_x_prime() {
        let w = weights();
        let gp = CircleContour::centered(3.0, 64).unwrap();
        let v = single_term(&KernelQuery::new(2, 2, 0, 0), &w, &gp).unwrap();
        assert_eq!(norm(&v), 0.0);
        let v = single_term(&KernelQuery::new(3, 1, 0, 0), &w, &gp).unwrap();
        assert!(norm(&v) > 0.0);
    }
}
