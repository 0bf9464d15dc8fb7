//! Moments and monic MVOPs in exact arithmetic.
//!
//! Every pole of W lies inside the orthogonality circle, so
//! M_j = (1/2πi)∮ W(z) z^j dz is the coefficient of t^{j+1} in the expansion
//! of W in t = 1/z. Finite f64 weights are dyadic rationals m·2^e, so the
//! expansion stays in that ring and the block Hankel system is solved by
//! fraction-free Gauss–Jordan elimination over the integers.

use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};


use crate::error::{Error, Result};
use crate::linalg::{CMat, C64};
use crate::poly::MatrixPolynomial;
use crate::weights::WeightData;

/// m · 2^e.
#[derive(Clone, Debug, PartialEq)]
struct Dyadic {
    m: BigInt,
    e: i64,
}

impl Dyadic {
    fn zero() -> Self {
        Dyadic { m: BigInt::zero(), e: 0 }
    }

    fn one() -> Self {
        Dyadic { m: BigInt::one(), e: 0 }
    }

    fn from_f64(v: f64) -> Result<Self> {
        if !v.is_finite() {
            return Err(Error::Config(format!("weight {v} is not finite")));
        }
        if v == 0.0 {
            return Ok(Dyadic::zero());
        }
        let bits = v.to_bits();
        let exp = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (mant, e) = if exp == 0 { (frac, -1074) } else { (frac | (1u64 << 52), exp - 1075) };
        let m = BigInt::from(mant);
        Ok(Dyadic { m: if v < 0.0 { -m } else { m }, e }.normalized())
    }

    fn is_zero(&self) -> bool {
        self.m.is_zero()
    }

    fn normalized(mut self) -> Self {
        if self.m.is_zero() {
            self.e = 0;
            return self;
        }
        let tz = self.m.trailing_zeros().unwrap_or(0);
        if tz > 0 {
            self.m >>= tz;
            self.e += tz as i64;
        }
        self
    }

    /// m · 2^(e − base) for base ≤ e.
    fn scaled_to(&self, base: i64) -> BigInt {
        &self.m << ((self.e - base) as usize)
    }

    fn to_f64(&self) -> f64 {
        if self.m.is_zero() {
            return 0.0;
        }
        let r = if self.e >= 0 {
            BigRational::from_integer(&self.m << (self.e as usize))
        } else {
            BigRational::new_raw(self.m.clone(), BigInt::one() << ((-self.e) as usize))
        };
        r.to_f64().unwrap_or(f64::NAN)
    }
}

impl Add for &Dyadic {
    type Output = Dyadic;
    fn add(self, o: &Dyadic) -> Dyadic {
        if self.is_zero() {
            return o.clone();
        }
        if o.is_zero() {
            return self.clone();
        }
        let base = self.e.min(o.e);
        Dyadic {
            m: self.scaled_to(base) + o.scaled_to(base),
            e: base,
        }
        .normalized()
    }
}

impl Sub for &Dyadic {
    type Output = Dyadic;
    fn sub(self, o: &Dyadic) -> Dyadic {
        self + &(-o)
    }
}

impl Neg for &Dyadic {
    type Output = Dyadic;
    fn neg(self) -> Dyadic {
        Dyadic {
            m: -&self.m,
            e: self.e,
        }
    }
}

impl Mul for &Dyadic {
    type Output = Dyadic;
    fn mul(self, o: &Dyadic) -> Dyadic {
        if self.is_zero() || o.is_zero() {
            return Dyadic::zero();
        }
        Dyadic {
            m: &self.m * &o.m,
            e: self.e + o.e,
        }
    }
}

#[derive(Clone, Debug)]
struct DMat {
    k: usize,
    a: Vec<Dyadic>,
}

impl DMat {
    fn zero(k: usize) -> Self {
        DMat {
            k,
            a: vec![Dyadic::zero(); k * k],
        }
    }

    fn identity(k: usize) -> Self {
        let mut m = DMat::zero(k);
        for i in 0..k {
            *m.at_mut(i, i) = Dyadic::one();
        }
        m
    }

    fn at(&self, r: usize, c: usize) -> &Dyadic {
        &self.a[r * self.k + c]
    }

    fn at_mut(&mut self, r: usize, c: usize) -> &mut Dyadic {
        &mut self.a[r * self.k + c]
    }

    fn add_product(&mut self, x: &DMat, y: &DMat) {
        let k = self.k;
        for r in 0..k {
            for c in 0..k {
                let mut acc = self.at(r, c).clone();
                for j in 0..k {
                    if !x.at(r, j).is_zero() && !y.at(j, c).is_zero() {
                        acc = &acc + &(x.at(r, j) * y.at(j, c));
                    }
                }
                *self.at_mut(r, c) = acc;
            }
        }
    }

    fn to_cmat(&self) -> CMat {
        CMat::from_fn(self.k, self.k, |r, c| C64::from(self.at(r, c).to_f64()))
    }
}

/// Truncated series Σ_{n<len} c_n t^n with matrix coefficients.
type Series = Vec<DMat>;

fn mul(x: &Series, y: &Series, len: usize) -> Series {
    let k = x[0].k;
    let mut out = vec![DMat::zero(k); len];
    for (i, xi) in x.iter().enumerate() {
        for (j, yj) in y.iter().enumerate() {
            if i + j < len {
                out[i + j].add_product(xi, yj);
            }
        }
    }
    out
}

fn phi_b_series(alpha: &[f64], gamma: &[f64]) -> Result<Series> {
    let k = alpha.len();
    let mut c0 = DMat::zero(k);
    let mut c1 = DMat::zero(k);
    for j in 0..k {
        *c0.at_mut(j, j) = Dyadic::from_f64(gamma[j])?;
    }
    for j in 0..k.saturating_sub(1) {
        *c0.at_mut(j + 1, j) = Dyadic::from_f64(alpha[j])?;
    }
    let corner = c1.at(0, k - 1) + &Dyadic::from_f64(alpha[k - 1])?;
    if k == 1 {
        *c1.at_mut(0, 0) = corner;
    } else {
        *c1.at_mut(0, k - 1) = corner;
    }
    Ok(vec![c0, c1])
}

fn phi_g_series(beta: &[f64], len: usize) -> Result<Series> {
    let k = beta.len();
    let b: Vec<Dyadic> = beta.iter().map(|&v| Dyadic::from_f64(v)).collect::<Result<_>>()?;
    let prod = |r: std::ops::Range<usize>| r.fold(Dyadic::one(), |acc, i| &acc * &b[i]);
    let mut c0 = DMat::zero(k);
    let mut c1 = DMat::zero(k);
    for r in 0..k {
        for col in 0..k {
            if r >= col {
                *c0.at_mut(r, col) = prod(col..r);
            } else {
                *c1.at_mut(r, col) = &prod(col..k) * &prod(0..r);
            }
        }
    }
    let bv = prod(0..k);
    let mut geo = Vec::with_capacity(len);
    let mut p = Dyadic::one();
    for _ in 0..len {
        let mut m = DMat::zero(k);
        for i in 0..k {
            *m.at_mut(i, i) = p.clone();
        }
        geo.push(m);
        p = &p * &bv;
    }
    Ok(mul(&geo, &vec![c0, c1], len))
}

/// Exact M_0..M_upto of the weight.
fn moments_d(w: &WeightData, upto: usize) -> Result<Vec<DMat>> {
    let len = upto + 2;
    let k = w.k;
    let mut s: Series = vec![DMat::identity(k)];
    for i in 1..=w.columns() {
        s = mul(&s, &phi_b_series(&w.alpha_col(i), &w.gamma_col(i))?, len);
        s = mul(&s, &phi_g_series(&w.beta_col(i), len)?, len);
    }
    s.resize(len, DMat::zero(k));
    Ok(s.into_iter().skip(1).collect())
}

/// M_0..M_upto rounded to f64.
pub fn exact_moments(w: &WeightData, upto: usize) -> Result<Vec<CMat>> {
    Ok(moments_d(w, upto)?.iter().map(DMat::to_cmat).collect())
}

/// Fraction-free Gauss–Jordan on [A | B]: returns, per row i, the pivot d_i
/// and the integers n_ic with X_ic = n_ic / d_i.
fn solve_integer(a: &[Vec<Dyadic>], b: &[Vec<Dyadic>]) -> Result<Vec<(BigInt, Vec<BigInt>)>> {
    let n = a.len();
    let cols = b[0].len();
    let base = a
        .iter()
        .chain(b)
        .flatten()
        .filter(|v| !v.is_zero())
        .map(|v| v.e)
        .min()
        .unwrap_or(0);
    let mut g: Vec<Vec<BigInt>> = (0..n)
        .map(|i| {
            a[i].iter()
                .chain(&b[i])
                .map(|v| if v.is_zero() { BigInt::zero() } else { v.scaled_to(base) })
                .collect()
        })
        .collect();
    let width = n + cols;
    let mut prev = BigInt::one();
    for k in 0..n {
        let piv = (k..n).find(|&r| !g[r][k].is_zero()).ok_or(Error::SingularMomentSystem {
            condition: f64::INFINITY,
        })?;
        g.swap(k, piv);
        let pivot_row = g[k].clone();
        for (i, row) in g.iter_mut().enumerate() {
            if i == k {
                continue;
            }
            let f = row[k].clone();
            for j in 0..width {
                if j == k {
                    continue;
                }
                let v = &pivot_row[k] * &row[j] - &f * &pivot_row[j];
                row[j] = v / &prev;
            }
            row[k] = BigInt::zero();
        }
        prev = pivot_row[k].clone();
    }
    Ok(g.into_iter()
        .enumerate()
        .map(|(i, row)| {
            let d = row[i].clone();
            (d, row[n..].to_vec())
        })
        .collect())
}

fn ratio_f64(num: &BigInt, den: &BigInt) -> f64 {
    let (num, den) = if den.is_negative() { (-num, -den) } else { (num.clone(), den.clone()) };
    BigRational::new_raw(num, den).to_f64().unwrap_or(f64::NAN)
}

/// Solves A X = B for square A; returns X as f64, rounded once.
fn solve_dyadic(a: &[Vec<Dyadic>], b: &[Vec<Dyadic>]) -> Result<Vec<Vec<f64>>> {
    Ok(solve_integer(a, b)?
        .iter()
        .map(|(d, row)| row.iter().map(|v| ratio_f64(v, d)).collect())
        .collect())
}

fn monic(k: usize, blocks: Vec<CMat>) -> MatrixPolynomial {
    let mut coeffs = blocks;
    coeffs.push(CMat::identity(k, k));
    MatrixPolynomial::new(coeffs)
}

/// Monic (P_N, P̂_N) and Q_{N−1} from exact moments, rounded to f64 only at the end.
pub fn solve_exact_all(w: &WeightData, n: usize) -> Result<(MatrixPolynomial, MatrixPolynomial, MatrixPolynomial)> {
    let k = w.k;
    if n == 0 {
        return Ok((MatrixPolynomial::identity(k), MatrixPolynomial::identity(k), MatrixPolynomial::zero(k)));
    }
    let mu = moments_d(w, 2 * n - 1)?;
    let size = n * k;
    // H[(a,r),(b,c)] = (M_{a+b})_{rc}.
    let h = |i: usize, j: usize| mu[i / k + j / k].at(i % k, j % k).clone();
    let ht: Vec<Vec<Dyadic>> = (0..size).map(|i| (0..size).map(|j| h(j, i)).collect()).collect();
    // Left and Q systems share Hᵀ: X H = −[M_N … M_{2N−1}] and C H = −[0 … 0 I].
    let rhs_l: Vec<Vec<Dyadic>> = (0..size)
        .map(|i| {
            let mut row: Vec<Dyadic> = (0..k).map(|r| -mu[n + i / k].at(r, i % k)).collect();
            row.extend((0..k).map(|r| if i / k == n - 1 && i % k == r { -&Dyadic::one() } else { Dyadic::zero() }));
            row
        })
        .collect();
    let xt = solve_dyadic(&ht, &rhs_l)?;
    let block = |sol: &Vec<Vec<f64>>, m: usize, off: usize| {
        CMat::from_fn(k, k, |r, c| C64::from(sol[m * k + c][off + r]))
    };
    let left: Vec<CMat> = (0..n).map(|m| block(&xt, m, 0)).collect();
    let q: Vec<CMat> = (0..n).map(|m| block(&xt, m, k)).collect();
    let hm: Vec<Vec<Dyadic>> = (0..size).map(|i| (0..size).map(|j| h(i, j)).collect()).collect();
    let rhs_r: Vec<Vec<Dyadic>> = (0..size)
        .map(|i| (0..k).map(|c| -mu[n + i / k].at(i % k, c)).collect())
        .collect();
    let y = solve_dyadic(&hm, &rhs_r)?;
    let right: Vec<CMat> = (0..n)
        .map(|m| CMat::from_fn(k, k, |r, c| C64::from(y[m * k + r][c])))
        .collect();
    Ok((monic(k, left), monic(k, right), MatrixPolynomial::new(q)))
}

/// Σ_m A_m M_{m+j} (or Σ_m M_{m+j} A_m when `right`) for j in `range`, with the
/// f64 coefficients taken as exact and the sums rounded once.
pub fn moment_products(w: &WeightData, p: &MatrixPolynomial, right: bool, range: std::ops::Range<usize>) -> Result<Vec<CMat>> {
    let k = w.k;
    if range.is_empty() {
        return Ok(Vec::new());
    }
    let deg = p.coeffs.len() - 1;
    let mu = moments_d(w, deg + range.end - 1)?;
    let part = |f: fn(&C64) -> f64| -> Result<Vec<DMat>> {
        p.coeffs
            .iter()
            .map(|a| {
                let mut m = DMat::zero(k);
                for r in 0..k {
                    for c in 0..k {
                        *m.at_mut(r, c) = Dyadic::from_f64(f(&a[(r, c)]))?;
                    }
                }
                Ok(m)
            })
            .collect()
    };
    let (re, im) = (part(|z| z.re)?, part(|z| z.im)?);
    Ok(range
        .map(|j| {
            let mut acc_re = DMat::zero(k);
            let mut acc_im = DMat::zero(k);
            for (m, (ar, ai)) in re.iter().zip(&im).enumerate() {
                let mom = &mu[m + j];
                if right {
                    acc_re.add_product(mom, ar);
                    acc_im.add_product(mom, ai);
                } else {
                    acc_re.add_product(ar, mom);
                    acc_im.add_product(ai, mom);
                }
            }
            CMat::from_fn(k, k, |r, c| C64::new(acc_re.at(r, c).to_f64(), acc_im.at(r, c).to_f64()))
        })
        .collect())
}

/// max over j in `range` of ‖Σ_m A_m M_{m+j}‖ / ‖M_0‖, evaluated exactly.
pub fn orthogonality_defect(w: &WeightData, p: &MatrixPolynomial, right: bool, range: std::ops::Range<usize>) -> Result<f64> {
    let scale = crate::linalg::norm(&exact_moments(w, 0)?[0]).max(f64::MIN_POSITIVE);
    Ok(moment_products(w, p, right, range)?
        .iter()
        .map(|v| crate::linalg::norm(v) / scale)
        .fold(0.0, f64::max))
}

fn factor_series(w: &WeightData, m: usize, len: usize) -> Result<Series> {
    let d = crate::weights::FactorDescriptor::of(m);
    match d.kind {
        crate::weights::FactorKind::B => phi_b_series(&w.alpha_col(d.column), &w.gamma_col(d.column)),
        crate::weights::FactorKind::G => phi_g_series(&w.beta_col(d.column), len),
    }
}

/// Expansion of φ_{from+1}⋯φ_{to} in t = 1/z, first `len` coefficients.
fn partial_product_series(w: &WeightData, from: usize, to: usize, len: usize) -> Result<Series> {
    let mut s: Series = vec![DMat::identity(w.k)];
    for m in from + 1..=to {
        s = mul(&s, &factor_series(w, m, len)?, len);
    }
    s.resize(len, DMat::zero(w.k));
    Ok(s)
}

fn dmat_to_rational(m: &DMat) -> Vec<Vec<BigRational>> {
    (0..m.k)
        .map(|r| (0..m.k).map(|c| dyadic_rational(m.at(r, c))).collect())
        .collect()
}

fn dyadic_rational(v: &Dyadic) -> BigRational {
    if v.e >= 0 {
        BigRational::from_integer(&v.m << (v.e as usize))
    } else {
        BigRational::new(v.m.clone(), BigInt::one() << ((-v.e) as usize))
    }
}

/// Single and double terms of the R_N kernel formula for the block
/// (x, ky + ·; x′, ky′ + ·), evaluated exactly. Every integrand is rational with
/// all poles inside Γ′, so each contour integral is a coefficient of its
/// expansion at infinity, and R_{mn} is the inverse Gram matrix.
pub fn kernel_rn(w: &WeightData, x: usize, xp: usize, y: usize, yp: usize) -> Result<(CMat, CMat)> {
    let k = w.k;
    let n = w.n;
    let top = w.factor_count();
    let len = yp + n + 2;
    let coeff = |s: &Series, p: i64| -> DMat {
        // (1/2πi)∮ F(z) z^p dz is the coefficient of t^{p+1}.
        if p + 1 < 0 || (p + 1) as usize >= s.len() {
            DMat::zero(k)
        } else {
            s[(p + 1) as usize].clone()
        }
    };
    let single = if x > xp {
        let s = partial_product_series(w, xp, x, len)?;
        let mut v = coeff(&s, yp as i64 - y as i64 - 1).to_cmat();
        v.neg_mut();
        v
    } else {
        CMat::zeros(k, k)
    };
    let sa = partial_product_series(w, xp, top, len)?;
    let sb = partial_product_series(w, 0, x, len)?;
    let a: Vec<DMat> = (0..n).map(|m| coeff(&sa, (yp + m) as i64)).collect();
    let b: Vec<DMat> = (0..n).map(|j| coeff(&sb, j as i64 - y as i64 - 1)).collect();
    let mu = moments_d(w, 2 * n - 2)?;
    let size = n * k;
    let hm: Vec<Vec<Dyadic>> = (0..size)
        .map(|i| (0..size).map(|j| mu[i / k + j / k].at(i % k, j % k).clone()).collect())
        .collect();
    let rhs: Vec<Vec<Dyadic>> = (0..size).map(|i| (0..k).map(|c| b[i / k].at(i % k, c).clone()).collect()).collect();
    let y_sol = solve_integer(&hm, &rhs)?;
    let a_q: Vec<Vec<Vec<BigRational>>> = a.iter().map(dmat_to_rational).collect();
    let double = CMat::from_fn(k, k, |r, c| {
        let mut acc = BigRational::zero();
        for (i, (d, row)) in y_sol.iter().enumerate() {
            let coef = &a_q[i / k][r][i % k];
            if !coef.is_zero() && !row[c].is_zero() {
                acc += coef * BigRational::new(row[c].clone(), d.clone());
            }
        }
        C64::from(acc.to_f64().unwrap_or(f64::NAN))
    });
    Ok((single, double))
}

/// Blocks of H^{-1} for the Gram matrix H_{mn} = M_{m+n}, m, n < N.
pub fn gram_inverse(w: &WeightData, n: usize) -> Result<Vec<Vec<CMat>>> {
    let k = w.k;
    if n == 0 {
        return Ok(Vec::new());
    }
    let mu = moments_d(w, 2 * n - 2)?;
    let size = n * k;
    let hm: Vec<Vec<Dyadic>> = (0..size)
        .map(|i| (0..size).map(|j| mu[i / k + j / k].at(i % k, j % k).clone()).collect())
        .collect();
    let id: Vec<Vec<Dyadic>> = (0..size)
        .map(|i| (0..size).map(|j| if i == j { Dyadic::one() } else { Dyadic::zero() }).collect())
        .collect();
    let x = solve_dyadic(&hm, &id)?;
    Ok((0..n)
        .map(|a| {
            (0..n)
                .map(|b| CMat::from_fn(k, k, |r, c| C64::from(x[a * k + r][b * k + c])))
                .collect()
        })
        .collect())
}

/// Monic (P_N, P̂_N) from exact moments.
pub fn solve_exact(w: &WeightData, n: usize) -> Result<(MatrixPolynomial, MatrixPolynomial)> {
    let (p, ph, _) = solve_exact_all(w, n)?;
    Ok((p, ph))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contour::ContourPair;
    use crate::linalg::rel_diff;
    use crate::mvop;
    use crate::weights::PeriodBlock;

    #[test]
    fn matches_quadrature_moments_and_solver() {
        let w = WeightData::from_period(
            2,
            2,
            PeriodBlock {
                alpha: vec![vec![1.0, 2.0], vec![1.5, 0.5]],
                beta: vec![vec![0.3, 0.2], vec![0.1, 0.4]],
                gamma: vec![vec![1.0, 1.0], vec![1.0, 1.0]],
            },
        )
        .unwrap();
        let pair = ContourPair::for_weight(&w, 256).unwrap();
        let sol = mvop::solve(&w, &pair.gamma, 2).unwrap();
        let ex = exact_moments(&w, 5).unwrap();
        for (j, m) in ex.iter().enumerate() {
            assert!(rel_diff(m, &sol.moments.moments[j]) < 1e-12, "moment {j}");
        }
        let (p, ph) = solve_exact(&w, 2).unwrap();
        assert!(p.rel_distance(&sol.p) < 1e-10);
        assert!(ph.rel_distance(&sol.phat) < 1e-10);
        let (_, _, q) = solve_exact_all(&w, 2).unwrap();
        assert!(q.rel_distance(&sol.q) < 1e-10);
    }
}
