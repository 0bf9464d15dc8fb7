//! Transfer-matrix factors of the k-periodic Aztec diamond and the weight matrix W.
//!
//! Public column and row indices are 1-based; storage is 0-based, so entry
//! (j, i) of a weight array lives at `alpha[j - 1][i - 1]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{identity, zeros, CMat, C64};

/// Relative distance below which a point counts as sitting on a pole.
pub const POLE_GUARD: f64 = 1e-13;

fn guard_pole(op: &'static str, z: C64, pole: f64) -> Result<()> {
    if (z - pole).norm() < POLE_GUARD * (1.0 + pole.abs()) {
        Err(Error::domain(op, format!("z = {z} is a pole at {pole}")))
    } else {
        Ok(())
    }
}

/// A matrix weight on which moments and factorizations can be computed.
pub trait Weight: Sync {
    fn dim(&self) -> usize;
    fn eval(&self, z: C64) -> Result<CMat>;
    /// Points that must lie inside the orthogonality contour.
    fn enclosed_points(&self) -> Vec<C64>;
    /// Zeros of det W, which must stay outside the contour.
    fn excluded_points(&self) -> Vec<C64>;
    /// Growth order of W at infinity, so P_N W has degree N plus this.
    fn degree_at_infinity(&self) -> usize {
        0
    }
}

/// φ^b(z; α, γ): diagonal γ_j, subdiagonal α_j, corner α_k / z.
pub fn phi_b(alpha: &[f64], gamma: &[f64], z: C64) -> Result<CMat> {
    guard_pole("eval_phi_b", z, 0.0)?;
    let k = alpha.len();
    let mut m = zeros(k, k);
    for j in 0..k {
        m[(j, j)] += C64::from(gamma[j]);
    }
    for j in 0..k.saturating_sub(1) {
        m[(j + 1, j)] = C64::from(alpha[j]);
    }
    m[(0, k - 1)] += alpha[k - 1] / z;
    Ok(m)
}

/// φ^g(z; β) including the prefactor (1 − β^v / z)^{-1}.
pub fn phi_g(beta: &[f64], z: C64) -> Result<CMat> {
    let bv: f64 = beta.iter().product();
    guard_pole("eval_phi_g", z, 0.0)?;
    guard_pole("eval_phi_g", z, bv)?;
    let k = beta.len();
    let pre = 1.0 / (1.0 - bv / z);
    let mut m = zeros(k, k);
    for r in 0..k {
        for col in 0..k {
            let v = if r >= col {
                C64::from(beta[col..r].iter().product::<f64>())
            } else {
                let p: f64 = beta[col..].iter().product::<f64>() * beta[..r].iter().product::<f64>();
                p / z
            };
            m[(r, col)] = pre * v;
        }
    }
    Ok(m)
}

/// One step of the switching rule: φ^b(α, γ) φ^g(β) = φ^g(β') φ^b(α', γ).
pub fn switching_rule(alpha: &[f64], beta: &[f64], gamma: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let k = alpha.len();
    let prev = |j: usize| (j + k - 1) % k;
    let next = |j: usize| (j + 1) % k;
    let mut a2 = vec![0.0; k];
    let mut b2 = vec![0.0; k];
    for j in 0..k {
        let jm = prev(j);
        let ratio = (alpha[j] + gamma[next(j)] * beta[j]) / (alpha[jm] + gamma[j] * beta[jm]);
        a2[j] = alpha[jm] * ratio;
        b2[j] = beta[jm] * ratio;
    }
    (a2, b2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FactorKind {
    B,
    G,
}

/// Kind and 1-based column of the factor φ_m.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FactorDescriptor {
    pub kind: FactorKind,
    pub column: usize,
}

impl FactorDescriptor {
    pub fn of(m: usize) -> Self {
        assert!(m >= 1, "factor indices start at 1");
        if m % 2 == 1 {
            FactorDescriptor {
                kind: FactorKind::B,
                column: m.div_ceil(2),
            }
        } else {
            FactorDescriptor {
                kind: FactorKind::G,
                column: m / 2,
            }
        }
    }
}

/// k × ℓ arrays that are tiled horizontally to width kN.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodBlock {
    pub alpha: Vec<Vec<f64>>,
    pub beta: Vec<Vec<f64>>,
    pub gamma: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeightConfig {
    pub k: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(default)]
    pub alpha: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub beta: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub gamma: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub period: Option<PeriodBlock>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightData {
    pub k: usize,
    pub n: usize,
    /// k rows × kN columns.
    pub alpha: Vec<Vec<f64>>,
    pub beta: Vec<Vec<f64>>,
    pub gamma: Vec<Vec<f64>>,
    period: Option<PeriodBlock>,
}

fn check_shape(name: &str, a: &[Vec<f64>], rows: usize, cols: Option<usize>) -> Result<usize> {
    if a.len() != rows {
        return Err(Error::Config(format!("{name} must have {rows} rows, found {}", a.len())));
    }
    let width = cols.unwrap_or_else(|| a.first().map_or(0, |r| r.len()));
    if width == 0 {
        return Err(Error::Config(format!("{name} has no columns")));
    }
    for row in a {
        if row.len() != width {
            return Err(Error::Config(format!("{name} rows must all have {width} entries")));
        }
        if let Some(v) = row.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::Config(format!("{name} entries must be finite and positive, found {v}")));
        }
    }
    Ok(width)
}

impl WeightData {
    pub fn new(k: usize, n: usize, alpha: Vec<Vec<f64>>, beta: Vec<Vec<f64>>, gamma: Vec<Vec<f64>>) -> Result<Self> {
        if k == 0 {
            return Err(Error::Config("k must be positive".into()));
        }
        let w = k * n;
        check_shape("alpha", &alpha, k, Some(w))?;
        check_shape("beta", &beta, k, Some(w))?;
        check_shape("gamma", &gamma, k, Some(w))?;
        Ok(WeightData {
            k,
            n,
            alpha,
            beta,
            gamma,
            period: None,
        })
    }

    pub fn from_period(k: usize, n: usize, period: PeriodBlock) -> Result<Self> {
        if k == 0 {
            return Err(Error::Config("k must be positive".into()));
        }
        let l = check_shape("period.alpha", &period.alpha, k, None)?;
        check_shape("period.beta", &period.beta, k, Some(l))?;
        check_shape("period.gamma", &period.gamma, k, Some(l))?;
        let tile = |a: &[Vec<f64>]| -> Vec<Vec<f64>> {
            a.iter().map(|row| (0..k * n).map(|i| row[i % l]).collect()).collect()
        };
        Ok(WeightData {
            k,
            n,
            alpha: tile(&period.alpha),
            beta: tile(&period.beta),
            gamma: tile(&period.gamma),
            period: Some(period),
        })
    }

    /// kN columns with entries uniform in `range`. A column is redrawn until
    /// β^v ≤ `split.0` and |α^v/γ^v| ≥ `split.1`, so one circle separates all
    /// poles of W from all zeros of det W.
    pub fn random(k: usize, n: usize, range: (f64, f64), split: (f64, f64), seed: u64) -> Result<Self> {
        use rand::{Rng, SeedableRng};
        if !(range.0 > 0.0 && range.0 < range.1 && split.0 < split.1) {
            return Err(Error::Config("need 0 < lo < hi and split.0 < split.1".into()));
        }
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let (mut alpha, mut beta, mut gamma) = (vec![Vec::new(); k], vec![Vec::new(); k], vec![Vec::new(); k]);
        for _ in 0..k * n {
            let mut tries = 0usize;
            loop {
                tries += 1;
                if tries > 100_000 {
                    return Err(Error::Config("no admissible column in range".into()));
                }
                let mut draw = || -> Vec<f64> { (0..k).map(|_| rng.gen_range(range.0..range.1)).collect() };
                let (a, b, g) = (draw(), draw(), draw());
                let bv: f64 = b.iter().product();
                let zv = a.iter().product::<f64>() / g.iter().product::<f64>();
                if bv <= split.0 && zv >= split.1 {
                    for j in 0..k {
                        alpha[j].push(a[j]);
                        beta[j].push(b[j]);
                        gamma[j].push(g[j]);
                    }
                    break;
                }
            }
        }
        WeightData::new(k, n, alpha, beta, gamma)
    }

    pub fn from_config(cfg: &WeightConfig) -> Result<Self> {
        match (&cfg.period, &cfg.alpha, &cfg.beta, &cfg.gamma) {
            (Some(p), None, None, None) => WeightData::from_period(cfg.k, cfg.n, p.clone()),
            (None, Some(a), Some(b), Some(g)) => WeightData::new(cfg.k, cfg.n, a.clone(), b.clone(), g.clone()),
            _ => Err(Error::Config(
                "give either \"period\" or all of \"alpha\", \"beta\", \"gamma\"".into(),
            )),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: WeightConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        WeightData::from_config(&cfg)
    }

    /// Same weights with a different N; only possible for period-tiled data.
    pub fn with_n(&self, n: usize) -> Result<Self> {
        if n == self.n {
            return Ok(self.clone());
        }
        match &self.period {
            Some(p) => WeightData::from_period(self.k, n, p.clone()),
            None => Err(Error::Config(
                "N can only be changed for weights given by a \"period\" block".into(),
            )),
        }
    }

    pub fn period(&self) -> Option<&PeriodBlock> {
        self.period.as_ref()
    }

    pub fn columns(&self) -> usize {
        self.k * self.n
    }

    pub fn factor_count(&self) -> usize {
        2 * self.columns()
    }

    fn column(a: &[Vec<f64>], i: usize) -> Vec<f64> {
        a.iter().map(|row| row[i - 1]).collect()
    }

    pub fn alpha_col(&self, i: usize) -> Vec<f64> {
        Self::column(&self.alpha, i)
    }

    pub fn beta_col(&self, i: usize) -> Vec<f64> {
        Self::column(&self.beta, i)
    }

    pub fn gamma_col(&self, i: usize) -> Vec<f64> {
        Self::column(&self.gamma, i)
    }

    pub fn alpha_v(&self, i: usize) -> f64 {
        self.alpha_col(i).iter().product()
    }

    pub fn beta_v(&self, i: usize) -> f64 {
        self.beta_col(i).iter().product()
    }

    pub fn gamma_v(&self, i: usize) -> f64 {
        self.gamma_col(i).iter().product()
    }

    pub fn eval_phi_b(&self, i: usize, z: C64) -> Result<CMat> {
        phi_b(&self.alpha_col(i), &self.gamma_col(i), z)
    }

    pub fn eval_phi_g(&self, i: usize, z: C64) -> Result<CMat> {
        phi_g(&self.beta_col(i), z)
    }

    /// φ_m for m = 1..2kN.
    pub fn eval_factor(&self, m: usize, z: C64) -> Result<CMat> {
        let d = FactorDescriptor::of(m);
        match d.kind {
            FactorKind::B => self.eval_phi_b(d.column, z),
            FactorKind::G => self.eval_phi_g(d.column, z),
        }
    }

    /// φ_{from+1}(z) ⋯ φ_{to}(z); the empty range gives the identity.
    pub fn eval_partial_product(&self, from: usize, to: usize, z: C64) -> Result<CMat> {
        if from > to || to > self.factor_count() {
            return Err(Error::domain(
                "eval_partial_product",
                format!("range ({from}, {to}] outside 0..={}", self.factor_count()),
            ));
        }
        let mut acc = identity(self.k);
        for m in from + 1..=to {
            acc *= self.eval_factor(m, z)?;
        }
        Ok(acc)
    }

    /// (φ_{from+1}(z) ⋯ φ_{to}(z))^{-1} as the product of the factor inverses,
    /// which avoids inverting the (typically ill-conditioned) full product.
    pub fn eval_partial_product_inverse(&self, from: usize, to: usize, z: C64) -> Result<CMat> {
        if from > to || to > self.factor_count() {
            return Err(Error::domain(
                "eval_partial_product",
                format!("range ({from}, {to}] outside 0..={}", self.factor_count()),
            ));
        }
        let mut acc = identity(self.k);
        for m in (from + 1..=to).rev() {
            acc *= crate::linalg::inverse(&self.eval_factor(m, z)?, "eval_partial_product")?;
        }
        Ok(acc)
    }

    pub fn eval_w(&self, z: C64) -> Result<CMat> {
        self.eval_partial_product(0, self.factor_count(), z)
    }

    /// Closed form Π (γ_i^v z − (−1)^k α_i^v) / (z − β_i^v).
    pub fn det_w_closed_form(&self, z: C64) -> C64 {
        let sign = if self.k % 2 == 0 { 1.0 } else { -1.0 };
        (1..=self.columns())
            .map(|i| (self.gamma_v(i) * z - sign * self.alpha_v(i)) / (z - self.beta_v(i)))
            .product()
    }

    pub fn poles(&self) -> Vec<f64> {
        (1..=self.columns()).map(|i| self.beta_v(i)).collect()
    }

    /// Zeros (−1)^k α_i^v / γ_i^v of det W.
    pub fn det_zeros(&self) -> Vec<f64> {
        let sign = if self.k % 2 == 0 { 1.0 } else { -1.0 };
        (1..=self.columns())
            .map(|i| sign * self.alpha_v(i) / self.gamma_v(i))
            .collect()
    }

    /// The k × ℓ block if the columns repeat with period ℓ.
    pub fn periodic_block(&self, l: usize) -> Option<PeriodBlock> {
        let w = self.columns();
        if l == 0 || w % l != 0 {
            return None;
        }
        let repeats = |a: &[Vec<f64>]| a.iter().all(|row| (0..w).all(|i| row[i] == row[i % l]));
        if !(repeats(&self.alpha) && repeats(&self.beta) && repeats(&self.gamma)) {
            return None;
        }
        let cut = |a: &[Vec<f64>]| a.iter().map(|row| row[..l].to_vec()).collect();
        Some(PeriodBlock {
            alpha: cut(&self.alpha),
            beta: cut(&self.beta),
            gamma: cut(&self.gamma),
        })
    }

    pub fn to_config(&self) -> WeightConfig {
        match &self.period {
            Some(p) => WeightConfig {
                k: self.k,
                n: self.n,
                alpha: None,
                beta: None,
                gamma: None,
                period: Some(p.clone()),
            },
            None => WeightConfig {
                k: self.k,
                n: self.n,
                alpha: Some(self.alpha.clone()),
                beta: Some(self.beta.clone()),
                gamma: Some(self.gamma.clone()),
                period: None,
            },
        }
    }
}

impl Weight for WeightData {
    fn dim(&self) -> usize {
        self.k
    }

    fn eval(&self, z: C64) -> Result<CMat> {
        self.eval_w(z)
    }

    fn enclosed_points(&self) -> Vec<C64> {
        let mut v = vec![C64::new(0.0, 0.0)];
        v.extend(self.poles().into_iter().map(C64::from));
        v
    }

    fn excluded_points(&self) -> Vec<C64> {
        self.det_zeros().into_iter().map(C64::from).collect()
    }
}

/// Scalar rational weight c · Π (z − a_i) / Π (z − b_j).
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarRational {
    pub scale: f64,
    pub zeros: Vec<f64>,
    pub poles: Vec<f64>,
}

impl Weight for ScalarRational {
    fn dim(&self) -> usize {
        1
    }

    fn eval(&self, z: C64) -> Result<CMat> {
        for &p in &self.poles {
            guard_pole("eval_scalar_weight", z, p)?;
        }
        let num: C64 = self.zeros.iter().map(|&a| z - a).product();
        let den: C64 = self.poles.iter().map(|&b| z - b).product();
        Ok(CMat::from_element(1, 1, num / den * self.scale))
    }

    fn enclosed_points(&self) -> Vec<C64> {
        self.poles.iter().map(|&b| C64::from(b)).collect()
    }

    fn excluded_points(&self) -> Vec<C64> {
        self.zeros.iter().map(|&a| C64::from(a)).collect()
    }

    fn degree_at_infinity(&self) -> usize {
        self.zeros.len().saturating_sub(self.poles.len())
    }
}

/// W ≡ I_k.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IdentityWeight {
    pub k: usize,
}

impl Weight for IdentityWeight {
    fn dim(&self) -> usize {
        self.k
    }

    fn eval(&self, _z: C64) -> Result<CMat> {
        Ok(identity(self.k))
    }

    fn enclosed_points(&self) -> Vec<C64> {
        Vec::new()
    }

    fn excluded_points(&self) -> Vec<C64> {
        Vec::new()
    }
}
