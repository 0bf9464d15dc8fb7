//! Command-line front end: config ingestion, pipeline runs and JSON export.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::contour::ContourPair;
use crate::elliptic::EllipticData;
use crate::error::Error;
use crate::exact;
use crate::kernel::{kernel_all_routes, KernelQuery, KernelValue};
use crate::linalg::{CMat, C64};
use crate::mvop::{self, MvopSolution, RhSolution};
use crate::poly::{scalar_poly_eval, MatrixPolynomial};
use crate::thetamvop::{ThetaFrame, ThetaPolynomial};
use crate::weights::{ScalarRational, Weight, WeightData};
use crate::wienerhopf::{factors_from_mvop, mvop_from_factors, probe_points, verify_factorization};

const DEFAULT_NODES: usize = 256;

#[derive(Parser, Debug)]
#[command(name = "aztec-mvop", version, about = "MVOPs, Wiener-Hopf factors, kernels and theta formulas for periodic Aztec diamond weights")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Weight configuration (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides N from the config.
    #[arg(long)]
    pub n: Option<usize>,
    /// Node count on the orthogonality circle.
    #[arg(long)]
    pub nodes: Option<usize>,
    /// Replaces every pass/fail tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Seed for probe points and random kernel queries.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Moment solver; `auto` is exact for Aztec weights and float otherwise.
    #[arg(long, value_enum, default_value_t = Solver::Auto)]
    pub solver: Solver,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Solver {
    Auto,
    Float,
    Exact,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThetaTarget {
    Pn,
    Pnhat,
    Lemmas,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Runs the invariant suites of every stage that applies to the config.
    Validate(Common),
    /// Moment-solved P_N, P̂_N and Q_{N-1}.
    Mvop(Common),
    /// Wiener–Hopf factors, their boundary samples and residuals.
    Wh(Common),
    /// Kernel blocks by the three routes.
    Kernel(Common),
    /// Theta-function P_N or P̂_N compared with the moment solution, or the lemma checks.
    Theta {
        #[arg(value_enum, default_value_t = ThetaTarget::Pn)]
        target: ThetaTarget,
        #[command(flatten)]
        common: Common,
    },
}

/// A failed stage with the module, operation and hypothesis involved.
#[derive(Debug)]
pub struct Failure {
    pub module: &'static str,
    pub operation: &'static str,
    pub error: Error,
}

impl Failure {
    fn new(module: &'static str, operation: &'static str, error: Error) -> Self {
        Failure { module, operation, error }
    }

    pub fn exit_code(&self) -> i32 {
        match self.error {
            Error::Config(_) | Error::InvalidQuery(_) => 2,
            _ => 1,
        }
    }

    fn to_json(&self) -> Value {
        json!({
            "module": self.module,
            "operation": self.operation,
            "error": self.error.kind(),
            "message": self.error.to_string(),
            "hypothesis": hypothesis(&self.error),
        })
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}::{} failed: {} [hypothesis: {}]",
            self.module,
            self.operation,
            self.error,
            hypothesis(&self.error)
        )
    }
}

pub fn hypothesis(e: &Error) -> &'static str {
    match e {
        Error::Domain { .. } => "evaluation point inside the operation's domain",
        Error::NonConvergence { .. } => "quadrature converges below the node cap",
        Error::TooCloseToContour { .. } => "evaluation point off the contour",
        Error::DegreeMismatch { .. } => "the sampled function is a polynomial of the stated degree",
        Error::SingularMomentSystem { .. } => "the block moment matrix is invertible, so the MVOP exists",
        Error::ZeroInsideContour { .. } => "det W has no zeros inside the orthogonality circle",
        Error::RouteDisagreement { .. } => "the three kernel routes agree",
        Error::ContourGeometryImpossible { .. } => "a circle separates the poles of W from the zeros of det W",
        Error::GenusZero { .. } => "x3 < x2 < x1 < x0 with x2 != x1 (genus-one spectral curve)",
        Error::NonRealBranchPoint { .. } => "all four branch points are real",
        Error::PeriodNormalizationFailure { .. } => "a-period 1 and purely imaginary tau",
        Error::PathCrossesCut { .. } => "Abel integration paths avoid the cuts",
        Error::DegeneratePosition { .. } => "x2 < x*, x** < x1 with x* != x** and distinct limits of the eigenvalues at infinity",
        Error::TriangularityViolation { .. } => "the normalizing matrix C_N is lower triangular",
        Error::InvalidQuery(_) => "0 < x, x' < 2kN-1 and 0 <= y, y' <= N-1",
        Error::Config(_) => "well-formed configuration",
    }
}

type Staged<T> = std::result::Result<T, Failure>;

trait StageExt<T> {
    fn stage(self, module: &'static str, operation: &'static str) -> Staged<T>;
}

impl<T> StageExt<T> for crate::Result<T> {
    fn stage(self, module: &'static str, operation: &'static str) -> Staged<T> {
        self.map_err(|e| Failure::new(module, operation, e))
    }
}

#[derive(Debug, Clone, Deserialize)]
struct ScalarSpec {
    #[serde(default = "one")]
    scale: f64,
    #[serde(default)]
    zeros: Vec<f64>,
    poles: Vec<f64>,
}

fn one() -> f64 {
    1.0
}

pub enum Model {
    Scalar { weight: ScalarRational, n: usize },
    Aztec(WeightData),
}

impl Model {
    pub fn weight(&self) -> &dyn Weight {
        match self {
            Model::Scalar { weight, .. } => weight,
            Model::Aztec(w) => w,
        }
    }

    pub fn n(&self) -> usize {
        match self {
            Model::Scalar { n, .. } => *n,
            Model::Aztec(w) => w.n,
        }
    }

    fn aztec(&self, operation: &'static str) -> Staged<&WeightData> {
        match self {
            Model::Aztec(w) => Ok(w),
            Model::Scalar { .. } => Err(Failure::new(
                "cli",
                operation,
                Error::Config("this command needs Aztec weights (alpha, beta, gamma)".into()),
            )),
        }
    }
}

pub struct RunConfig {
    pub model: Model,
    pub queries: Vec<KernelQuery>,
    pub nodes: usize,
    pub tol: Option<f64>,
    pub seed: u64,
    pub solver: Solver,
}

impl RunConfig {
    pub fn from_text(text: &str, common: &Common) -> Staged<Self> {
        let cfg = |e: String| Failure::new("cli", "load_config", Error::Config(e));
        let v: Value = serde_json::from_str(text).map_err(|e| cfg(e.to_string()))?;
        let model = if let Some(s) = v.get("scalar") {
            let spec: ScalarSpec = serde_json::from_value(s.clone()).map_err(|e| cfg(e.to_string()))?;
            let n = match common.n {
                Some(n) => n,
                None => v.get("N").and_then(Value::as_u64).ok_or_else(|| cfg("missing \"N\"".into()))? as usize,
            };
            Model::Scalar {
                weight: ScalarRational {
                    scale: spec.scale,
                    zeros: spec.zeros,
                    poles: spec.poles,
                },
                n,
            }
        } else {
            let w = WeightData::from_json(text).stage("weights", "load_weights")?;
            Model::Aztec(match common.n {
                Some(n) => w.with_n(n).stage("weights", "load_weights")?,
                None => w,
            })
        };
        let queries = match v.get("queries") {
            Some(q) => serde_json::from_value(q.clone()).map_err(|e| cfg(e.to_string()))?,
            None => Vec::new(),
        };
        Ok(RunConfig {
            model,
            queries,
            nodes: common.nodes.unwrap_or(DEFAULT_NODES),
            tol: common.tol,
            seed: common.seed,
            solver: common.solver,
        })
    }

    fn tol(&self, default: f64) -> f64 {
        self.tol.unwrap_or(default)
    }

    fn pair(&self) -> Staged<ContourPair> {
        ContourPair::for_weight(self.model.weight(), self.nodes).stage("contour", "choose_contours")
    }

    fn solve(&self, pair: &ContourPair) -> Staged<MvopSolution> {
        match (&self.model, self.solver) {
            (Model::Aztec(w), Solver::Auto | Solver::Exact) => {
                mvop::solve_exact(w, &pair.gamma, w.n).stage("mvop", "solve_exact")
            }
            (Model::Scalar { .. }, Solver::Exact) => Err(Failure::new(
                "mvop",
                "solve_exact",
                Error::Config("the exact solver needs Aztec weights".into()),
            )),
            _ => mvop::solve(self.model.weight(), &pair.gamma, self.model.n()).stage("mvop", "solve_left"),
        }
    }

    /// Config queries, or `count` seeded random admissible ones.
    fn queries_or_random(&self, w: &WeightData, count: usize) -> Vec<KernelQuery> {
        if !self.queries.is_empty() {
            return self.queries.clone();
        }
        random_queries(w, count, self.seed)
    }
}

pub fn random_queries(w: &WeightData, count: usize, seed: u64) -> Vec<KernelQuery> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let top = w.factor_count();
    if w.n == 0 || top < 3 {
        return Vec::new();
    }
    (0..count)
        .map(|_| {
            KernelQuery::new(
                rng.gen_range(1..top - 1),
                rng.gen_range(1..top - 1),
                rng.gen_range(0..w.n),
                rng.gen_range(0..w.n),
            )
        })
        .collect()
}

// ---- JSON helpers ----

pub fn c_json(z: C64) -> Value {
    json!([z.re, z.im])
}

pub fn mat_json(m: &CMat) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|r| Value::Array((0..m.ncols()).map(|c| c_json(m[(r, c)])).collect()))
            .collect(),
    )
}

pub fn poly_json(p: &MatrixPolynomial) -> Value {
    Value::Array(p.coeffs.iter().map(mat_json).collect())
}

fn write_value(v: &Value, depth: usize, out: &mut String) {
    let pad = |d: usize| "  ".repeat(d);
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64().filter(|_| !n.is_f64()) {
                let _ = write!(out, "{i}");
            } else if let Some(u) = n.as_u64().filter(|_| !n.is_f64()) {
                let _ = write!(out, "{u}");
            } else {
                let x = n.as_f64().unwrap_or(f64::NAN);
                if x.is_finite() {
                    let _ = write!(out, "{x:.16e}");
                } else {
                    out.push_str("null");
                }
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(a) => {
            // Arrays of scalars stay on one line.
            if a.iter().all(|x| !x.is_array() && !x.is_object()) || a.iter().all(|x| matches!(x, Value::Array(inner) if inner.iter().all(|y| !y.is_array() && !y.is_object()))) {
                out.push('[');
                for (i, x) in a.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    write_value(x, depth, out);
                }
                out.push(']');
            } else {
                out.push_str("[\n");
                for (i, x) in a.iter().enumerate() {
                    out.push_str(&pad(depth + 1));
                    write_value(x, depth + 1, out);
                    if i + 1 < a.len() {
                        out.push(',');
                    }
                    out.push('\n');
                }
                out.push_str(&pad(depth));
                out.push(']');
            }
        }
        Value::Object(o) => {
            if o.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push_str("{\n");
            for (i, (k, x)) in o.iter().enumerate() {
                out.push_str(&pad(depth + 1));
                out.push_str(&Value::String(k.clone()).to_string());
                out.push_str(": ");
                write_value(x, depth + 1, out);
                if i + 1 < o.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            out.push_str(&pad(depth));
            out.push('}');
        }
    }
}

/// Pretty JSON with every float at 17 significant digits.
pub fn to_json_string(v: &Value) -> String {
    let mut s = String::new();
    write_value(v, 0, &mut s);
    s.push('\n');
    s
}

// ---- validation suite ----

#[derive(Default)]
pub struct Suite {
    checks: Vec<Value>,
    failures: Vec<Value>,
    ok: bool,
}

impl Suite {
    fn new() -> Self {
        Suite {
            ok: true,
            ..Default::default()
        }
    }

    fn check(&mut self, name: &str, value: f64, tol: f64) {
        let pass = value.is_finite() && value <= tol;
        self.ok &= pass;
        self.checks.push(json!({"name": name, "value": value, "tol": tol, "pass": pass}));
    }

    fn info(&mut self, name: &str, value: Value) {
        self.checks.push(json!({"name": name, "value": value}));
    }

    fn fail(&mut self, f: Failure) {
        self.ok = false;
        self.failures.push(f.to_json());
    }

    fn run<T>(&mut self, r: Staged<T>) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(f) => {
                self.fail(f);
                None
            }
        }
    }
}

/// Largest coefficient gap relative to the largest coefficient of either list.
pub fn max_coeff_gap(a: &[C64], b: &[C64]) -> f64 {
    let scale = a.iter().chain(b).fold(0.0f64, |s, v| s.max(v.norm())).max(f64::MIN_POSITIVE);
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max) / scale
}

/// `count` seeded points with 1.2 r′ < |z| < 3 r′, outside both contours.
pub fn exterior_points(pair: &ContourPair, count: usize, seed: u64) -> Vec<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = pair.gamma_prime.radius;
    (0..count)
        .map(|_| C64::from_polar(rng.gen_range(1.2..3.0) * r, rng.gen_range(0.0..std::f64::consts::TAU)))
        .collect()
}

fn validate_common(cfg: &RunConfig, s: &mut Suite) -> Option<(ContourPair, MvopSolution)> {
    let w = cfg.model.weight();
    let pair = s.run(cfg.pair())?;
    let sol = s.run(cfg.solve(&pair))?;
    let tol = |d| cfg.tol(d);
    s.info("moment_condition", json!(sol.condition));
    s.check("orthogonality_left", sol.residuals.left, tol(1e-9));
    s.check("orthogonality_right", sol.residuals.right, tol(1e-9));
    s.check("q_normalization", sol.residuals.q, tol(1e-9));
    s.check("strong_orthogonality_left", sol.residuals.strong_left, tol(1e-9));
    s.check("strong_orthogonality_right", sol.residuals.strong_right, tol(1e-9));
    let n = sol.n;
    if n == 0 {
        return Some((pair, sol));
    }
    if let Some(f) = s.run(factors_from_mvop(&sol, w, &pair.gamma).stage("wienerhopf", "factors_from_mvop")) {
        if let Some(rep) = s.run(verify_factorization(&f, w).stage("wienerhopf", "verify_factorization")) {
            s.check("wh_residual_phi", rep.residuals[0], tol(1e-10));
            s.check("wh_residual_phihat", rep.residuals[1], tol(1e-10));
            s.info("wh_normalization_defect", json!(rep.normalization_defect));
            s.check("wh_normalization_decay_order", (rep.normalization_decay.log10() - 1.0).abs(), tol(0.1));
            s.check("wh_winding", if rep.winding_check.ok { 0.0 } else { 1.0 }, 0.0);
            s.check("wh_det_agreement", rep.det_agreement, tol(1e-9));
        }
        if let Some((p, ph)) = s.run(mvop_from_factors(&f).stage("wienerhopf", "mvop_from_factors")) {
            s.check("round_trip_p", p.rel_distance(&sol.p), tol(1e-9));
            s.check("round_trip_phat", ph.rel_distance(&sol.phat), tol(1e-9));
        }
    }
    if let Some(rh) = s.run(RhSolution::new(&sol, w, None).stage("mvop", "assemble_Y")) {
        let pts = exterior_points(&pair, 16, cfg.seed);
        if let Some(v) = s.run(rh.remarkable_identity(&pts).stage("mvop", "remarkable_identity")) {
            s.check("remarkable_identity", v, tol(1e-8));
        }
        let mut worst: f64 = 0.0;
        for &z0 in pts.iter().take(5) {
            let defect = match (&cfg.model, &sol.gram_inverse) {
                (Model::Aztec(wd), Some(_)) => rh.reproducing_defect_exact(wd, z0),
                _ => rh.reproducing_defect(w, z0),
            };
            if let Some(v) = s.run(defect.stage("mvop", "reproducing_kernel")) {
                worst = worst.max(v);
            }
        }
        s.check("reproducing_property", worst, tol(1e-8));
    }
    Some((pair, sol))
}

fn validate_scalar(weight: &ScalarRational, sol: &MvopSolution, cfg: &RunConfig, s: &mut Suite) {
    if weight.zeros.is_empty() && weight.poles.len() == 1 && weight.scale == 1.0 {
        let beta = weight.poles[0];
        let n = sol.n;
        let mut expect = vec![C64::new(0.0, 0.0); n + 1];
        expect[n] = C64::new(1.0, 0.0);
        if n >= 1 {
            expect[n - 1] = C64::from(-beta);
        }
        let got: Vec<C64> = sol.p.coeffs.iter().map(|m| m[(0, 0)]).collect();
        let gap = got.iter().zip(&expect).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        s.check("scalar_closed_form", gap, cfg.tol(1e-12));
    }
}

fn validate_aztec(w: &WeightData, pair: &ContourPair, sol: &MvopSolution, cfg: &RunConfig, s: &mut Suite) {
    let n = sol.n;
    let degree = w.k * n;
    if n > 0 {
        let radius = 2.0 * pair.gamma_prime.radius;
        let dp = s.run(mvop::det_poly(&sol.p, radius, degree).stage("mvop", "det_zeros"));
        let dph = s.run(mvop::det_poly(&sol.phat, radius, degree).stage("mvop", "det_zeros"));
        if let (Some((dp, _)), Some((dph, _))) = (dp, dph) {
            let mut worst: f64 = 0.0;
            for b in w.poles() {
                let z = C64::from(b);
                let scale: f64 = dp.iter().enumerate().map(|(j, c)| c.norm() * b.abs().powi(j as i32)).sum();
                worst = worst.max(scalar_poly_eval(&dp, z).norm() / scale);
            }
            s.check("det_p_at_poles", worst, cfg.tol(1e-8));
            s.check("det_p_equals_det_phat", max_coeff_gap(&dp, &dph), cfg.tol(1e-10));
        }
        if let Some(f) = s.run(factors_from_mvop(sol, w, &pair.gamma).stage("wienerhopf", "factors_from_mvop")) {
            if let Some(rh) = s.run(RhSolution::new(sol, w, None).stage("mvop", "assemble_Y")) {
                let mut worst: f64 = 0.0;
                for q in random_queries(w, 2, cfg.seed) {
                    if let Some(t) = s.run(kernel_all_routes(&q, &rh, &f, w, pair).stage("kernel", "kernel_all_routes")) {
                        worst = worst.max(t.cross_check);
                    }
                }
                s.check("kernel_route_agreement", worst, cfg.tol(1e-7));
            }
        }
    }
    if w.k != 2 || w.period().is_none_or(|p| p.alpha[0].len() > 2) {
        return;
    }
    let Some(frame) = s.run(ThetaFrame::from_weights(w).stage("elliptic", "build_curve_data")) else {
        return;
    };
    validate_elliptic(&frame.data, cfg, s);
    if n > 0 {
        if let Some(ex) = s.run(exact::solve_exact(w, n).stage("mvop", "solve_exact")) {
            if let Some(t) = s.run(frame.theorem_pn(n, None).stage("thetamvop", "theorem_PN")) {
                s.check("theta_pn_vs_moments", t.poly.rel_distance(&ex.0), cfg.tol(1e-6));
                s.check("theta_cn_off_triangle", t.off_triangle, cfg.tol(1e-8));
            }
            if let Some(t) = s.run(frame.theorem_pnhat(n, None).stage("thetamvop", "theorem_PNhat")) {
                s.check("theta_pnhat_vs_moments", t.poly.rel_distance(&ex.1), cfg.tol(1e-6));
                s.check("theta_cnhat_off_triangle", t.off_triangle, cfg.tol(1e-8));
            }
        }
    }
}

fn validate_elliptic(e: &EllipticData, cfg: &RunConfig, s: &mut Suite) {
    s.check("a_cycle", (e.a_cycle - 1.0).norm(), cfg.tol(1e-9));
    s.check("tau_real_part", e.tau.re.abs(), cfg.tol(1e-8));
    s.check("omega0_two_formulas", e.omega0_gap(), cfg.tol(1e-8));
    s.info("elliptic", serde_json::to_value(e.diagnostics(Some(cfg.model.n()))).unwrap_or(Value::Null));
}

pub fn cmd_validate(cfg: &RunConfig) -> (Value, i32) {
    let mut s = Suite::new();
    if let Some((pair, sol)) = validate_common(cfg, &mut s) {
        match &cfg.model {
            Model::Scalar { weight, .. } => validate_scalar(weight, &sol, cfg, &mut s),
            Model::Aztec(w) => validate_aztec(w, &pair, &sol, cfg, &mut s),
        }
    }
    let code = if s.ok { 0 } else if s.failures.iter().any(|f| f["error"] == "ConfigError") { 2 } else { 1 };
    let out = json!({
        "command": "validate",
        "N": cfg.model.n(),
        "pass": s.ok,
        "checks": s.checks,
        "failures": s.failures,
    });
    (out, code)
}

pub fn cmd_mvop(cfg: &RunConfig) -> Staged<Value> {
    let pair = cfg.pair()?;
    let sol = cfg.solve(&pair)?;
    Ok(json!({
        "command": "mvop",
        "k": sol.dim(),
        "N": sol.n,
        "contour": {"radius": pair.gamma.radius, "nodes_used": sol.moments.nodes_used, "moment_defect": sol.moments.defect},
        "condition": sol.condition,
        "residuals": serde_json::to_value(sol.residuals).unwrap_or(Value::Null),
        "P": poly_json(&sol.p),
        "Phat": poly_json(&sol.phat),
        "Q": poly_json(&sol.q),
    }))
}

pub fn cmd_wh(cfg: &RunConfig) -> Staged<Value> {
    let w = cfg.model.weight();
    let pair = cfg.pair()?;
    let sol = cfg.solve(&pair)?;
    let f = factors_from_mvop(&sol, w, &pair.gamma).stage("wienerhopf", "factors_from_mvop")?;
    let rep = verify_factorization(&f, w).stage("wienerhopf", "verify_factorization")?;
    let nodes = pair.gamma.nodes();
    let sample = |g: &dyn Fn(C64) -> crate::Result<CMat>| -> Staged<Vec<Value>> {
        nodes.iter().map(|&z| g(z).map(|m| mat_json(&m)).stage("wienerhopf", "boundary_values")).collect()
    };
    let probes: Vec<Value> = probe_points(&pair.gamma, cfg.seed).into_iter().map(c_json).collect();
    Ok(json!({
        "command": "wh",
        "k": f.k(),
        "N": f.n,
        "radius": pair.gamma.radius,
        "report": serde_json::to_value(&rep).unwrap_or(Value::Null),
        "probes": probes,
        "nodes": nodes.iter().map(|&z| c_json(z)).collect::<Vec<_>>(),
        "phi_plus": sample(&|z| f.phi_plus(z))?,
        "phi_minus": sample(&|z| f.phi_minus(z))?,
        "phihat_plus": sample(&|z| f.phihat_plus(z))?,
        "phihat_minus": sample(&|z| f.phihat_minus(z))?,
        "PW": poly_json(&f.pw),
        "WPhat": poly_json(&f.wphat),
    }))
}

fn kernel_value_json(q: &KernelQuery, v: &KernelValue) -> Value {
    json!({
        "single": if q.x > q.xp { mat_json(&v.single) } else { Value::Null },
        "double": mat_json(&v.double),
        "total": mat_json(&v.total),
    })
}

pub fn cmd_kernel(cfg: &RunConfig) -> Staged<(Value, bool)> {
    let w = cfg.model.aztec("cmd_kernel")?;
    let pair = cfg.pair()?;
    let sol = cfg.solve(&pair)?;
    let f = factors_from_mvop(&sol, w, &pair.gamma).stage("wienerhopf", "factors_from_mvop")?;
    let rh = RhSolution::new(&sol, w, None).stage("mvop", "assemble_Y")?;
    let tol = cfg.tol(1e-7);
    let mut all_ok = true;
    let mut blocks = Vec::new();
    let queries = cfg.queries_or_random(w, 10);
    if queries.is_empty() {
        return Err(Failure::new("kernel", "validate_query", Error::InvalidQuery("no admissible queries for this N".into())));
    }
    for q in queries {
        q.validate(w).stage("kernel", "validate_query")?;
        let t = kernel_all_routes(&q, &rh, &f, w, &pair).stage("kernel", "kernel_all_routes")?;
        all_ok &= t.cross_check <= tol;
        blocks.push(json!({
            "query": serde_json::to_value(q).unwrap_or(Value::Null),
            "rn": kernel_value_json(&q, &t.rn),
            "wh": kernel_value_json(&q, &t.wh),
            "pn": kernel_value_json(&q, &t.pn),
            "cross_check": t.cross_check,
        }));
    }
    Ok((
        json!({"command": "kernel", "k": w.k, "N": w.n, "tol": tol, "pass": all_ok, "blocks": blocks}),
        all_ok,
    ))
}

fn theta_json(t: &ThetaPolynomial, reference: &MatrixPolynomial, float_ref: Option<&MatrixPolynomial>) -> Value {
    json!({
        "coeffs": poly_json(&t.poly),
        "C_N": mat_json(&t.normalizer),
        "extraction_radius": t.radius,
        "extraction_defect": t.extraction_defect,
        "off_triangle": t.off_triangle,
        "comparison_residual_vs_moment_solver": t.poly.rel_distance(reference),
        "comparison_residual_vs_float_moment_solver": float_ref.map(|p| json!(t.poly.rel_distance(p))).unwrap_or(Value::Null),
    })
}

pub fn cmd_theta(cfg: &RunConfig, target: ThetaTarget) -> Staged<(Value, bool)> {
    let w = cfg.model.aztec("cmd_theta")?;
    let frame = ThetaFrame::from_weights(w).stage("elliptic", "build_curve_data")?;
    let n = w.n;
    let diag = serde_json::to_value(frame.data.diagnostics(Some(n))).unwrap_or(Value::Null);
    if target == ThetaTarget::Lemmas {
        let omega = 0.3;
        let rep = frame.lemma_report(omega).stage("thetamvop", "lemma_suite")?;
        return Ok((
            json!({
                "command": "theta",
                "target": "lemmas",
                "omega": omega,
                "elliptic": diag,
                "lemmas": serde_json::to_value(&rep).unwrap_or(Value::Null),
                "branch_point_growth": frame.branch_point_growth(n.max(1)).stage("thetamvop", "removability")?,
                "u_seam": frame.u_seam(n.max(1)).stage("thetamvop", "jump_cancellation")?,
                "e_omega_growth": frame.e_omega_growth(omega).stage("thetamvop", "e_omega_boundedness")?,
            }),
            true,
        ));
    }
    let (ep, eph) = exact::solve_exact(w, n).stage("mvop", "solve_exact")?;
    let float = cfg.pair().and_then(|pair| cfg.solve(&pair)).ok();
    let tol = cfg.tol(1e-6);
    let (name, t, reference, float_ref) = match target {
        ThetaTarget::Pn => ("pn", frame.theorem_pn(n, None).stage("thetamvop", "theorem_PN")?, ep, float.as_ref().map(|s| &s.p)),
        _ => (
            "pnhat",
            frame.theorem_pnhat(n, None).stage("thetamvop", "theorem_PNhat")?,
            eph,
            float.as_ref().map(|s| &s.phat),
        ),
    };
    let body = theta_json(&t, &reference, float_ref);
    let ok = body["comparison_residual_vs_moment_solver"].as_f64().is_some_and(|v| v <= tol);
    Ok((
        json!({"command": "theta", "target": name, "N": n, "tol": tol, "pass": ok, "elliptic": diag, name: body}),
        ok,
    ))
}

fn emit(out: &Option<PathBuf>, v: &Value) -> i32 {
    let text = to_json_string(v);
    match out {
        Some(p) => match std::fs::write(p, text) {
            Ok(()) => 0,
            Err(e) => {
                eprintln!("cannot write {}: {e}", p.display());
                2
            }
        },
        None => {
            print!("{text}");
            0
        }
    }
}

fn load(common: &Common) -> Staged<RunConfig> {
    let text = std::fs::read_to_string(&common.config).map_err(|e| {
        Failure::new("cli", "load_config", Error::Config(format!("{}: {e}", common.config.display())))
    })?;
    RunConfig::from_text(&text, common)
}

fn failure_exit(out: &Option<PathBuf>, command: &str, f: Failure) -> i32 {
    eprintln!("error: {f}");
    let code = f.exit_code();
    let written = emit(out, &json!({"command": command, "pass": false, "failure": f.to_json()}));
    if written != 0 {
        written
    } else {
        code
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let (name, common, target) = match &cli.command {
        Command::Validate(c) => ("validate", c, None),
        Command::Mvop(c) => ("mvop", c, None),
        Command::Wh(c) => ("wh", c, None),
        Command::Kernel(c) => ("kernel", c, None),
        Command::Theta { target, common } => ("theta", common, Some(*target)),
    };
    let cfg = match load(common) {
        Ok(c) => c,
        Err(f) => return failure_exit(&common.out, name, f),
    };
    let result: Staged<(Value, i32)> = match name {
        "validate" => Ok(cmd_validate(&cfg)),
        "mvop" => cmd_mvop(&cfg).map(|v| (v, 0)),
        "wh" => cmd_wh(&cfg).map(|v| (v, 0)),
        "kernel" => cmd_kernel(&cfg).map(|(v, ok)| (v, if ok { 0 } else { 1 })),
        _ => cmd_theta(&cfg, target.unwrap_or(ThetaTarget::Pn)).map(|(v, ok)| (v, if ok { 0 } else { 1 })),
    };
    match result {
        Ok((v, code)) => {
            let written = emit(&common.out, &v);
            if written != 0 {
                written
            } else {
                code
            }
        }
        Err(f) => failure_exit(&common.out, name, f),
    }
}
