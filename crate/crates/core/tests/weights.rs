mod common;

use aztec_mvop::linalg::{c, identity, norm, C64};
use aztec_mvop::weights::{phi_b, phi_g, switching_rule, Weight, WeightData};
use proptest::prelude::*;

fn point() -> impl Strategy<Value = C64> {
    (0.6f64..3.0, 0.05f64..6.2).prop_map(|(r, t)| C64::from_polar(r, t))
}

fn column(k: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.5f64..2.0, k)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn det_matches_closed_form(seed in 0u64..10_000, n in 1usize..4, z in point()) {
        let w = WeightData::random(2, n, (0.5, 2.0), (0.5, 2.0), seed).unwrap();
        prop_assume!(w.poles().iter().all(|&b| (z - b).norm() > 1e-3));
        let m = w.eval_w(z).unwrap();
        let d = aztec_mvop::linalg::det(&m);
        let e = w.det_w_closed_form(z);
        prop_assert!((d - e).norm() <= 1e-12 * norm(&m).powi(2), "{d} vs {e}");
    }

    #[test]
    fn switching_rule_commutes_factors(alpha in column(3), beta in column(3), gamma in column(3), z in point()) {
        let bv: f64 = beta.iter().product();
        prop_assume!((z - bv).norm() > 1e-2);
        let (a2, b2) = switching_rule(&alpha, &beta, &gamma);
        let b2v: f64 = b2.iter().product();
        prop_assume!((z - b2v).norm() > 1e-2);
        let lhs = phi_b(&alpha, &gamma, z).unwrap() * phi_g(&beta, z).unwrap();
        let rhs = phi_g(&b2, z).unwrap() * phi_b(&a2, &gamma, z).unwrap();
        prop_assert!(norm(&(&lhs - &rhs)) <= 1e-10 * norm(&lhs));
    }

    #[test]
    fn partial_product_inverse(seed in 0u64..10_000, z in point(), from in 0usize..4, len in 0usize..5) {
        let w = WeightData::random(2, 2, (0.5, 2.0), (0.5, 2.0), seed).unwrap();
        let to = (from + len).min(w.factor_count());
        let p = w.eval_partial_product(from, to, z).unwrap();
        let q = w.eval_partial_product_inverse(from, to, z).unwrap();
        prop_assert!(norm(&(p * q - identity(2))) < 1e-9);
    }

    #[test]
    fn random_family_respects_split(seed in 0u64..10_000, n in 1usize..6) {
        let w = WeightData::random(2, n, (0.5, 2.0), (0.5, 2.0), seed).unwrap();
        prop_assert!(w.poles().iter().all(|&b| b <= 0.5));
        prop_assert!(w.det_zeros().iter().all(|&a| a.abs() >= 2.0));
    }
}

#[test]
fn periodic_tiling_repeats_block() {
    let w = common::genus_one(3);
    let block = w.period().unwrap().clone();
    for i in 1..=w.columns() {
        let l = block.alpha[0].len();
        assert_eq!(w.alpha_col(i), block.alpha.iter().map(|r| r[(i - 1) % l]).collect::<Vec<_>>());
    }
    assert_eq!(w.factor_count(), 2 * w.k * w.n);
}

#[test]
fn weight_has_unit_limit_shape_at_infinity() {
    let w = common::mild(2);
    let big = w.eval_w(c(1e8, 0.0)).unwrap();
    let lim = w.eval_w(c(1e9, 0.0)).unwrap();
    assert!(norm(&(&big - &lim)) < 1e-6 * norm(&lim));
    assert_eq!(w.excluded_points().len(), w.columns());
}

#[test]
fn bad_configs_are_rejected() {
    assert!(WeightData::from_json("{\"N\": 2}").is_err());
    assert!(WeightData::from_json("not json").is_err());
    let neg = r#"{"k": 2, "N": 1, "period": {"alpha": [[1, -1], [1, 1]], "beta": [[0.5, 0.5], [0.5, 0.5]], "gamma": [[1, 1], [1, 1]]}}"#;
    assert!(WeightData::from_json(neg).is_err());
}
