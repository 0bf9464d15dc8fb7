#![allow(dead_code)]

use aztec_mvop::weights::{PeriodBlock, WeightData};

pub const GENUS_ONE: &str = include_str!("../../examples/genus_one.json");
pub const SCALAR: &str = include_str!("../../examples/scalar.json");
pub const DEGENERATE: &str = include_str!("../../examples/degenerate.json");
pub const DEGENERATE_XSTAR: &str = include_str!("../../examples/degenerate_xstar.json");

pub fn genus_one(n: usize) -> WeightData {
    WeightData::from_json(GENUS_ONE).unwrap().with_n(n).unwrap()
}

pub fn genus_one_period() -> PeriodBlock {
    WeightData::from_json(GENUS_ONE).unwrap().period().unwrap().clone()
}

/// The seeded non-periodic family: entries in [0.5, 2], β^v ≤ 0.5, α^v/γ^v ≥ 2.
pub fn random_weights(n: usize) -> WeightData {
    WeightData::random(2, n, (0.5, 2.0), (0.5, 2.0), 1000 + n as u64).unwrap()
}

/// A small periodic example with well separated poles and zeros.
pub fn mild(n: usize) -> WeightData {
    WeightData::from_period(
        2,
        n,
        PeriodBlock {
            alpha: vec![vec![1.0, 2.0], vec![1.5, 0.5]],
            beta: vec![vec![0.3, 0.2], vec![0.1, 0.4]],
            gamma: vec![vec![1.0, 1.0], vec![1.0, 1.0]],
        },
    )
    .unwrap()
}
