mod common;

use aztec_mvop::cli::random_queries;
use aztec_mvop::contour::ContourPair;
use aztec_mvop::error::Error;
use aztec_mvop::kernel::{kernel_all_routes, kernel_via_rn_exact, single_term, KernelQuery};
use aztec_mvop::linalg::norm;
use aztec_mvop::mvop::{self, RhSolution};
use aztec_mvop::weights::WeightData;
use aztec_mvop::wienerhopf::factors_from_mvop;

use common::*;

fn routes(w: &WeightData, queries: &[KernelQuery]) -> Vec<aztec_mvop::kernel::TripleKernel> {
    let pair = ContourPair::for_weight(w, 512).unwrap();
    let sol = mvop::solve_exact(w, &pair.gamma, w.n).unwrap();
    let f = factors_from_mvop(&sol, w, &pair.gamma).unwrap();
    let rh = RhSolution::new(&sol, w, Some(512)).unwrap();
    queries.iter().map(|q| kernel_all_routes(q, &rh, &f, w, &pair).unwrap()).collect()
}

#[test]
fn scalar_weights_agree_across_routes() {
    let w = WeightData::new(1, 3, vec![vec![1.0, 1.3, 0.8]], vec![vec![0.2, 0.35, 0.1]], vec![vec![1.0, 0.9, 1.1]]).unwrap();
    for t in routes(&w, &random_queries(&w, 8, 3)) {
        assert!(t.cross_check < 1e-9, "{}", t.cross_check);
    }
}

#[test]
fn kernel_of_real_weights_is_real() {
    let w = genus_one(2);
    for t in routes(&w, &random_queries(&w, 6, 4)) {
        let s = norm(&t.rn.total);
        assert!(t.rn.total.iter().all(|z| z.im.abs() <= 1e-14 * s));
        assert!(t.pn.total.iter().all(|z| z.im.abs() <= 1e-9 * s));
    }
}

#[test]
fn single_term_needs_x_above_x_prime() {
    let w = mild(2);
    let pair = ContourPair::for_weight(&w, 256).unwrap();
    for (x, xp) in [(2, 2), (1, 5), (4, 6)] {
        assert_eq!(norm(&single_term(&KernelQuery::new(x, xp, 0, 1), &w, &pair.gamma_prime).unwrap()), 0.0);
        assert_eq!(norm(&kernel_via_rn_exact(&KernelQuery::new(x, xp, 0, 1), &w).unwrap().single), 0.0);
    }
    let mut nonzero = 0;
    for (y, yp) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
        let q = KernelQuery::new(5, 2, y, yp);
        let quad = single_term(&q, &w, &pair.gamma_prime).unwrap();
        let exact = kernel_via_rn_exact(&q, &w).unwrap().single;
        if norm(&exact) > 0.0 {
            nonzero += 1;
        }
        assert!(norm(&(&quad - &exact)) < 1e-12 * norm(&exact).max(1.0));
    }
    assert!(nonzero > 0);
}

#[test]
fn inadmissible_queries_are_rejected() {
    let w = mild(2);
    let top = w.factor_count();
    for q in [KernelQuery::new(0, 1, 0, 0), KernelQuery::new(1, top - 1, 0, 0), KernelQuery::new(1, 1, 2, 0)] {
        assert!(matches!(kernel_via_rn_exact(&q, &w), Err(Error::InvalidQuery(_))));
    }
}
