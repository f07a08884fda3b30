//! Cross-checks between the two independent stationary-distribution
//! routes (spanning-graph formula vs. linear solve), and between the
//! estimated chain and direct long-run simulation.

use aspire_core::games::stag_hunt;
use aspire_core::learning::{run, LearnerState, Params, TremblePolicy};
use aspire_core::markov::{
    estimate_phat, fw_invariant, invariant_distribution, pure_states, PhatMatrix,
};
use aspire_core::metrics::OccupancyCounter;
use proptest::prelude::*;

fn arb_stochastic_matrix() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (2usize..=6).prop_flat_map(|n| {
        prop::collection::vec(prop::collection::vec(0.01f64..1.0, n), n).prop_map(|mut rows| {
            for row in &mut rows {
                let sum: f64 = row.iter().sum();
                for v in row.iter_mut() {
                    *v /= sum;
                }
                // Guard against rounding: renormalize the largest
                // entry so the row sums to exactly 1 within 1e-12.
                let err = 1.0 - row.iter().sum::<f64>();
                let max_at = row
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                    .map(|(i, _)| i)
                    .unwrap();
                row[max_at] += err;
            }
            rows
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(120))]

    #[test]
    fn spanning_graph_formula_matches_linear_solve(rows in arb_stochastic_matrix()) {
        // Strictly positive entries make the chain irreducible, so
        // both routes are applicable and must agree.
        let phat = PhatMatrix::from_rows(rows).unwrap();
        let by_graphs = fw_invariant(&phat).unwrap();
        let by_solve = invariant_distribution(&phat).unwrap();
        prop_assert!(by_graphs.is_irreducible());
        let mut worst = 0.0f64;
        for (a, b) in by_graphs.pi.iter().zip(&by_solve.pi) {
            worst = worst.max((a - b).abs());
        }
        prop_assert!(worst <= 1e-10, "routes disagree by {worst}");
        prop_assert!(by_solve.residual <= 1e-10);
    }
}

#[test]
fn long_run_occupancy_matches_the_estimated_chain() {
    // With rare trembles, the fraction of time the learner spends at
    // each joint action approaches the invariant distribution of the
    // embedded chain over pure states.
    let game = stag_hunt();
    let params = Params {
        epsilon: 1e-3,
        lambda: 1e-3,
        zeta: 0.05,
        c_phi: 0.05,
        h: 0.01,
        rho_lo: -1.0,
        rho_hi: 5.0,
    };
    let x0 = LearnerState::pure(&game, &params, 0);
    let mut occ = OccupancyCounter::new();
    run(
        &game,
        &params,
        TremblePolicy::Spontaneous,
        x0,
        1_000_000,
        2024,
        &mut [&mut occ],
    )
    .unwrap();

    let index = pure_states(&game);
    let phat = estimate_phat(&game, &params, &index, 1000, 2025, 10_000_000).unwrap();
    let pi = invariant_distribution(&phat).unwrap();
    let tv = occ.report().tv_distance(&pi.pi);
    assert!(tv <= 0.05, "total-variation distance {tv} exceeds 0.05");
}
