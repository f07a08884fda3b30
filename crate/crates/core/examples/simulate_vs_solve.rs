//! Minimal end-to-end use of the library: simulate the learning rule
//! on the stag hunt, then independently solve the tremble-induced
//! chain over pure states and compare the two estimates.

use aspire_core::games::stag_hunt;
use aspire_core::learning::{run, LearnerState};
use aspire_core::markov::{estimate_phat, invariant_distribution, pure_states};
use aspire_core::metrics::OccupancyCounter;
use aspire_core::{Observer, Params, TremblePolicy};

fn main() {
    let game = stag_hunt();
    let (lo, hi) = game.payoff_bounds();
    let params = Params {
        epsilon: 1e-3,
        lambda: 1e-3,
        zeta: 0.05,
        c_phi: 0.05,
        h: 0.01,
        rho_lo: lo - 1.0,
        rho_hi: hi + 1.0,
    };

    // Simulate…
    let mut occupancy = OccupancyCounter::new();
    let x0 = LearnerState::pure(&game, &params, 0);
    let mut observers: Vec<&mut dyn Observer> = vec![&mut occupancy];
    run(
        &game,
        &params,
        TremblePolicy::Spontaneous,
        x0,
        1_000_000,
        7,
        &mut observers,
    )
    .unwrap();

    // …and independently solve the tremble-induced chain.
    let index = pure_states(&game);
    let phat = estimate_phat(&game, &params, &index, 1000, 7, 10_000_000).unwrap();
    let pi = invariant_distribution(&phat).unwrap();
    println!(
        "payoff-dominant profile: simulated {:.4} vs solved {:.4}",
        occupancy.report().fraction_of(0),
        pi.pi[0]
    );
}
