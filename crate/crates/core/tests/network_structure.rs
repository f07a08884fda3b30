//! Equilibrium structure of the network-formation game: the pure Nash
//! profiles are exactly the critically connected networks, and the
//! payoff-dominant profiles sit inside them.

use aspire_core::games::network::{
    is_critically_connected, network_formation, payoff_dominant_networks, NetworkSpec,
};

fn nash_and_critical_agree(spec: &NetworkSpec) {
    let game = network_formation(spec).unwrap();
    let nash: std::collections::BTreeSet<usize> = game
        .pure_nash_set()
        .into_iter()
        .map(|e| e.profile)
        .collect();
    for p in 0..game.num_profiles() {
        let graph = spec.graph_of(game.profile_at(p).actions()).unwrap();
        let critical = is_critically_connected(&graph).critically_connected;
        assert_eq!(
            nash.contains(&p),
            critical,
            "profile {p} ({}): Nash = {}, critically connected = {}",
            game.format_profile(p),
            nash.contains(&p),
            critical,
        );
    }
    // Payoff-dominant networks are equilibria.
    let dominant = payoff_dominant_networks(&game);
    for p in dominant.iter() {
        assert!(nash.contains(&p), "dominant profile {p} is not Nash");
    }
}

#[test]
fn ring_four_nash_profiles_are_the_critically_connected_networks() {
    nash_and_critical_agree(&NetworkSpec::ring(4, 0.25).unwrap());
}

#[test]
fn complete_four_nash_profiles_are_the_critically_connected_networks() {
    nash_and_critical_agree(&NetworkSpec::complete(4, 0.2).unwrap());
}

#[test]
fn line_graph_nash_profiles_are_the_critically_connected_networks() {
    // Path 0–1–2–3: interior nodes have two permitted neighbors.
    let spec = NetworkSpec::new(vec![vec![1], vec![0, 2], vec![1, 3], vec![2]], 0.3).unwrap();
    nash_and_critical_agree(&spec);
}

#[test]
fn six_ring_wheels_are_equilibria() {
    let spec = NetworkSpec::ring(6, 0.125).unwrap();
    let game = network_formation(&spec).unwrap();
    let dominant = payoff_dominant_networks(&game);
    assert_eq!(dominant.len(), 2);
    for p in dominant.iter() {
        let profile = game.profile_at(p);
        for i in 0..6 {
            for alt in 0..game.num_actions(i) {
                if alt == profile.actions()[i] {
                    continue;
                }
                let dev = game.unilateral(p, i, alt);
                assert!(
                    game.utility_of(dev, i) < game.utility_of(p, i),
                    "node {i} deviating to {alt} does not lose"
                );
            }
        }
    }
}
