//! Constructors for the three built-in game families: the stag hunt, the
//! common-pool resource game, and the network formation game.

pub mod network;

pub use network::{
    inverse_total_distance, is_critically_connected, network_formation,
    network_formation_with_budget, payoff_dominant_networks, Criticality, CriticalityViolation,
    Digraph, NetworkSpec, DEFAULT_NETWORK_BUDGET,
};

use crate::error::{CoreError, Result};
use crate::game::{DesirableSet, Game};

/// The classic 2×2 stag hunt: both players hunting together beats the
/// safe solitary option, but going alone against a lone hunter is safer.
pub fn stag_hunt() -> Game {
    Game::from_table(
        "stag hunt",
        vec![2, 2],
        vec![
            4.0, 4.0, // (A,A)
            0.0, 2.0, // (A,B)
            2.0, 0.0, // (B,A)
            3.0, 3.0, // (B,B)
        ],
        Some(vec![
            vec!["A".into(), "B".into()],
            vec!["A".into(), "B".into()],
        ]),
    )
    .expect("stag hunt table is well-formed")
}

/// Parameters of a common-pool resource game.
///
/// Each of `n` agents claims one of `m` levels `p_0 < … < p_{m−1}`. An
/// agent whose level strictly exceeds everyone else's wins the resource
/// and pays a level-dependent cost; the others receive a consolation
/// bonus. When no agent strictly wins, everyone just pays their cost:
///
/// - winner at level `p_j`: `1 − c_j`
/// - non-winner at `p_j`, someone else won: `−c_j + τ_j`
/// - at `p_j`, nobody won: `−c_j`
///
/// The structural requirements (validated by [`CommonPoolSpec::new`])
/// are strictly increasing non-negative levels, strictly increasing
/// costs in `[0, 1)`, and positive bonuses. The last bonus `τ_{m−1}`
/// never enters a payoff (the top level cannot lose); it participates
/// only in the payoff ordering chain below.
///
/// The chain `−c_0 < −c_{m−1}+τ_{m−1} < … < −c_0+τ_0 < 1−c_{m−1}`
/// interleaves every loser payoff strictly between the no-winner payoffs
/// and the winner payoffs. It is checked by
/// [`CommonPoolSpec::ordering_chain_violation`] and reported as a
/// warning rather than enforced: parameterizations violating only this
/// chain can still be strict coordination games worth analyzing.
#[derive(Clone, Debug)]
pub struct CommonPoolSpec {
    n: usize,
    levels: Vec<f64>,
    costs: Vec<f64>,
    bonuses: Vec<f64>,
}

impl CommonPoolSpec {
    pub fn new(n: usize, levels: Vec<f64>, costs: Vec<f64>, bonuses: Vec<f64>) -> Result<Self> {
        if n < 2 {
            return Err(CoreError::InvalidInput(format!(
                "common-pool game needs at least 2 agents, got {n}"
            )));
        }
        let m = levels.len();
        if m == 0 {
            return Err(CoreError::InvalidInput("no claim levels given".into()));
        }
        if costs.len() != m || bonuses.len() != m {
            return Err(CoreError::InvalidInput(format!(
                "levels, costs, and bonuses must have equal length (got {m}, {}, {})",
                costs.len(),
                bonuses.len()
            )));
        }
        for (name, v) in [("level", &levels), ("cost", &costs), ("bonus", &bonuses)] {
            if let Some(k) = v.iter().position(|x| !x.is_finite()) {
                return Err(CoreError::InvalidInput(format!("{name} {k} is not finite")));
            }
        }
        if levels[0] < 0.0 {
            return Err(CoreError::InvalidInput(format!(
                "levels must be non-negative: p_0 = {}",
                levels[0]
            )));
        }
        if let Some(j) = levels.windows(2).position(|w| w[0] >= w[1]) {
            return Err(CoreError::InvalidInput(format!(
                "levels must be strictly increasing: p_{j} = {} >= p_{} = {}",
                levels[j],
                j + 1,
                levels[j + 1]
            )));
        }
        if costs[0] < 0.0 || costs[m - 1] >= 1.0 {
            return Err(CoreError::InvalidInput(format!(
                "costs must lie in [0, 1): c_0 = {}, c_{} = {}",
                costs[0],
                m - 1,
                costs[m - 1]
            )));
        }
        if let Some(j) = costs.windows(2).position(|w| w[0] >= w[1]) {
            return Err(CoreError::InvalidInput(format!(
                "costs must be strictly increasing: c_{j} = {} >= c_{} = {}",
                costs[j],
                j + 1,
                costs[j + 1]
            )));
        }
        if let Some(j) = bonuses.iter().position(|&t| t <= 0.0) {
            return Err(CoreError::InvalidInput(format!(
                "bonuses must be positive: tau_{j} = {}",
                bonuses[j]
            )));
        }
        Ok(CommonPoolSpec {
            n,
            levels,
            costs,
            bonuses,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of claim levels `m`.
    pub fn m(&self) -> usize {
        self.levels.len()
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn costs(&self) -> &[f64] {
        &self.costs
    }

    pub fn bonuses(&self) -> &[f64] {
        &self.bonuses
    }

    /// A single-level game: every profile ties, nobody ever wins, and
    /// the successful set is empty.
    pub fn is_degenerate(&self) -> bool {
        self.m() == 1
    }

    /// Check the payoff ordering chain
    /// `−c_0 < −c_{m−1}+τ_{m−1} < … < −c_0+τ_0 < 1−c_{m−1}`,
    /// returning the first violated link rendered as text, or `None`
    /// when the chain holds.
    pub fn ordering_chain_violation(&self) -> Option<String> {
        let m = self.m();
        // The chain's terms in order, with printable names.
        let mut terms: Vec<(String, f64)> = Vec::with_capacity(m + 2);
        terms.push(("-c_0".into(), -self.costs[0]));
        for j in (0..m).rev() {
            terms.push((
                format!("-c_{j} + tau_{j}"),
                -self.costs[j] + self.bonuses[j],
            ));
        }
        terms.push((format!("1 - c_{}", m - 1), 1.0 - self.costs[m - 1]));
        for w in terms.windows(2) {
            let (ref a_name, a) = w[0];
            let (ref b_name, b) = w[1];
            if a >= b {
                return Some(format!(
                    "ordering chain violated: {a_name} < {b_name} fails ({a} >= {b})"
                ));
            }
        }
        None
    }
}

/// Build the common-pool game for a validated spec. Action `j` of every
/// agent is the claim level `p_j`; profiles are labeled `p0..p{m−1}`.
pub fn common_pool(spec: &CommonPoolSpec) -> Game {
    let n = spec.n;
    let m = spec.m();
    let num_profiles = m.pow(n as u32);
    let mut payoffs = Vec::with_capacity(num_profiles * n);
    let mut actions = vec![0usize; n];
    for _ in 0..num_profiles {
        let winner = strict_winner(&actions);
        for (i, &j) in actions.iter().enumerate() {
            let u = match winner {
                Some(w) if w == i => 1.0 - spec.costs[j],
                Some(_) => -spec.costs[j] + spec.bonuses[j],
                None => -spec.costs[j],
            };
            payoffs.push(u);
        }
        // Advance the mixed-radix counter, last agent fastest.
        for d in (0..n).rev() {
            actions[d] += 1;
            if actions[d] < m {
                break;
            }
            actions[d] = 0;
        }
    }
    let labels = (0..n)
        .map(|_| (0..m).map(|j| format!("p{j}")).collect())
        .collect();
    Game::from_table(
        format!("common-pool n={n} m={m}"),
        vec![m; n],
        payoffs,
        Some(labels),
    )
    .expect("common-pool table is well-formed")
}

/// The agent whose action index strictly exceeds every other agent's,
/// if one exists.
pub fn strict_winner(actions: &[usize]) -> Option<usize> {
    let (mut arg, mut max, mut ties) = (0usize, actions[0], 1usize);
    for (i, &a) in actions.iter().enumerate().skip(1) {
        if a > max {
            (arg, max, ties) = (i, a, 1);
        } else if a == max {
            ties += 1;
        }
    }
    (ties == 1).then_some(arg)
}

/// The successful profiles of a game whose actions are ordered claim
/// levels: those where exactly one agent's action index strictly
/// exceeds all others'. Empty exactly when every player has one action.
pub fn successful_set(game: &Game) -> DesirableSet {
    let mut actions = vec![0usize; game.num_players()];
    let members = (0..game.num_profiles()).filter(|&s| {
        game.decode_into(s, &mut actions);
        strict_winner(&actions).is_some()
    });
    DesirableSet::from_indices(game, members).expect("indices in range by construction")
}

/// Per-agent success classes: entry `i` lists the profiles where agent
/// `i` strictly out-claims everyone else. The classes are disjoint and
/// their union is the successful set.
pub fn success_classes(game: &Game) -> Vec<Vec<usize>> {
    let n = game.num_players();
    let mut classes = vec![Vec::new(); n];
    let mut actions = vec![0usize; n];
    for s in 0..game.num_profiles() {
        game.decode_into(s, &mut actions);
        if let Some(w) = strict_winner(&actions) {
            classes[w].push(s);
        }
    }
    classes
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::verify::{is_coordination_game, is_symmetric_game};

    fn spec_2x3() -> CommonPoolSpec {
        // Chain: -0.1 < 0.12 < 0.25 < 0.4 < 0.7 — holds.
        CommonPoolSpec::new(
            2,
            vec![0.0, 1.0, 2.0],
            vec![0.1, 0.2, 0.3],
            vec![0.5, 0.45, 0.42],
        )
        .unwrap()
    }

    fn reference_2x4() -> CommonPoolSpec {
        CommonPoolSpec::new(
            2,
            vec![0.0, 1.0, 2.0, 3.0],
            vec![0.0, 0.1, 0.2, 0.3],
            vec![0.8; 4],
        )
        .unwrap()
    }

    #[test]
    fn stag_hunt_is_symmetric() {
        assert!(is_symmetric_game(&stag_hunt()).symmetric);
    }

    #[test]
    fn two_by_three_matches_closed_form_table() {
        let spec = spec_2x3();
        let g = common_pool(&spec);
        let (c, t) = (spec.costs(), spec.bonuses());
        // Full 3x3 table: row player's level index first.
        let expect = |r: usize, col: usize| -> (f64, f64) {
            use std::cmp::Ordering::*;
            match r.cmp(&col) {
                Greater => (1.0 - c[r], -c[col] + t[col]),
                Less => (-c[r] + t[r], 1.0 - c[col]),
                Equal => (-c[r], -c[col]),
            }
        };
        for r in 0..3 {
            for col in 0..3 {
                let u = g.utilities(g.index_of(&[r, col]).unwrap());
                let (er, ec) = expect(r, col);
                assert_eq!(u, &[er, ec], "profile (p{r},p{col})");
            }
        }
    }

    #[test]
    fn reference_game_winner_and_loser_payoffs() {
        let g = common_pool(&reference_2x4());
        // Winner at the top level earns 1 − 0.3; the loser at level 1
        // earns −0.1 + 0.8. Both come out to 0.7.
        let u = g.utilities(g.index_of(&[3, 1]).unwrap());
        assert_eq!(u, &[1.0 - 0.3, -0.1 + 0.8]);
        // Tie at the top: both just pay the cost.
        let u = g.utilities(g.index_of(&[3, 3]).unwrap());
        assert_eq!(u, &[-0.3, -0.3]);
    }

    #[test]
    fn reference_game_violates_ordering_chain() {
        // -c_0 + tau_0 = 0.8 is not below 1 - c_3 = 0.7: the final link
        // of the ordering chain fails while everything else holds.
        let v = reference_2x4().ordering_chain_violation();
        let msg = v.expect("chain violation expected");
        assert!(msg.contains("1 - c_3"), "got: {msg}");
        assert!(spec_2x3().ordering_chain_violation().is_none());
    }

    #[test]
    fn successful_set_is_off_diagonal_for_two_players() {
        let g = common_pool(&spec_2x3());
        let abar = successful_set(&g);
        assert_eq!(abar.len(), 6);
        for r in 0..3 {
            for c in 0..3 {
                let s = g.index_of(&[r, c]).unwrap();
                assert_eq!(abar.contains(s), r != c, "profile (p{r},p{c})");
            }
        }
    }

    #[test]
    fn degenerate_single_level_pool() {
        let spec = CommonPoolSpec::new(2, vec![1.0], vec![0.2], vec![0.5]).unwrap();
        assert!(spec.is_degenerate());
        let g = common_pool(&spec);
        assert!(successful_set(&g).is_empty());
        assert_eq!(g.utilities(0), &[-0.2, -0.2]);
    }

    #[test]
    fn three_player_strict_max_is_successful() {
        let spec = CommonPoolSpec::new(3, vec![0.0, 1.0], vec![0.1, 0.2], vec![0.4, 0.35]).unwrap();
        let g = common_pool(&spec);
        let abar = successful_set(&g);
        assert!(abar.contains(g.index_of(&[1, 0, 0]).unwrap()));
        assert!(!abar.contains(g.index_of(&[1, 1, 0]).unwrap()));
        assert!(!abar.contains(g.index_of(&[0, 0, 0]).unwrap()));
    }

    #[test]
    fn success_classes_partition_the_successful_set() {
        let g = common_pool(&reference_2x4());
        let classes = success_classes(&g);
        let abar = successful_set(&g);
        let total: usize = classes.iter().map(Vec::len).sum();
        assert_eq!(total, abar.len());
        // Two players, four levels: each player strictly wins in 6
        // profiles (winner's level above the other's).
        assert_eq!(classes[0].len(), 6);
        assert_eq!(classes[1].len(), 6);
        for (i, class) in classes.iter().enumerate() {
            for &s in class {
                assert!(abar.contains(s));
                let p = g.profile_at(s);
                let a = p.actions();
                assert!((0..2).all(|j| j == i || a[i] > a[j]));
            }
        }
    }

    #[test]
    fn common_pool_is_strict_coordination_and_symmetric() {
        for spec in [spec_2x3(), reference_2x4()] {
            let g = common_pool(&spec);
            let abar = successful_set(&g);
            let report = is_coordination_game(&g, &abar).unwrap();
            assert!(report.is_strict(), "spec {spec:?}");
            assert!(is_symmetric_game(&g).symmetric);
        }
    }

    #[test]
    fn invalid_specs_are_named() {
        // Non-increasing costs.
        let err =
            CommonPoolSpec::new(2, vec![0.0, 1.0], vec![0.3, 0.2], vec![0.5, 0.4]).unwrap_err();
        assert!(err.to_string().contains("strictly increasing"), "{err}");
        // Cost at 1.
        assert!(CommonPoolSpec::new(2, vec![0.0, 1.0], vec![0.0, 1.0], vec![0.5, 0.4]).is_err());
        // Non-positive bonus.
        assert!(CommonPoolSpec::new(2, vec![0.0, 1.0], vec![0.0, 0.1], vec![0.5, 0.0]).is_err());
        // Level ordering.
        assert!(CommonPoolSpec::new(2, vec![1.0, 1.0], vec![0.0, 0.1], vec![0.5, 0.4]).is_err());
        // One agent.
        assert!(CommonPoolSpec::new(1, vec![0.0], vec![0.1], vec![0.5]).is_err());
    }
}
