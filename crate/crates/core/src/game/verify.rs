//! Structural verification of coordination properties.
//!
//! A game together with a non-empty desirable profile set is checked
//! against three conditions:
//!
//! 1. **Dominance** — desirable profiles weakly payoff-dominate every
//!    other profile, for every player ("strict" when every comparison is
//!    strict).
//! 2. **Aligned better replies** — from any profile that is neither a
//!    pure Nash equilibrium nor desirable, some player has a strictly
//!    improving action switch that leaves every other player at least as
//!    well off.
//! 3. **Equilibrium escapes** — from any pure Nash equilibrium outside
//!    the desirable set there is a sequence of distinct agents switching
//!    one at a time such that, after each switch, the agents who have
//!    moved *and* the next agent to move are all strictly worse off than
//!    at the equilibrium (all `n` agents at the final step).
//!
//! Games passing all three are exactly the games whose long-run
//! aspiration-learning behavior concentrates on the desirable set; the
//! same module derives the payoff constants controlling that limit, the
//! layered better-reply decomposition of the profile space, and the
//! symmetry/equivalence predicates used by the fairness analysis.

use std::collections::{BTreeSet, HashSet};

use crate::error::{CoreError, Result};
use crate::game::{DesirableSet, Game, JointAction, PureNash};

/// Tolerance for payoff-equality comparisons in the symmetry and state
/// equivalence checks. Constructed games carry exact payoffs; this
/// guards against rounding introduced by text ingestion.
pub const DEFAULT_EQ_TOL: f64 = 1e-12;

/// Default node budget for the equilibrium-escape search (number of
/// candidate (agent, action) expansions before the search gives up).
pub const DEFAULT_ESCAPE_BUDGET: u64 = 10_000_000;

/// Outcome of one structural check.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Fail,
    /// The check's search budget was exhausted before a definite answer.
    Inconclusive,
}

impl CheckStatus {
    pub fn passed(self) -> bool {
        self == CheckStatus::Pass
    }

    /// Combine two statuses pessimistically (any fail dominates, then
    /// any inconclusive).
    fn worst(self, other: CheckStatus) -> CheckStatus {
        use CheckStatus::*;
        match (self, other) {
            (Fail, _) | (_, Fail) => Fail,
            (Inconclusive, _) | (_, Inconclusive) => Inconclusive,
            _ => Pass,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CheckStatus::Pass => "pass",
            CheckStatus::Fail => "fail",
            CheckStatus::Inconclusive => "inconclusive",
        }
    }
}

/// A player strictly preferring a non-desirable profile to a desirable
/// one — a witness against dominance.
#[derive(Clone, Copy, Debug)]
pub struct DominanceViolation {
    /// Profile inside the desirable set.
    pub desirable: usize,
    /// Profile outside the desirable set that beats it.
    pub other: usize,
    pub player: usize,
}

/// Result of the dominance check.
#[derive(Clone, Debug)]
pub struct DominanceCheck {
    pub status: CheckStatus,
    /// Every comparison strict (the "strict coordination" property).
    pub strict: bool,
    pub violation: Option<DominanceViolation>,
}

/// A strictly improving action switch that leaves all other players at
/// least as well off.
#[derive(Clone, Copy, Debug)]
pub struct AlignedReply {
    pub profile: usize,
    pub player: usize,
    pub action: usize,
}

/// Result of the aligned-better-reply check.
#[derive(Clone, Debug)]
pub struct AlignedReplyCheck {
    pub status: CheckStatus,
    /// One witness per profile that needed one.
    pub witnesses: Vec<AlignedReply>,
    /// A profile with no aligned better reply, when the check fails.
    pub violation: Option<usize>,
}

/// A witnessing escape from an equilibrium: agents move one at a time,
/// each prefix leaving every agent involved so far strictly worse off
/// than at the start.
#[derive(Clone, Debug)]
pub struct EscapeChain {
    /// The equilibrium profile being escaped.
    pub start: usize,
    /// `(player, new action)` in move order; `n − 1` moves.
    pub moves: Vec<(usize, usize)>,
    /// Profile index after each move (same length as `moves`).
    pub profiles: Vec<usize>,
}

/// Result of the equilibrium-escape check.
#[derive(Clone, Debug)]
pub struct EscapeCheck {
    pub status: CheckStatus,
    /// One chain per equilibrium outside the desirable set (when found).
    pub chains: Vec<EscapeChain>,
    /// An equilibrium proven to admit no escape chain.
    pub violation: Option<usize>,
    /// An equilibrium whose search was cut off by the node budget.
    pub unresolved: Option<usize>,
    /// Total candidate moves expanded across all searches.
    pub nodes_expanded: u64,
}

/// Full structural report for a (game, desirable set) pair.
#[derive(Clone, Debug)]
pub struct CoordinationReport {
    pub dominance: DominanceCheck,
    pub aligned_replies: AlignedReplyCheck,
    pub escapes: EscapeCheck,
    /// The game's pure Nash equilibria (computed once, reused by all
    /// checks).
    pub nash: Vec<PureNash>,
}

impl CoordinationReport {
    /// Pessimistic combination of the three check statuses.
    pub fn status(&self) -> CheckStatus {
        self.dominance
            .status
            .worst(self.aligned_replies.status)
            .worst(self.escapes.status)
    }

    /// All three checks definitively passed.
    pub fn passes(&self) -> bool {
        self.status().passed()
    }

    /// Passed with every dominance comparison strict.
    pub fn is_strict(&self) -> bool {
        self.passes() && self.dominance.strict
    }
}

fn validate_desirable(game: &Game, desirable: &DesirableSet) -> Result<()> {
    if desirable.is_empty() {
        return Err(CoreError::InvalidInput("desirable set is empty".into()));
    }
    if let Some(s) = desirable.iter().find(|&s| s >= game.num_profiles()) {
        return Err(CoreError::InvalidInput(format!(
            "desirable set contains profile index {s}, game has {} profiles",
            game.num_profiles()
        )));
    }
    Ok(())
}

fn nash_index_set(nash: &[PureNash]) -> BTreeSet<usize> {
    nash.iter().map(|e| e.profile).collect()
}

/// Run all three structural checks with the default escape budget.
pub fn is_coordination_game(game: &Game, desirable: &DesirableSet) -> Result<CoordinationReport> {
    is_coordination_game_with_budget(game, desirable, DEFAULT_ESCAPE_BUDGET)
}

/// Run all three structural checks with an explicit escape-search node
/// budget.
pub fn is_coordination_game_with_budget(
    game: &Game,
    desirable: &DesirableSet,
    escape_budget: u64,
) -> Result<CoordinationReport> {
    validate_desirable(game, desirable)?;
    let nash = game.pure_nash_set();
    let nash_set = nash_index_set(&nash);
    let dominance = check_dominance(game, desirable);
    let aligned_replies = check_aligned_replies(game, desirable, &nash_set);
    let escapes = check_escapes(game, desirable, &nash_set, escape_budget);
    Ok(CoordinationReport {
        dominance,
        aligned_replies,
        escapes,
        nash,
    })
}

fn check_dominance(game: &Game, desirable: &DesirableSet) -> DominanceCheck {
    let n = game.num_players();
    // Per-player extrema: worst desirable payoff and best outside payoff,
    // with witnessing profiles.
    let mut min_in = vec![(f64::INFINITY, 0usize); n];
    let mut max_out: Vec<Option<(f64, usize)>> = vec![None; n];
    for s in 0..game.num_profiles() {
        let u = game.utilities(s);
        if desirable.contains(s) {
            for (i, &ui) in u.iter().enumerate() {
                if ui < min_in[i].0 {
                    min_in[i] = (ui, s);
                }
            }
        } else {
            for (i, &ui) in u.iter().enumerate() {
                if max_out[i].is_none_or(|(m, _)| ui > m) {
                    max_out[i] = Some((ui, s));
                }
            }
        }
    }
    let mut strict = true;
    for i in 0..n {
        let Some((hi, arg_out)) = max_out[i] else {
            // Desirable set covers every profile: vacuous pass.
            continue;
        };
        let (lo, arg_in) = min_in[i];
        if lo < hi {
            return DominanceCheck {
                status: CheckStatus::Fail,
                strict: false,
                violation: Some(DominanceViolation {
                    desirable: arg_in,
                    other: arg_out,
                    player: i,
                }),
            };
        }
        if lo == hi {
            strict = false;
        }
    }
    DominanceCheck {
        status: CheckStatus::Pass,
        strict,
        violation: None,
    }
}

/// Find the aligned better replies at one profile: strictly improving
/// for the mover, weakly improving for everyone else. Returns the first
/// in (player, action) order, or `None`.
fn first_aligned_reply(game: &Game, s: usize) -> Option<AlignedReply> {
    let n = game.num_players();
    let u = game.utilities(s).to_vec();
    for i in 0..n {
        let current = game.action_of(s, i);
        for a in 0..game.num_actions(i) {
            if a == current {
                continue;
            }
            let t = game.unilateral(s, i, a);
            let v = game.utilities(t);
            if v[i] > u[i] && (0..n).all(|j| j == i || v[j] >= u[j]) {
                return Some(AlignedReply {
                    profile: s,
                    player: i,
                    action: a,
                });
            }
        }
    }
    None
}

fn check_aligned_replies(
    game: &Game,
    desirable: &DesirableSet,
    nash: &BTreeSet<usize>,
) -> AlignedReplyCheck {
    let mut witnesses = Vec::new();
    for s in 0..game.num_profiles() {
        if desirable.contains(s) || nash.contains(&s) {
            continue;
        }
        match first_aligned_reply(game, s) {
            Some(w) => witnesses.push(w),
            None => {
                return AlignedReplyCheck {
                    status: CheckStatus::Fail,
                    witnesses,
                    violation: Some(s),
                }
            }
        }
    }
    AlignedReplyCheck {
        status: CheckStatus::Pass,
        witnesses,
        violation: None,
    }
}

enum SearchOutcome {
    Found,
    NotFound,
    Exhausted,
}

/// Depth-first search for one escape chain out of the equilibrium
/// `star`. States are (current profile, set of agents already moved);
/// a state that fails to complete a chain fails for every path reaching
/// it, so failures are memoized on that pair.
struct EscapeSearch<'g> {
    game: &'g Game,
    u_star: Vec<f64>,
    budget: u64,
    expanded: u64,
    failed: HashSet<(usize, u128)>,
    moves: Vec<(usize, usize)>,
    profiles: Vec<usize>,
}

impl<'g> EscapeSearch<'g> {
    fn new(game: &'g Game, star: usize, budget: u64) -> Self {
        EscapeSearch {
            game,
            u_star: game.utilities(star).to_vec(),
            budget,
            expanded: 0,
            failed: HashSet::new(),
            moves: Vec::new(),
            profiles: Vec::new(),
        }
    }

    fn dfs(&mut self, profile: usize, mask: u128) -> SearchOutcome {
        let n = self.game.num_players();
        if self.moves.len() == n - 1 {
            // All but one agent have moved; the chain is valid iff the
            // remaining agent is also strictly worse off here.
            let rest = (0..n)
                .find(|&i| mask & (1 << i) == 0)
                .expect("one agent left");
            if self.game.utility_of(profile, rest) < self.u_star[rest] {
                return SearchOutcome::Found;
            }
            return SearchOutcome::NotFound;
        }
        if self.failed.contains(&(profile, mask)) {
            return SearchOutcome::NotFound;
        }
        for j in 0..n {
            if mask & (1 << j) != 0 {
                continue;
            }
            // An agent moving second or later must already be strictly
            // worse off before its own move.
            if !self.moves.is_empty() && self.game.utility_of(profile, j) >= self.u_star[j] {
                continue;
            }
            for a in 0..self.game.num_actions(j) {
                self.expanded += 1;
                if self.expanded > self.budget {
                    return SearchOutcome::Exhausted;
                }
                let next = self.game.unilateral(profile, j, a);
                let v = self.game.utilities(next);
                let movers_worse = self
                    .moves
                    .iter()
                    .map(|&(i, _)| i)
                    .chain(std::iter::once(j))
                    .all(|i| v[i] < self.u_star[i]);
                if !movers_worse {
                    continue;
                }
                self.moves.push((j, a));
                self.profiles.push(next);
                match self.dfs(next, mask | (1 << j)) {
                    SearchOutcome::Found => return SearchOutcome::Found,
                    SearchOutcome::Exhausted => return SearchOutcome::Exhausted,
                    SearchOutcome::NotFound => {
                        self.moves.pop();
                        self.profiles.pop();
                    }
                }
            }
        }
        self.failed.insert((profile, mask));
        SearchOutcome::NotFound
    }
}

fn check_escapes(
    game: &Game,
    desirable: &DesirableSet,
    nash: &BTreeSet<usize>,
    budget: u64,
) -> EscapeCheck {
    if game.num_players() > 128 {
        // The moved-agent set is tracked as a 128-bit mask; games this
        // wide are far outside the tool's scale.
        return EscapeCheck {
            status: CheckStatus::Inconclusive,
            chains: Vec::new(),
            violation: None,
            unresolved: nash.iter().find(|s| !desirable.contains(**s)).copied(),
            nodes_expanded: 0,
        };
    }
    let mut chains = Vec::new();
    let mut nodes_expanded = 0u64;
    let mut remaining = budget;
    for &star in nash.iter() {
        if desirable.contains(star) {
            continue;
        }
        let mut search = EscapeSearch::new(game, star, remaining);
        let outcome = search.dfs(star, 0);
        nodes_expanded += search.expanded;
        remaining = remaining.saturating_sub(search.expanded);
        match outcome {
            SearchOutcome::Found => chains.push(EscapeChain {
                start: star,
                moves: search.moves,
                profiles: search.profiles,
            }),
            SearchOutcome::NotFound => {
                return EscapeCheck {
                    status: CheckStatus::Fail,
                    chains,
                    violation: Some(star),
                    unresolved: None,
                    nodes_expanded,
                }
            }
            SearchOutcome::Exhausted => {
                return EscapeCheck {
                    status: CheckStatus::Inconclusive,
                    chains,
                    violation: None,
                    unresolved: Some(star),
                    nodes_expanded,
                }
            }
        }
    }
    EscapeCheck {
        status: CheckStatus::Pass,
        chains,
        violation: None,
        unresolved: None,
        nodes_expanded,
    }
}

/// One step of a better-reply path.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PathStep {
    pub player: usize,
    pub action: usize,
    /// Profile index reached after the switch.
    pub to_profile: usize,
}

/// Walk aligned better replies from `start` until reaching a profile
/// that is desirable or a pure Nash equilibrium.
///
/// Each step picks, among the aligned better replies at the current
/// profile, the one maximizing the mover's own payoff gain, breaking
/// ties by lowest `(player, action)`; this makes paths deterministic.
/// The mover strictly gains and nobody loses, so total utility strictly
/// increases and the path has fewer than `|A|` steps. A profile with no
/// aligned better reply (possible only when the aligned-reply condition
/// fails for this game) is reported as a structural error naming the
/// stuck profile. Starting at a desirable or equilibrium profile yields
/// an empty path.
pub fn better_reply_path(
    game: &Game,
    start: &JointAction,
    desirable: &DesirableSet,
) -> Result<Vec<PathStep>> {
    validate_desirable(game, desirable)?;
    let mut s = game.index_of(start.actions())?;
    let nash = nash_index_set(&game.pure_nash_set());
    let n = game.num_players();
    let mut path = Vec::new();
    while !desirable.contains(s) && !nash.contains(&s) {
        let u = game.utilities(s).to_vec();
        let mut best: Option<(f64, usize, usize, usize)> = None; // (gain, player, action, target)
        for i in 0..n {
            let current = game.action_of(s, i);
            for a in 0..game.num_actions(i) {
                if a == current {
                    continue;
                }
                let t = game.unilateral(s, i, a);
                let v = game.utilities(t);
                if v[i] > u[i] && (0..n).all(|j| j == i || v[j] >= u[j]) {
                    let gain = v[i] - u[i];
                    // Strictly-greater keeps the first (lowest (i, a))
                    // among equal gains.
                    if best.is_none_or(|(g, _, _, _)| gain > g) {
                        best = Some((gain, i, a, t));
                    }
                }
            }
        }
        let Some((_, player, action, target)) = best else {
            return Err(CoreError::Structure(format!(
                "no aligned better reply at profile {}",
                game.format_profile(s)
            )));
        };
        path.push(PathStep {
            player,
            action,
            to_profile: target,
        });
        s = target;
        if path.len() >= game.num_profiles() {
            // Unreachable when every step strictly increases total
            // utility; guards against a malformed payoff store.
            return Err(CoreError::Structure(format!(
                "better-reply path exceeded {} steps without terminating",
                game.num_profiles()
            )));
        }
    }
    Ok(path)
}

/// A counterexample to game symmetry.
#[derive(Clone, Debug)]
pub struct SymmetryViolation {
    pub profile: usize,
    pub players: (usize, usize),
    pub reason: String,
}

/// Result of the symmetry check.
#[derive(Clone, Debug)]
pub struct SymmetryReport {
    pub symmetric: bool,
    pub counterexample: Option<SymmetryViolation>,
}

/// Check game symmetry with the default payoff-equality tolerance.
///
/// A game is symmetric when, for every profile and every pair of
/// players: equal actions imply equal payoffs, and swapping the two
/// players' (distinct) actions swaps their payoffs while leaving
/// everyone else's unchanged.
pub fn is_symmetric_game(game: &Game) -> SymmetryReport {
    is_symmetric_game_with_tol(game, DEFAULT_EQ_TOL)
}

/// [`is_symmetric_game`] with an explicit payoff-equality tolerance.
pub fn is_symmetric_game_with_tol(game: &Game, tol: f64) -> SymmetryReport {
    let n = game.num_players();
    let m0 = game.num_actions(0);
    if (1..n).any(|i| game.num_actions(i) != m0) {
        return SymmetryReport {
            symmetric: false,
            counterexample: Some(SymmetryViolation {
                profile: 0,
                players: (0, (1..n).find(|&i| game.num_actions(i) != m0).unwrap()),
                reason: "players have different action-set sizes".into(),
            }),
        };
    }
    let eq = |x: f64, y: f64| (x - y).abs() <= tol;
    let mut actions = vec![0usize; n];
    for s in 0..game.num_profiles() {
        game.decode_into(s, &mut actions);
        for i in 0..n {
            for j in (i + 1)..n {
                let u = game.utilities(s);
                if actions[i] == actions[j] {
                    if !eq(u[i], u[j]) {
                        return SymmetryReport {
                            symmetric: false,
                            counterexample: Some(SymmetryViolation {
                                profile: s,
                                players: (i, j),
                                reason: format!(
                                    "equal actions but unequal payoffs ({} vs {})",
                                    u[i], u[j]
                                ),
                            }),
                        };
                    }
                    continue;
                }
                let swapped = game.unilateral(game.unilateral(s, i, actions[j]), j, actions[i]);
                let (ui, uj) = (u[i], u[j]);
                let u_other: Vec<f64> = u.to_vec();
                let v = game.utilities(swapped);
                let swap_ok = eq(v[i], uj)
                    && eq(v[j], ui)
                    && (0..n).all(|k| k == i || k == j || eq(v[k], u_other[k]));
                if !swap_ok {
                    return SymmetryReport {
                        symmetric: false,
                        counterexample: Some(SymmetryViolation {
                            profile: s,
                            players: (i, j),
                            reason: "transposed profile does not swap payoffs".into(),
                        }),
                    };
                }
            }
        }
    }
    SymmetryReport {
        symmetric: true,
        counterexample: None,
    }
}

/// Whether two distinct profiles are related by a two-player action
/// transposition whose payoffs swap accordingly (default tolerance).
pub fn equivalent_states(game: &Game, a: &JointAction, b: &JointAction) -> Result<bool> {
    equivalent_states_with_tol(game, a, b, DEFAULT_EQ_TOL)
}

/// [`equivalent_states`] with an explicit payoff-equality tolerance.
pub fn equivalent_states_with_tol(
    game: &Game,
    a: &JointAction,
    b: &JointAction,
    tol: f64,
) -> Result<bool> {
    let sa = game.index_of(a.actions())?;
    let sb = game.index_of(b.actions())?;
    if sa == sb {
        return Ok(false);
    }
    let n = game.num_players();
    let eq = |x: f64, y: f64| (x - y).abs() <= tol;
    let ua = game.utilities(sa).to_vec();
    let ub = game.utilities(sb).to_vec();
    let (aa, ab) = (a.actions(), b.actions());
    for i in 0..n {
        for j in (i + 1)..n {
            // b must be exactly a with coordinates i and j swapped.
            let transposed = ab[i] == aa[j]
                && ab[j] == aa[i]
                && (0..n).all(|k| k == i || k == j || ab[k] == aa[k]);
            if !transposed {
                continue;
            }
            let payoffs_swap = eq(ub[i], ua[j])
                && eq(ub[j], ua[i])
                && (0..n).all(|k| k == i || k == j || eq(ub[k], ua[k]));
            if payoffs_swap {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

/// Payoff separation constants and the tremble-size bounds they induce.
#[derive(Clone, Copy, Debug)]
pub struct PayoffConstants {
    /// Smallest payoff drop from a desirable profile to any other, over
    /// all players.
    pub delta_min: f64,
    /// Largest payoff change any player sees between two profiles.
    pub delta_max: f64,
    /// Largest payoff difference between two players at one profile.
    pub delta_star: f64,
    /// Within-profile differences smaller than the desirable-set
    /// separation (`delta_star < delta_min`).
    pub h1_holds: bool,
    /// The desirable set is exactly the set of profiles simultaneously
    /// maximizing every player's payoff.
    pub h2_holds: bool,
    /// Tremble-size bound `(delta_min − delta_star) / 2`, when the first
    /// hypothesis holds.
    pub zeta_bound_h1: Option<f64>,
    /// Tremble-size bound `delta_min² / (4 delta_max)`, when the second
    /// hypothesis holds.
    pub zeta_bound_h2: Option<f64>,
}

/// Compute the payoff separation constants for a (game, desirable set)
/// pair.
///
/// Errors when the desirable set is empty or covers every profile (the
/// separation minimum is then over an empty range).
pub fn payoff_constants(game: &Game, desirable: &DesirableSet) -> Result<PayoffConstants> {
    validate_desirable(game, desirable)?;
    if desirable.len() == game.num_profiles() {
        return Err(CoreError::InvalidInput(
            "desirable set covers every profile; payoff separation is undefined".into(),
        ));
    }
    let n = game.num_players();
    // One pass for per-player extrema inside/outside the desirable set,
    // global per-player extrema, and the within-profile spread.
    let mut min_in = vec![f64::INFINITY; n];
    let mut max_out = vec![f64::NEG_INFINITY; n];
    let mut min_all = vec![f64::INFINITY; n];
    let mut max_all = vec![f64::NEG_INFINITY; n];
    let mut delta_star = 0.0f64;
    for s in 0..game.num_profiles() {
        let u = game.utilities(s);
        let inside = desirable.contains(s);
        for i in 0..n {
            if inside {
                min_in[i] = min_in[i].min(u[i]);
            } else {
                max_out[i] = max_out[i].max(u[i]);
            }
            min_all[i] = min_all[i].min(u[i]);
            max_all[i] = max_all[i].max(u[i]);
            for j in (i + 1)..n {
                delta_star = delta_star.max((u[i] - u[j]).abs());
            }
        }
    }
    let delta_min = (0..n)
        .map(|i| min_in[i] - max_out[i])
        .fold(f64::INFINITY, f64::min);
    let delta_max = (0..n)
        .map(|i| max_all[i] - min_all[i])
        .fold(0.0f64, f64::max);
    let h1_holds = delta_star < delta_min;
    // Simultaneous-max characterization: a profile is in the candidate
    // set iff every player attains her global maximum there; the
    // hypothesis holds iff that set coincides with the desirable set.
    let mut h2_holds = true;
    for s in 0..game.num_profiles() {
        let u = game.utilities(s);
        let sim_max = (0..n).all(|i| u[i] == max_all[i]);
        if sim_max != desirable.contains(s) {
            h2_holds = false;
            break;
        }
    }
    let zeta_bound_h1 = h1_holds.then_some(0.5 * (delta_min - delta_star));
    let zeta_bound_h2 =
        (h2_holds && delta_max > 0.0).then(|| delta_min * delta_min / (4.0 * delta_max));
    Ok(PayoffConstants {
        delta_min,
        delta_max,
        delta_star,
        h1_holds,
        h2_holds,
        zeta_bound_h1,
        zeta_bound_h2,
    })
}

/// Layer the profile space by aligned-better-reply distance to the
/// terminal set.
///
/// Layer 0 is the union of the pure Nash profiles and the desirable
/// set; layer `k` holds the profiles outside earlier layers with an
/// aligned better reply landing exactly in layer `k − 1`. For the games
/// this tool targets the layers partition the profile space; a profile
/// no layer can absorb is reported as a structural error.
pub fn sk_partition(game: &Game, desirable: &DesirableSet) -> Result<Vec<Vec<usize>>> {
    validate_desirable(game, desirable)?;
    let n = game.num_players();
    let nash = nash_index_set(&game.pure_nash_set());
    let mut covered = vec![false; game.num_profiles()];
    let mut layer0: Vec<usize> = (0..game.num_profiles())
        .filter(|&s| desirable.contains(s) || nash.contains(&s))
        .collect();
    layer0.sort_unstable();
    for &s in &layer0 {
        covered[s] = true;
    }
    let mut layers = vec![layer0];
    let mut uncovered: usize = covered.iter().filter(|&&c| !c).count();
    while uncovered > 0 {
        let prev: BTreeSet<usize> = layers.last().unwrap().iter().copied().collect();
        let mut layer = Vec::new();
        for (s, &done) in covered.iter().enumerate() {
            if done {
                continue;
            }
            let u = game.utilities(s).to_vec();
            let mut reaches_prev = false;
            'outer: for i in 0..n {
                let current = game.action_of(s, i);
                for a in 0..game.num_actions(i) {
                    if a == current {
                        continue;
                    }
                    let t = game.unilateral(s, i, a);
                    if !prev.contains(&t) {
                        continue;
                    }
                    let v = game.utilities(t);
                    if v[i] > u[i] && (0..n).all(|j| j == i || v[j] >= u[j]) {
                        reaches_prev = true;
                        break 'outer;
                    }
                }
            }
            if reaches_prev {
                layer.push(s);
            }
        }
        if layer.is_empty() {
            let orphan = covered.iter().position(|&c| !c).unwrap();
            return Err(CoreError::Structure(format!(
                "profile {} has no aligned better reply into the previous layer",
                game.format_profile(orphan)
            )));
        }
        for &s in &layer {
            covered[s] = true;
        }
        uncovered -= layer.len();
        layers.push(layer);
    }
    Ok(layers)
}
