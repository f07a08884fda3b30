//! Finite strategic-form games.
//!
//! A [`Game`] is a set of `n ≥ 2` players, one finite action set per player,
//! and a total utility mapping from joint actions to per-player payoff
//! vectors. Joint actions are addressed by a mixed-radix *profile index*:
//! profiles are enumerated lexicographically with the **last** player's
//! action varying fastest, so `index = Σ_i a_i · Π_{j>i} |A_j|`. Payoff
//! tables in text form are listed in exactly that order ("row-major").
//!
//! Utilities are stored either as a dense table or as a lazily memoized
//! closure (used by game families whose payoffs are cheap to derive but
//! whose profile spaces are large, e.g. network formation).
//!
//! Structural verifiers (coordination conditions, symmetry, state
//! equivalence, payoff constants, layer decomposition) live in
//! [`verify`](crate::game::verify).

pub mod verify;

use std::collections::BTreeSet;
use std::fmt;
use std::sync::OnceLock;

use serde::Deserialize;

use crate::error::{CoreError, Result};

/// A joint action: one 0-based action index per player.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct JointAction(Vec<usize>);

impl JointAction {
    pub fn new(actions: Vec<usize>) -> Self {
        JointAction(actions)
    }

    pub fn actions(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<Vec<usize>> for JointAction {
    fn from(actions: Vec<usize>) -> Self {
        JointAction(actions)
    }
}

impl fmt::Display for JointAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, a) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")")
    }
}

/// Computes a profile's payoff vector from its action indices.
type PayoffFn = Box<dyn Fn(&[usize]) -> Vec<f64> + Send + Sync>;

/// How per-profile payoff vectors are stored.
enum PayoffStore {
    /// Flat table, profile-major: entry `s * n + i` is player `i`'s payoff
    /// at profile index `s`.
    Dense(Vec<f64>),
    /// Payoffs computed on first access and memoized per profile index.
    /// Concurrent readers may race to compute the same entry; all observe
    /// one consistent value.
    Lazy {
        cache: Vec<OnceLock<Box<[f64]>>>,
        compute: PayoffFn,
    },
}

/// A finite strategic-form game.
pub struct Game {
    name: String,
    action_counts: Vec<usize>,
    /// Mixed-radix strides: `strides[i] = Π_{j>i} action_counts[j]`.
    strides: Vec<usize>,
    num_profiles: usize,
    store: PayoffStore,
    labels: Option<Vec<Vec<String>>>,
    /// `(lo, hi)` with `lo ≤ min u ≤ max u ≤ hi`. Exact extrema for dense
    /// tables; a safe envelope for lazy games.
    payoff_bounds: (f64, f64),
}

impl fmt::Debug for Game {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Game")
            .field("name", &self.name)
            .field("action_counts", &self.action_counts)
            .field("num_profiles", &self.num_profiles)
            .finish_non_exhaustive()
    }
}

fn strides_for(action_counts: &[usize]) -> Result<(Vec<usize>, usize)> {
    if action_counts.len() < 2 {
        return Err(CoreError::InvalidGame(format!(
            "need at least 2 players, got {}",
            action_counts.len()
        )));
    }
    if let Some(i) = action_counts.iter().position(|&m| m == 0) {
        return Err(CoreError::InvalidGame(format!(
            "player {i} has an empty action set"
        )));
    }
    let mut strides = vec![1usize; action_counts.len()];
    let mut size = 1usize;
    for i in (0..action_counts.len()).rev() {
        strides[i] = size;
        size = size
            .checked_mul(action_counts[i])
            .ok_or_else(|| CoreError::InvalidGame("joint-action space overflows usize".into()))?;
    }
    Ok((strides, size))
}

impl Game {
    /// Build a game from a dense payoff table.
    ///
    /// `payoffs` is profile-major over the mixed-radix profile index with
    /// `n` reals per profile (player 0 first). All payoffs must be finite
    /// and the table must cover every joint action.
    pub fn from_table(
        name: impl Into<String>,
        action_counts: Vec<usize>,
        payoffs: Vec<f64>,
        labels: Option<Vec<Vec<String>>>,
    ) -> Result<Game> {
        let (strides, num_profiles) = strides_for(&action_counts)?;
        let n = action_counts.len();
        let expected = num_profiles
            .checked_mul(n)
            .ok_or_else(|| CoreError::InvalidGame("payoff table size overflows usize".into()))?;
        if payoffs.len() != expected {
            return Err(CoreError::InvalidGame(format!(
                "payoff table has {} entries, expected {} ({} profiles x {} players)",
                payoffs.len(),
                expected,
                num_profiles,
                n
            )));
        }
        if let Some(k) = payoffs.iter().position(|v| !v.is_finite()) {
            return Err(CoreError::InvalidGame(format!(
                "payoff entry {k} is not finite"
            )));
        }
        validate_labels(&action_counts, labels.as_ref())?;
        let lo = payoffs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = payoffs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(Game {
            name: name.into(),
            action_counts,
            strides,
            num_profiles,
            store: PayoffStore::Dense(payoffs),
            labels,
            payoff_bounds: (lo, hi),
        })
    }

    /// Build a game whose payoff vectors are computed on demand by
    /// `compute` (given the decoded joint action) and memoized.
    ///
    /// `payoff_bounds` must be a valid envelope: every payoff the closure
    /// can produce lies in `[lo, hi]`. The closure must be pure.
    pub fn from_fn(
        name: impl Into<String>,
        action_counts: Vec<usize>,
        payoff_bounds: (f64, f64),
        compute: impl Fn(&[usize]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Result<Game> {
        let (strides, num_profiles) = strides_for(&action_counts)?;
        if !(payoff_bounds.0.is_finite() && payoff_bounds.1.is_finite())
            || payoff_bounds.0 > payoff_bounds.1
        {
            return Err(CoreError::InvalidGame(format!(
                "payoff bounds ({}, {}) are not a finite ordered pair",
                payoff_bounds.0, payoff_bounds.1
            )));
        }
        let mut cache = Vec::with_capacity(num_profiles);
        cache.resize_with(num_profiles, OnceLock::new);
        Ok(Game {
            name: name.into(),
            action_counts,
            strides,
            num_profiles,
            store: PayoffStore::Lazy {
                cache,
                compute: Box::new(compute),
            },
            labels: None,
            payoff_bounds,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Number of players `n`.
    pub fn num_players(&self) -> usize {
        self.action_counts.len()
    }

    /// Size of player `i`'s action set.
    pub fn num_actions(&self, player: usize) -> usize {
        self.action_counts[player]
    }

    pub fn action_counts(&self) -> &[usize] {
        &self.action_counts
    }

    /// Total number of joint actions `|A|`.
    pub fn num_profiles(&self) -> usize {
        self.num_profiles
    }

    /// `(lo, hi)` bracketing every payoff. Exact extrema for dense tables.
    pub fn payoff_bounds(&self) -> (f64, f64) {
        self.payoff_bounds
    }

    pub fn labels(&self) -> Option<&[Vec<String>]> {
        self.labels.as_deref()
    }

    /// Mixed-radix index of a joint action, validating every coordinate.
    pub fn index_of(&self, actions: &[usize]) -> Result<usize> {
        if actions.len() != self.num_players() {
            return Err(CoreError::InvalidInput(format!(
                "joint action has {} coordinates, game has {} players",
                actions.len(),
                self.num_players()
            )));
        }
        let mut idx = 0usize;
        for (i, (&a, &m)) in actions.iter().zip(&self.action_counts).enumerate() {
            if a >= m {
                return Err(CoreError::InvalidInput(format!(
                    "action {a} out of range for player {i} (has {m} actions)"
                )));
            }
            idx += a * self.strides[i];
        }
        Ok(idx)
    }

    /// Decode a profile index into `out` (length `n`).
    pub fn decode_into(&self, index: usize, out: &mut [usize]) {
        debug_assert!(index < self.num_profiles);
        debug_assert_eq!(out.len(), self.num_players());
        let mut rem = index;
        for (o, &stride) in out.iter_mut().zip(&self.strides) {
            *o = rem / stride;
            rem %= stride;
        }
    }

    /// The joint action at a profile index.
    pub fn profile_at(&self, index: usize) -> JointAction {
        let mut out = vec![0usize; self.num_players()];
        self.decode_into(index, &mut out);
        JointAction(out)
    }

    /// Player `i`'s action at a profile index.
    pub fn action_of(&self, index: usize, player: usize) -> usize {
        (index / self.strides[player]) % self.action_counts[player]
    }

    /// Profile index after player `i` unilaterally deviates to `action`.
    pub fn unilateral(&self, index: usize, player: usize, action: usize) -> usize {
        let current = self.action_of(index, player);
        (index as isize + (action as isize - current as isize) * self.strides[player] as isize)
            as usize
    }

    /// Payoff vector at a profile index (length `n`, player 0 first).
    pub fn utilities(&self, index: usize) -> &[f64] {
        match &self.store {
            PayoffStore::Dense(table) => {
                let n = self.num_players();
                &table[index * n..(index + 1) * n]
            }
            PayoffStore::Lazy { cache, compute } => cache[index].get_or_init(|| {
                let mut actions = vec![0usize; self.num_players()];
                self.decode_into(index, &mut actions);
                let u = compute(&actions);
                assert_eq!(
                    u.len(),
                    self.num_players(),
                    "payoff closure returned a vector of the wrong length"
                );
                u.into_boxed_slice()
            }),
        }
    }

    /// Player `i`'s payoff at a profile index.
    pub fn utility_of(&self, index: usize, player: usize) -> f64 {
        self.utilities(index)[player]
    }

    /// Validated payoff-vector lookup by joint action.
    pub fn utilities_at(&self, a: &JointAction) -> Result<&[f64]> {
        let idx = self.index_of(a.actions())?;
        Ok(self.utilities(idx))
    }

    /// Player `i`'s strictly improving replacement actions at a profile,
    /// holding everyone else fixed. Sorted ascending; never contains the
    /// current action; may be empty.
    pub fn better_replies(&self, index: usize, player: usize) -> Vec<usize> {
        let current = self.action_of(index, player);
        let u_now = self.utility_of(index, player);
        (0..self.action_counts[player])
            .filter(|&a| {
                a != current && self.utility_of(self.unilateral(index, player, a), player) > u_now
            })
            .collect()
    }

    /// Validated better-reply set by joint action.
    pub fn better_replies_at(&self, a: &JointAction, player: usize) -> Result<Vec<usize>> {
        let idx = self.index_of(a.actions())?;
        if player >= self.num_players() {
            return Err(CoreError::InvalidInput(format!(
                "player {player} out of range (game has {} players)",
                self.num_players()
            )));
        }
        Ok(self.better_replies(idx, player))
    }

    /// Exhaustive pure Nash set, with strictness per equilibrium.
    ///
    /// A profile is Nash iff no player has a strictly improving unilateral
    /// deviation, and strict iff every deviation is strictly worse.
    pub fn pure_nash_set(&self) -> Vec<PureNash> {
        let mut out = Vec::new();
        'profiles: for s in 0..self.num_profiles {
            let u = self.utilities(s);
            let mut strict = true;
            for (i, &u_i) in u.iter().enumerate() {
                let current = self.action_of(s, i);
                for a in 0..self.action_counts[i] {
                    if a == current {
                        continue;
                    }
                    let v = self.utility_of(self.unilateral(s, i, a), i);
                    if v > u_i {
                        continue 'profiles;
                    }
                    if v == u_i {
                        strict = false;
                    }
                }
            }
            out.push(PureNash { profile: s, strict });
        }
        out
    }

    /// Human-readable rendering of a profile, using action labels when the
    /// game has them.
    pub fn format_profile(&self, index: usize) -> String {
        let mut actions = vec![0usize; self.num_players()];
        self.decode_into(index, &mut actions);
        let parts: Vec<String> = actions
            .iter()
            .enumerate()
            .map(|(i, &a)| match &self.labels {
                Some(ls) => ls[i][a].clone(),
                None => a.to_string(),
            })
            .collect();
        format!("({})", parts.join(","))
    }
}

fn validate_labels(action_counts: &[usize], labels: Option<&Vec<Vec<String>>>) -> Result<()> {
    if let Some(ls) = labels {
        if ls.len() != action_counts.len() {
            return Err(CoreError::InvalidGame(format!(
                "labels given for {} players, game has {}",
                ls.len(),
                action_counts.len()
            )));
        }
        for (i, (l, &m)) in ls.iter().zip(action_counts).enumerate() {
            if l.len() != m {
                return Err(CoreError::InvalidGame(format!(
                    "player {i} has {m} actions but {} labels",
                    l.len()
                )));
            }
        }
    }
    Ok(())
}

/// A pure Nash equilibrium, by profile index.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PureNash {
    pub profile: usize,
    /// Every unilateral deviation is strictly worse.
    pub strict: bool,
}

/// A distinguished set of joint actions (profile indices), typically the
/// desirable set a coordination analysis is run against.
///
/// Most uses require a non-empty set; constructors that *derive* the set
/// from a game (successful profiles, payoff-dominant networks) may
/// legitimately produce an empty one, which downstream verifiers reject
/// explicitly rather than silently.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DesirableSet {
    members: BTreeSet<usize>,
}

impl DesirableSet {
    /// Build from profile indices, validating range.
    pub fn from_indices(game: &Game, indices: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut members = BTreeSet::new();
        for s in indices {
            if s >= game.num_profiles() {
                return Err(CoreError::InvalidInput(format!(
                    "profile index {s} out of range (game has {} profiles)",
                    game.num_profiles()
                )));
            }
            members.insert(s);
        }
        Ok(DesirableSet { members })
    }

    /// Build from explicit joint actions.
    pub fn from_profiles(game: &Game, profiles: &[Vec<usize>]) -> Result<Self> {
        let mut members = BTreeSet::new();
        for p in profiles {
            members.insert(game.index_of(p)?);
        }
        Ok(DesirableSet { members })
    }

    pub fn contains(&self, index: usize) -> bool {
        self.members.contains(&index)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.members.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Structured text document describing a dense payoff table.
///
/// ```toml
/// version = 1
/// players = 2
/// action_counts = [2, 2]
/// payoffs = [4.0, 4.0,  0.0, 2.0,  2.0, 0.0,  3.0, 3.0]
/// labels = [["A", "B"], ["A", "B"]]   # optional
/// name = "my game"                    # optional
/// ```
///
/// `payoffs` is profile-major over the mixed-radix index (last player's
/// action varies fastest), `n` reals per profile. The `version` field is
/// mandatory and must be `1`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GameDoc {
    version: u32,
    players: usize,
    action_counts: Vec<usize>,
    payoffs: Vec<f64>,
    #[serde(default)]
    labels: Option<Vec<Vec<String>>>,
    #[serde(default)]
    name: Option<String>,
}

/// Parse a game from its structured text form (see [`Game::from_table`]
/// for the table layout; the schema is documented in the repository
/// README).
pub fn game_from_toml_str(text: &str) -> Result<Game> {
    let doc: GameDoc =
        toml::from_str(text).map_err(|e| CoreError::Parse(format!("game document: {e}")))?;
    if doc.version != 1 {
        return Err(CoreError::Parse(format!(
            "unsupported game document version {} (expected 1)",
            doc.version
        )));
    }
    if doc.players != doc.action_counts.len() {
        return Err(CoreError::Parse(format!(
            "players = {} but action_counts has {} entries",
            doc.players,
            doc.action_counts.len()
        )));
    }
    Game::from_table(
        doc.name.unwrap_or_else(|| "custom".into()),
        doc.action_counts,
        doc.payoffs,
        doc.labels,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::stag_hunt;

    #[test]
    fn stag_hunt_stored_payoffs() {
        let g = stag_hunt();
        // Frozen 2x2 table: (A,A)->(4,4), (A,B)->(0,2), (B,A)->(2,0), (B,B)->(3,3).
        let aa = g.utilities_at(&JointAction::new(vec![0, 0])).unwrap();
        assert_eq!(aa, &[4.0, 4.0]);
        let ab = g.utilities_at(&JointAction::new(vec![0, 1])).unwrap();
        assert_eq!(ab, &[0.0, 2.0]);
        let ba = g.utilities_at(&JointAction::new(vec![1, 0])).unwrap();
        assert_eq!(ba, &[2.0, 0.0]);
        let bb = g.utilities_at(&JointAction::new(vec![1, 1])).unwrap();
        assert_eq!(bb, &[3.0, 3.0]);
    }

    #[test]
    fn out_of_range_action_is_input_error() {
        let g = stag_hunt();
        let err = g.utilities_at(&JointAction::new(vec![0, 2])).unwrap_err();
        assert!(matches!(err, CoreError::InvalidInput(_)));
        let err = g.utilities_at(&JointAction::new(vec![0])).unwrap_err();
        assert!(matches!(err, CoreError::InvalidInput(_)));
    }

    #[test]
    fn mixed_radix_roundtrip() {
        let g = Game::from_table("t", vec![2, 3, 2], vec![0.0; 12 * 3], None).unwrap();
        assert_eq!(g.num_profiles(), 12);
        for s in 0..12 {
            let p = g.profile_at(s);
            assert_eq!(g.index_of(p.actions()).unwrap(), s);
        }
        // Last player varies fastest.
        assert_eq!(g.profile_at(0).actions(), &[0, 0, 0]);
        assert_eq!(g.profile_at(1).actions(), &[0, 0, 1]);
        assert_eq!(g.profile_at(2).actions(), &[0, 1, 0]);
    }

    #[test]
    fn unilateral_deviation_index() {
        let g = stag_hunt();
        let ab = g.index_of(&[0, 1]).unwrap();
        assert_eq!(g.unilateral(ab, 0, 1), g.index_of(&[1, 1]).unwrap());
        assert_eq!(g.unilateral(ab, 1, 0), g.index_of(&[0, 0]).unwrap());
        assert_eq!(g.unilateral(ab, 1, 1), ab);
    }

    #[test]
    fn better_replies_examples() {
        let g = stag_hunt();
        // At (A,B) the row player improves 0 -> 3 by switching to B.
        let ab = g.index_of(&[0, 1]).unwrap();
        assert_eq!(g.better_replies(ab, 0), vec![1]);
        // (A,A) is Nash for the row player: no better reply.
        let aa = g.index_of(&[0, 0]).unwrap();
        assert!(g.better_replies(aa, 0).is_empty());
    }

    #[test]
    fn better_replies_single_action_player() {
        let g = Game::from_table("deg", vec![1, 2], vec![1.0, 0.0, 2.0, 5.0], None).unwrap();
        assert!(g.better_replies(0, 0).is_empty());
    }

    #[test]
    fn single_profile_game_total_mapping() {
        let g = Game::from_table("one", vec![1, 1], vec![3.5, -2.0], None).unwrap();
        assert_eq!(g.num_profiles(), 1);
        assert_eq!(g.utilities(0), &[3.5, -2.0]);
    }

    #[test]
    fn pure_nash_stag_hunt() {
        let g = stag_hunt();
        let nash = g.pure_nash_set();
        let aa = g.index_of(&[0, 0]).unwrap();
        let bb = g.index_of(&[1, 1]).unwrap();
        assert_eq!(nash.len(), 2);
        assert!(nash.iter().any(|e| e.profile == aa && e.strict));
        assert!(nash.iter().any(|e| e.profile == bb && e.strict));
    }

    #[test]
    fn pure_nash_matching_pennies_empty() {
        // Zero-sum 2x2 with alternating (1,-1)/(-1,1): no pure equilibrium.
        let g = Game::from_table(
            "matching pennies",
            vec![2, 2],
            vec![1.0, -1.0, -1.0, 1.0, -1.0, 1.0, 1.0, -1.0],
            None,
        )
        .unwrap();
        assert!(g.pure_nash_set().is_empty());
    }

    #[test]
    fn pure_nash_constant_game_all_nonstrict() {
        let g = Game::from_table("const", vec![2, 2, 2], vec![1.0; 8 * 3], None).unwrap();
        let nash = g.pure_nash_set();
        assert_eq!(nash.len(), 8);
        assert!(nash.iter().all(|e| !e.strict));
    }

    #[test]
    fn lazy_store_matches_closure_and_memoizes() {
        let g = Game::from_fn("lazy", vec![2, 2], (0.0, 3.0), |a| {
            vec![(a[0] + a[1]) as f64, (a[0] * 2 + a[1]) as f64]
        })
        .unwrap();
        assert_eq!(g.utilities(3), &[2.0, 3.0]);
        // Second access hits the memoized entry (same address).
        let p1 = g.utilities(3).as_ptr();
        let p2 = g.utilities(3).as_ptr();
        assert_eq!(p1, p2);
    }

    #[test]
    fn dense_payoff_bounds_are_exact() {
        let g = stag_hunt();
        assert_eq!(g.payoff_bounds(), (0.0, 4.0));
    }

    #[test]
    fn table_length_mismatch_rejected() {
        let err = Game::from_table("bad", vec![2, 2], vec![0.0; 7], None).unwrap_err();
        assert!(matches!(err, CoreError::InvalidGame(_)));
    }

    #[test]
    fn non_finite_payoff_rejected() {
        let err = Game::from_table(
            "bad",
            vec![2, 2],
            vec![0.0, 1.0, f64::NAN, 0.0, 0.0, 0.0, 0.0, 0.0],
            None,
        )
        .unwrap_err();
        assert!(matches!(err, CoreError::InvalidGame(_)));
    }

    #[test]
    fn game_doc_roundtrip() {
        let text = r#"
            version = 1
            players = 2
            action_counts = [2, 2]
            payoffs = [4.0, 4.0, 0.0, 2.0, 2.0, 0.0, 3.0, 3.0]
            labels = [["A", "B"], ["A", "B"]]
        "#;
        let g = game_from_toml_str(text).unwrap();
        assert_eq!(g.utilities(0), &[4.0, 4.0]);
        assert_eq!(g.format_profile(1), "(A,B)");
    }

    #[test]
    fn game_doc_requires_version() {
        let text = "players = 2\naction_counts = [2,2]\npayoffs = [0.0]";
        assert!(matches!(
            game_from_toml_str(text).unwrap_err(),
            CoreError::Parse(_)
        ));
    }

    #[test]
    fn game_doc_rejects_unknown_keys() {
        let text = r#"
            version = 1
            players = 2
            action_counts = [1, 1]
            payoffs = [0.0, 0.0]
            epsilon = 0.1
        "#;
        assert!(matches!(
            game_from_toml_str(text).unwrap_err(),
            CoreError::Parse(_)
        ));
    }
}
