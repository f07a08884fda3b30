//! Streaming trajectory statistics.
//!
//! Every type here implements [`Observer`](crate::learning::Observer)
//! and maintains constant-memory running counts (traces are
//! subsampled), so 10^7-step runs are cheap to instrument. Reports are
//! pure functions of the observed stream; merging counts across
//! trajectories is plain addition.

use std::collections::HashMap;

use crate::error::{CoreError, Result};
use crate::game::{DesirableSet, Game};
use crate::games::network::{inverse_total_distance, NetworkSpec};
use crate::games::strict_winner;
use crate::learning::{is_absorbed, LearnerState, Observer};

/// Counts how often each joint action is played, optionally restricted
/// to a window of steps.
#[derive(Debug, Clone, Default)]
pub struct OccupancyCounter {
    counts: HashMap<usize, u64>,
    total: u64,
    window: Option<(u64, Option<u64>)>,
}

impl OccupancyCounter {
    /// Counts every step.
    pub fn new() -> Self {
        Self::default()
    }

    /// Counts only steps with `start ≤ t` (and `t < end` when an end
    /// is given).
    pub fn with_window(start: u64, end: Option<u64>) -> Self {
        OccupancyCounter {
            counts: HashMap::new(),
            total: 0,
            window: Some((start, end)),
        }
    }

    /// Occupancy frequencies over the steps seen so far.
    pub fn report(&self) -> OccupancyReport {
        let mut freq: Vec<(usize, f64)> = self
            .counts
            .iter()
            .map(|(&profile, &count)| (profile, count as f64 / self.total as f64))
            .collect();
        freq.sort_unstable_by_key(|&(profile, _)| profile);
        if self.total == 0 {
            freq.clear();
        }
        OccupancyReport {
            total_steps: self.total,
            freq,
            window: self.window,
        }
    }
}

impl Observer for OccupancyCounter {
    fn observe(&mut self, t: u64, state: &LearnerState) -> Result<()> {
        if let Some((start, end)) = self.window {
            if t < start || end.is_some_and(|e| t >= e) {
                return Ok(());
            }
        }
        *self.counts.entry(state.profile_index()).or_insert(0) += 1;
        self.total += 1;
        Ok(())
    }
}

/// Fraction of steps spent at each joint action.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyReport {
    /// Steps counted (window-restricted when a window was set).
    pub total_steps: u64,
    /// (profile index, fraction) for every profile that occurred,
    /// sorted by profile index. Fractions sum to 1 when any step was
    /// counted.
    pub freq: Vec<(usize, f64)>,
    /// The counting window, if one was set: (start, optional end).
    pub window: Option<(u64, Option<u64>)>,
}

impl OccupancyReport {
    /// Fraction of steps spent at a profile.
    pub fn fraction_of(&self, profile: usize) -> f64 {
        self.freq
            .binary_search_by(|&(p, _)| p.cmp(&profile))
            .map(|i| self.freq[i].1)
            .unwrap_or(0.0)
    }

    /// Total fraction of steps spent inside a set of profiles.
    pub fn mass_of(&self, set: &DesirableSet) -> f64 {
        set.iter().map(|p| self.fraction_of(p)).sum()
    }

    /// The `k` most-occupied profiles, by descending fraction (ties by
    /// ascending profile index).
    pub fn top(&self, k: usize) -> Vec<(usize, f64)> {
        let mut ranked = self.freq.clone();
        ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        ranked.truncate(k);
        ranked
    }

    /// Total-variation distance to a distribution given as a dense
    /// vector over profile indices. Profiles outside `pi`'s range are
    /// treated as having zero target mass.
    pub fn tv_distance(&self, pi: &[f64]) -> f64 {
        let mut acc = 0.0f64;
        let mut seen = vec![false; pi.len()];
        for &(p, f) in &self.freq {
            let target = if p < pi.len() {
                seen[p] = true;
                pi[p]
            } else {
                0.0
            };
            acc += (f - target).abs();
        }
        for (p, &hit) in seen.iter().enumerate() {
            if !hit {
                acc += pi[p];
            }
        }
        acc / 2.0
    }
}

/// Classifies each step of an allocation game by its strict winner.
#[derive(Debug, Clone)]
pub struct CommonPoolCounter {
    wins: Vec<u64>,
    collisions: u64,
    total: u64,
}

impl CommonPoolCounter {
    /// A counter for a game with `n_agents` agents.
    pub fn new(n_agents: usize) -> Self {
        CommonPoolCounter {
            wins: vec![0; n_agents],
            collisions: 0,
            total: 0,
        }
    }

    /// Success and collision frequencies over the steps seen so far.
    pub fn report(&self) -> CommonPoolReport {
        let success_freq: Vec<f64> = if self.total == 0 {
            vec![0.0; self.wins.len()]
        } else {
            self.wins
                .iter()
                .map(|&w| w as f64 / self.total as f64)
                .collect()
        };
        let collision_freq = if self.total == 0 {
            0.0
        } else {
            self.collisions as f64 / self.total as f64
        };
        let mut fairness_gap = 0.0f64;
        for i in 0..success_freq.len() {
            for j in i + 1..success_freq.len() {
                fairness_gap = fairness_gap.max((success_freq[i] - success_freq[j]).abs());
            }
        }
        CommonPoolReport {
            success_freq,
            collision_freq,
            fairness_gap,
            total_steps: self.total,
        }
    }
}

impl Observer for CommonPoolCounter {
    fn observe(&mut self, _t: u64, state: &LearnerState) -> Result<()> {
        let actions = state.actions();
        if actions.len() != self.wins.len() {
            return Err(CoreError::InvalidInput(format!(
                "common-pool counter built for {} agents observed a {}-agent state",
                self.wins.len(),
                actions.len()
            )));
        }
        match strict_winner(actions) {
            Some(i) => self.wins[i] += 1,
            None => self.collisions += 1,
        }
        self.total += 1;
        Ok(())
    }
}

/// Per-agent success frequencies of an allocation-game trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct CommonPoolReport {
    /// Fraction of steps on which each agent's action was strictly
    /// maximal.
    pub success_freq: Vec<f64>,
    /// Fraction of steps with no strict winner.
    pub collision_freq: f64,
    /// max_{i,j} |success_i − success_j|.
    pub fairness_gap: f64,
    pub total_steps: u64,
}

/// One subsampled snapshot of a network-formation trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub t: u64,
    /// Inverse total distance of each node in the current network.
    pub itd: Vec<f64>,
    /// Running average of each node's inverse total distance up to and
    /// including `t`.
    pub avg_itd: Vec<f64>,
    /// Aspiration of each node.
    pub rho: Vec<f64>,
}

/// Tracks connectivity statistics of a network-formation trajectory:
/// exact running-average inverse total distance per node, the fraction
/// of steps spent in payoff-dominant networks, and subsampled
/// snapshots for plotting.
#[derive(Debug, Clone)]
pub struct NetworkSeries {
    spec: NetworkSpec,
    dominant: DesirableSet,
    stride: u64,
    itd_cache: HashMap<usize, Box<[f64]>>,
    itd_sums: Vec<f64>,
    dominant_steps: u64,
    total: u64,
    trace: Vec<TraceRow>,
}

/// Default trace subsampling stride.
pub const DEFAULT_TRACE_STRIDE: u64 = 1000;

impl NetworkSeries {
    /// A series tracker for trajectories on the game built from
    /// `spec`. `dominant` is the profile set counted as
    /// payoff-dominant (wheel) networks; a snapshot is recorded every
    /// `stride` steps.
    pub fn new(spec: NetworkSpec, dominant: DesirableSet, stride: u64) -> Result<Self> {
        if stride == 0 {
            return Err(CoreError::InvalidInput("trace stride must be ≥ 1".into()));
        }
        let n = spec.n();
        Ok(NetworkSeries {
            spec,
            dominant,
            stride,
            itd_cache: HashMap::new(),
            itd_sums: vec![0.0; n],
            dominant_steps: 0,
            total: 0,
            trace: Vec::new(),
        })
    }

    /// The accumulated statistics.
    pub fn report(&self) -> NetworkReport {
        let running_avg_itd: Vec<f64> = if self.total == 0 {
            vec![0.0; self.itd_sums.len()]
        } else {
            self.itd_sums
                .iter()
                .map(|&s| s / self.total as f64)
                .collect()
        };
        let wheel_freq = if self.total == 0 {
            0.0
        } else {
            self.dominant_steps as f64 / self.total as f64
        };
        NetworkReport {
            running_avg_itd,
            wheel_freq,
            trace: self.trace.clone(),
            total_steps: self.total,
        }
    }
}

impl Observer for NetworkSeries {
    fn observe(&mut self, t: u64, state: &LearnerState) -> Result<()> {
        let profile = state.profile_index();
        let itd = match self.itd_cache.get(&profile) {
            Some(v) => v,
            None => {
                let graph = self.spec.graph_of(state.actions())?;
                let itd = inverse_total_distance(&graph).into_boxed_slice();
                self.itd_cache.entry(profile).or_insert(itd)
            }
        };
        if itd.len() != self.itd_sums.len() {
            return Err(CoreError::InvalidInput(format!(
                "network series for {} nodes observed a {}-agent state",
                self.itd_sums.len(),
                itd.len()
            )));
        }
        for (sum, &v) in self.itd_sums.iter_mut().zip(itd.iter()) {
            *sum += v;
        }
        if self.dominant.contains(profile) {
            self.dominant_steps += 1;
        }
        self.total += 1;
        if t % self.stride == 0 {
            let itd_now = itd.to_vec();
            let avg_itd = self
                .itd_sums
                .iter()
                .map(|&s| s / self.total as f64)
                .collect();
            self.trace.push(TraceRow {
                t,
                itd: itd_now,
                avg_itd,
                rho: state.rho().to_vec(),
            });
        }
        Ok(())
    }
}

/// Connectivity statistics of a network-formation trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkReport {
    /// Per-node time average of inverse total distance (each value in
    /// [0, 1]).
    pub running_avg_itd: Vec<f64>,
    /// Fraction of steps spent in the payoff-dominant profile set.
    pub wheel_freq: f64,
    /// Subsampled snapshots, one per stride.
    pub trace: Vec<TraceRow>,
    pub total_steps: u64,
}

/// Counts how often the learner state is a pure strategy state
/// (aspirations at or below the current payoffs, within `tol`).
#[derive(Debug)]
pub struct PureStateCounter<'g> {
    game: &'g Game,
    tol: f64,
    hits: u64,
    total: u64,
}

impl<'g> PureStateCounter<'g> {
    pub fn new(game: &'g Game, tol: f64) -> Self {
        PureStateCounter {
            game,
            tol,
            hits: 0,
            total: 0,
        }
    }

    /// Fraction of observed steps spent in pure strategy states.
    pub fn fraction(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.hits as f64 / self.total as f64
        }
    }

    pub fn total_steps(&self) -> u64 {
        self.total
    }
}

impl Observer for PureStateCounter<'_> {
    fn observe(&mut self, _t: u64, state: &LearnerState) -> Result<()> {
        if is_absorbed(state, self.game, self.tol) {
            self.hits += 1;
        }
        self.total += 1;
        Ok(())
    }
}
