//! The finite Markov chain over pure strategy states.
//!
//! A pure strategy state is a joint action together with aspirations
//! pinned at its payoffs; these states are absorbing for the
//! unperturbed learning process, so the long-run behavior of the
//! slightly-perturbed process is captured by a finite chain: from each
//! pure state, force exactly one agent to tremble, let the unperturbed
//! process run until it absorbs again, and record where it lands. This
//! module estimates that transition matrix by Monte Carlo
//! ([`estimate_phat`]), computes its invariant distribution by a dense
//! linear solve with a power-iteration fallback
//! ([`invariant_distribution`]), and independently by the classical
//! Freidlin–Wentzell spanning-graph formula ([`fw_invariant`]), which
//! serves as a cross-check oracle for the solver. [`fairness_report`]
//! summarizes how invariant mass splits across the per-agent success
//! classes of allocation games.

use std::collections::BTreeSet;

use rayon::prelude::*;

use crate::error::{CoreError, Result};
use crate::game::Game;
use crate::games::strict_winner;
use crate::learning::{is_absorbed, step, stream_rng, LearnerState, Params, TremblePolicy};

/// Hard cap on the number of pure states for transition estimation;
/// the dense matrix is `|S|²` floats.
pub const PHAT_STATE_BUDGET: usize = 8192;

/// Cap on `|S|` for the spanning-graph formula; the enumeration visits
/// on the order of `(|S|−1)^(|S|−1)` graphs.
pub const FW_STATE_BUDGET: usize = 9;

/// Cap on the number of free (non-target) states in a W-graph
/// enumeration.
pub const W_GRAPH_FREE_BUDGET: usize = 12;

/// Absorption detection tolerance used by [`estimate_phat`]: an agent
/// counts as satisfied when its aspiration exceeds its payoff by no
/// more than this. Exact satisfaction is approached geometrically, so
/// a small positive slack turns an asymptotic event into a detectable
/// one without affecting which state absorbs.
pub const DEFAULT_ABSORB_TOL: f64 = 1e-9;

/// Maximum fraction of samples in a row that may fail to absorb within
/// the step cap before estimation is rejected as unreliable.
const MAX_UNRESOLVED_FRACTION: f64 = 0.001;

/// Above this state count the direct linear solve is skipped in favor
/// of power iteration (the dense LU would need gigabytes).
const DIRECT_SOLVE_LIMIT: usize = 2048;

/// Residual (‖πP̂ − π‖_∞) beyond which a direct-solve result is
/// discarded and power iteration takes over.
const SOLVE_RESIDUAL_ACCEPT: f64 = 1e-8;

/// The bijection between pure strategy states and joint actions.
///
/// The state space of the embedded chain is isomorphic to the set of
/// joint actions: state `s` is the joint action with profile index `s`
/// (mixed-radix order, last agent fastest) together with aspirations
/// equal to its payoffs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PureStateIndex {
    action_counts: Vec<usize>,
    num_states: usize,
}

/// Enumerates the pure strategy states of a game in mixed-radix
/// profile order.
pub fn pure_states(game: &Game) -> PureStateIndex {
    PureStateIndex {
        action_counts: game.action_counts().to_vec(),
        num_states: game.num_profiles(),
    }
}

impl PureStateIndex {
    /// Number of pure states (= number of joint actions).
    pub fn num_states(&self) -> usize {
        self.num_states
    }

    /// Per-agent action counts of the underlying game.
    pub fn action_counts(&self) -> &[usize] {
        &self.action_counts
    }

    /// Checks that this index was built for a game of the same shape.
    pub fn assert_matches(&self, game: &Game) -> Result<()> {
        if self.action_counts != game.action_counts() {
            return Err(CoreError::InvalidInput(format!(
                "state index shape {:?} does not match game shape {:?}",
                self.action_counts,
                game.action_counts()
            )));
        }
        Ok(())
    }
}

/// Estimated transition matrix of the embedded chain, with per-entry
/// binomial standard errors and unresolved-sample diagnostics.
#[derive(Debug, Clone)]
pub struct PhatMatrix {
    n_states: usize,
    /// Row-major transition probabilities.
    entries: Vec<f64>,
    /// Row-major binomial standard errors (zero for synthetic inputs).
    stderr: Vec<f64>,
    samples_per_row: usize,
    /// Per-row count of samples that hit the step cap without
    /// absorbing; these are excluded from the row's distribution.
    unresolved: Vec<u64>,
    params_used: Option<Params>,
}

impl PhatMatrix {
    /// Wraps an explicit row-stochastic matrix (e.g. a synthetic chain
    /// for testing the solvers). Rows must sum to 1 within 1e-9 and
    /// entries must be nonnegative and finite.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(CoreError::InvalidInput(
                "transition matrix must have at least one state".into(),
            ));
        }
        let mut entries = Vec::with_capacity(n * n);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(CoreError::InvalidInput(format!(
                    "row {r} has {} entries, expected {n}",
                    row.len()
                )));
            }
            let mut sum = 0.0;
            for (c, &p) in row.iter().enumerate() {
                if !p.is_finite() || p < 0.0 {
                    return Err(CoreError::InvalidInput(format!(
                        "entry ({r},{c}) = {p} is not a probability"
                    )));
                }
                sum += p;
            }
            if (sum - 1.0).abs() > 1e-9 {
                return Err(CoreError::InvalidInput(format!(
                    "row {r} sums to {sum}, expected 1 within 1e-9"
                )));
            }
            entries.extend_from_slice(row);
        }
        Ok(PhatMatrix {
            n_states: n,
            entries,
            stderr: vec![0.0; n * n],
            samples_per_row: 0,
            unresolved: vec![0; n],
            params_used: None,
        })
    }

    /// Number of states.
    pub fn n_states(&self) -> usize {
        self.n_states
    }

    /// Transition probability from `r` to `c`.
    pub fn entry(&self, r: usize, c: usize) -> f64 {
        assert!(r < self.n_states && c < self.n_states, "state out of range");
        self.entries[r * self.n_states + c]
    }

    /// One row of transition probabilities.
    pub fn row(&self, r: usize) -> &[f64] {
        assert!(r < self.n_states, "state out of range");
        &self.entries[r * self.n_states..(r + 1) * self.n_states]
    }

    /// Binomial standard error of the `(r,c)` entry.
    pub fn stderr(&self, r: usize, c: usize) -> f64 {
        assert!(r < self.n_states && c < self.n_states, "state out of range");
        self.stderr[r * self.n_states + c]
    }

    /// One row of standard errors.
    pub fn stderr_row(&self, r: usize) -> &[f64] {
        assert!(r < self.n_states, "state out of range");
        &self.stderr[r * self.n_states..(r + 1) * self.n_states]
    }

    /// Samples drawn per row (0 for synthetic matrices).
    pub fn samples_per_row(&self) -> usize {
        self.samples_per_row
    }

    /// Per-row unresolved-sample counts.
    pub fn unresolved(&self) -> &[u64] {
        &self.unresolved
    }

    /// Samples of row `r` that absorbed (and were counted).
    pub fn resolved(&self, r: usize) -> u64 {
        self.samples_per_row as u64 - self.unresolved[r]
    }

    /// The learning parameters the estimate was produced under.
    pub fn params_used(&self) -> Option<&Params> {
        self.params_used.as_ref()
    }
}

/// An estimate together with the per-batch sub-estimates it pools.
///
/// The batches split each row's samples into consecutive blocks drawn
/// from the same random streams, so `pooled` is bit-identical to a
/// plain [`estimate_phat`] call with the same arguments. Solving each
/// batch for its own invariant distribution yields honest standard
/// errors for any statistic of the invariant distribution (batch means
/// are i.i.d. replicates of the estimator at reduced sample size).
#[derive(Debug, Clone)]
pub struct BatchedPhat {
    pub pooled: PhatMatrix,
    pub batches: Vec<PhatMatrix>,
}

/// Runs one transition sample: a forced single-agent tremble out of
/// the pure state at `profile`, then unperturbed steps until the
/// satisfaction certificate fires. Returns the absorbing profile, or
/// `None` if the step cap was hit first.
fn absorb_one_sample(
    game: &Game,
    params: &Params,
    profile: usize,
    rng: &mut rand_chacha::ChaCha8Rng,
    max_steps: u64,
    absorb_tol: f64,
) -> Option<usize> {
    let mut state = LearnerState::pure(game, params, profile);
    step(game, params, TremblePolicy::ForcedSingle, &mut state, rng);
    let mut taken = 0u64;
    loop {
        if is_absorbed(&state, game, absorb_tol) {
            return Some(state.profile_index());
        }
        if taken == max_steps {
            return None;
        }
        step(game, params, TremblePolicy::None, &mut state, rng);
        taken += 1;
    }
}

fn check_phat_budget(n: usize) -> Result<()> {
    if n > PHAT_STATE_BUDGET {
        return Err(CoreError::Budget(format!(
            "{n} pure states exceed the transition-estimation budget of {PHAT_STATE_BUDGET}"
        )));
    }
    Ok(())
}

/// Builds a probability row and its standard errors from landing
/// counts, normalizing over resolved samples only.
fn row_from_counts(counts: &[u64], resolved: u64) -> (Vec<f64>, Vec<f64>) {
    let mut probs = Vec::with_capacity(counts.len());
    let mut errs = Vec::with_capacity(counts.len());
    for &c in counts {
        let p = c as f64 / resolved as f64;
        probs.push(p);
        errs.push((p * (1.0 - p) / resolved as f64).sqrt());
    }
    (probs, errs)
}

/// Estimates the embedded chain's transition matrix by Monte Carlo.
///
/// For each pure state: `samples_per_row` independent samples, each a
/// forced single-agent tremble followed by unperturbed steps until
/// absorption (the tremble rate in `params` plays no role — the kernel
/// composition is explicit). Rows are normalized over resolved
/// samples; samples that hit `max_steps` without absorbing are tracked
/// per row, and any row with more than 0.1% unresolved aborts the
/// estimate. Sample `j` of row `r` draws from random stream
/// `r·samples_per_row + j + 1` of `seed`, so results are reproducible
/// and independent of parallel scheduling.
pub fn estimate_phat(
    game: &Game,
    params: &Params,
    index: &PureStateIndex,
    samples_per_row: usize,
    seed: u64,
    max_steps: u64,
) -> Result<PhatMatrix> {
    let batched = estimate_phat_batches(game, params, index, samples_per_row, seed, max_steps, 1)?;
    Ok(batched.pooled)
}

/// [`estimate_phat`] with the samples of each row split into
/// `num_batches` consecutive equal-size blocks, returning both the
/// pooled estimate and the per-batch estimates. `samples_per_row` must
/// be a positive multiple of `num_batches`.
pub fn estimate_phat_batches(
    game: &Game,
    params: &Params,
    index: &PureStateIndex,
    samples_per_row: usize,
    seed: u64,
    max_steps: u64,
    num_batches: usize,
) -> Result<BatchedPhat> {
    index.assert_matches(game)?;
    params.validate(game)?;
    let n = index.num_states();
    check_phat_budget(n)?;
    if samples_per_row == 0 {
        return Err(CoreError::InvalidInput(
            "samples_per_row must be at least 1".into(),
        ));
    }
    if num_batches == 0 || samples_per_row % num_batches != 0 {
        return Err(CoreError::InvalidInput(format!(
            "samples_per_row ({samples_per_row}) must be a positive multiple of num_batches ({num_batches})"
        )));
    }
    let per_batch = samples_per_row / num_batches;
    let absorb_tol = DEFAULT_ABSORB_TOL;

    struct RowResult {
        /// counts[batch][landing state]
        counts: Vec<Vec<u64>>,
        /// unresolved[batch]
        unresolved: Vec<u64>,
    }

    let rows: Vec<RowResult> = (0..n)
        .into_par_iter()
        .map(|r| {
            let mut counts = vec![vec![0u64; n]; num_batches];
            let mut unresolved = vec![0u64; num_batches];
            for j in 0..samples_per_row {
                let stream = (r as u64) * (samples_per_row as u64) + j as u64 + 1;
                let mut rng = stream_rng(seed, stream);
                let batch = j / per_batch;
                match absorb_one_sample(game, params, r, &mut rng, max_steps, absorb_tol) {
                    Some(landing) => counts[batch][landing] += 1,
                    None => unresolved[batch] += 1,
                }
            }
            RowResult { counts, unresolved }
        })
        .collect();

    // Reject before building anything if any row is unreliable.
    for (r, row) in rows.iter().enumerate() {
        let unresolved: u64 = row.unresolved.iter().sum();
        let fraction = unresolved as f64 / samples_per_row as f64;
        if fraction > MAX_UNRESOLVED_FRACTION {
            return Err(CoreError::Estimation(format!(
                "row {r}: {unresolved} of {samples_per_row} samples did not absorb within \
                 {max_steps} steps ({:.3}% > 0.1%); raise max_steps or loosen parameters",
                fraction * 100.0
            )));
        }
    }

    let build = |counts_of: &dyn Fn(&RowResult, usize) -> u64,
                 unresolved_of: &dyn Fn(&RowResult) -> u64,
                 spr: usize|
     -> Result<PhatMatrix> {
        let mut entries = Vec::with_capacity(n * n);
        let mut stderr = Vec::with_capacity(n * n);
        let mut unresolved = Vec::with_capacity(n);
        for row in &rows {
            let miss = unresolved_of(row);
            let resolved = spr as u64 - miss;
            if resolved == 0 {
                return Err(CoreError::Estimation(
                    "a sample batch has no resolved samples; raise max_steps".into(),
                ));
            }
            let counts: Vec<u64> = (0..n).map(|c| counts_of(row, c)).collect();
            let (p, e) = row_from_counts(&counts, resolved);
            entries.extend(p);
            stderr.extend(e);
            unresolved.push(miss);
        }
        Ok(PhatMatrix {
            n_states: n,
            entries,
            stderr,
            samples_per_row: spr,
            unresolved,
            params_used: Some(*params),
        })
    };

    let pooled = build(
        &|row, c| row.counts.iter().map(|b| b[c]).sum(),
        &|row| row.unresolved.iter().sum(),
        samples_per_row,
    )?;
    let mut batches = Vec::with_capacity(num_batches);
    if num_batches > 1 {
        for b in 0..num_batches {
            batches.push(build(
                &|row, c| row.counts[b][c],
                &|row| row.unresolved[b],
                per_batch,
            )?);
        }
    }
    Ok(BatchedPhat { pooled, batches })
}

/// How a stationary distribution was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    /// Dense LU solve of the balance equations.
    DirectSolve,
    /// Damped power iteration (fallback for singular or oversized
    /// systems).
    PowerIteration,
    /// Spanning-graph (Freidlin–Wentzell) formula.
    WGraphFormula,
}

impl SolveMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveMethod::DirectSolve => "direct_solve",
            SolveMethod::PowerIteration => "power_iteration",
            SolveMethod::WGraphFormula => "w_graph_formula",
        }
    }
}

/// A stationary distribution with solution diagnostics.
#[derive(Debug, Clone)]
pub struct StationaryDistribution {
    /// Probability vector over pure states.
    pub pi: Vec<f64>,
    /// ‖πP̂ − π‖_∞ of the returned vector.
    pub residual: f64,
    /// Communicating classes of the (sampled) chain, each sorted,
    /// ordered by smallest member. A single class means the sampled
    /// chain is irreducible; more than one is a reducibility warning —
    /// finite sampling can miss transitions the true chain has.
    pub classes: Vec<Vec<usize>>,
    /// Which solver produced `pi`.
    pub method: SolveMethod,
}

impl StationaryDistribution {
    /// Whether the sampled chain has a single communicating class.
    pub fn is_irreducible(&self) -> bool {
        self.classes.len() == 1
    }
}

/// ‖πP̂ − π‖_∞.
fn residual_inf(pi: &[f64], phat: &PhatMatrix) -> f64 {
    let n = phat.n_states();
    let mut worst = 0.0f64;
    for c in 0..n {
        let mut acc = 0.0;
        for (r, &mass) in pi.iter().enumerate() {
            acc += mass * phat.entry(r, c);
        }
        worst = worst.max((acc - pi[c]).abs());
    }
    worst
}

/// Clamps tiny negative entries to zero and renormalizes to sum 1.
fn clean_probability_vector(pi: &mut [f64]) -> bool {
    let mut sum = 0.0;
    for p in pi.iter_mut() {
        if !p.is_finite() {
            return false;
        }
        if *p < 0.0 {
            if *p < -1e-9 {
                return false;
            }
            *p = 0.0;
        }
        sum += *p;
    }
    if sum <= 0.0 {
        return false;
    }
    for p in pi.iter_mut() {
        *p /= sum;
    }
    true
}

/// Communicating classes of the support graph (edge r→c iff
/// P̂_{rc} > 0), via Kosaraju's algorithm with explicit stacks.
fn communicating_classes(phat: &PhatMatrix) -> Vec<Vec<usize>> {
    let n = phat.n_states();
    let mut fwd = vec![Vec::new(); n];
    let mut rev = vec![Vec::new(); n];
    for (r, targets) in fwd.iter_mut().enumerate() {
        for c in 0..n {
            if r != c && phat.entry(r, c) > 0.0 {
                targets.push(c);
            }
        }
    }
    for (r, targets) in fwd.iter().enumerate() {
        for &c in targets {
            rev[c].push(r);
        }
    }

    // First pass: forward DFS finish order.
    let mut order = Vec::with_capacity(n);
    let mut visited = vec![false; n];
    for start in 0..n {
        if visited[start] {
            continue;
        }
        let mut stack: Vec<(usize, usize)> = vec![(start, 0)];
        visited[start] = true;
        while let Some(&mut (node, ref mut next)) = stack.last_mut() {
            if *next < fwd[node].len() {
                let child = fwd[node][*next];
                *next += 1;
                if !visited[child] {
                    visited[child] = true;
                    stack.push((child, 0));
                }
            } else {
                order.push(node);
                stack.pop();
            }
        }
    }

    // Second pass: reverse DFS in reverse finish order.
    let mut classes = Vec::new();
    let mut assigned = vec![false; n];
    for &start in order.iter().rev() {
        if assigned[start] {
            continue;
        }
        let mut class = vec![start];
        assigned[start] = true;
        let mut stack = vec![start];
        while let Some(node) = stack.pop() {
            for &prev in &rev[node] {
                if !assigned[prev] {
                    assigned[prev] = true;
                    class.push(prev);
                    stack.push(prev);
                }
            }
        }
        class.sort_unstable();
        classes.push(class);
    }
    classes.sort_by_key(|c| c[0]);
    classes
}

/// Damped power iteration x ← ½(x + xP̂), which has the same fixed
/// points as xP̂ = x but converges regardless of periodicity.
fn power_iteration(phat: &PhatMatrix) -> Vec<f64> {
    let n = phat.n_states();
    let mut x = vec![1.0 / n as f64; n];
    let mut next = vec![0.0f64; n];
    for _ in 0..100_000 {
        next.iter_mut().for_each(|v| *v = 0.0);
        for (r, &mass) in x.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            for (c, v) in next.iter_mut().enumerate() {
                *v += mass * phat.entry(r, c);
            }
        }
        let mut diff = 0.0f64;
        for (xi, ni) in x.iter_mut().zip(next.iter()) {
            let damped = 0.5 * (*xi + *ni);
            diff = diff.max((damped - *xi).abs());
            *xi = damped;
        }
        if diff < 1e-15 {
            break;
        }
    }
    x
}

/// Computes the invariant distribution of an estimated chain.
///
/// Replaces one balance equation with the normalization row and
/// LU-solves the dense system; if the solve is singular, produces an
/// invalid vector, or leaves a residual above 1e-8, falls back to
/// damped power iteration. Reducibility of the sampled chain is
/// diagnosed (not fatal): the returned `classes` decomposition has one
/// entry per communicating class, and the distribution is computed
/// for the sampled chain as-is.
pub fn invariant_distribution(phat: &PhatMatrix) -> Result<StationaryDistribution> {
    let n = phat.n_states();
    let classes = communicating_classes(phat);

    if n <= DIRECT_SOLVE_LIMIT {
        // Balance equations (πP̂)_c = π_c for c < n−1, plus Σπ = 1.
        let a = nalgebra::DMatrix::from_fn(n, n, |r, c| {
            if r == n - 1 {
                1.0
            } else {
                let delta = if r == c { 1.0 } else { 0.0 };
                phat.entry(c, r) - delta
            }
        });
        let mut b = nalgebra::DVector::zeros(n);
        b[n - 1] = 1.0;
        if let Some(sol) = a.lu().solve(&b) {
            let mut pi: Vec<f64> = sol.iter().copied().collect();
            if clean_probability_vector(&mut pi) {
                let residual = residual_inf(&pi, phat);
                if residual <= SOLVE_RESIDUAL_ACCEPT {
                    return Ok(StationaryDistribution {
                        pi,
                        residual,
                        classes,
                        method: SolveMethod::DirectSolve,
                    });
                }
            }
        }
    }

    let mut pi = power_iteration(phat);
    if !clean_probability_vector(&mut pi) {
        return Err(CoreError::Estimation(
            "power iteration produced an invalid probability vector".into(),
        ));
    }
    let residual = residual_inf(&pi, phat);
    Ok(StationaryDistribution {
        pi,
        residual,
        classes,
        method: SolveMethod::PowerIteration,
    })
}

/// Validates a W-graph target set and returns the sorted free states.
fn w_graph_free_states(n: usize, w: &BTreeSet<usize>) -> Result<Vec<usize>> {
    if w.is_empty() {
        return Err(CoreError::InvalidInput(
            "W-graph target set must be nonempty".into(),
        ));
    }
    if let Some(&bad) = w.iter().find(|&&s| s >= n) {
        return Err(CoreError::InvalidInput(format!(
            "W-graph target state {bad} out of range for {n} states"
        )));
    }
    let free: Vec<usize> = (0..n).filter(|s| !w.contains(s)).collect();
    if free.len() > W_GRAPH_FREE_BUDGET {
        return Err(CoreError::Budget(format!(
            "{} free states exceed the W-graph enumeration budget of {W_GRAPH_FREE_BUDGET}",
            free.len()
        )));
    }
    Ok(free)
}

/// Enumerates every W-graph, invoking `visit` with the arrow list
/// (ordered by source state) of each complete assignment.
fn visit_w_graphs<F: FnMut(&[(usize, usize)])>(
    n: usize,
    w: &BTreeSet<usize>,
    free: &[usize],
    visit: &mut F,
) {
    // arrow[s] = assigned target of free state s.
    let mut arrow: Vec<Option<usize>> = vec![None; n];
    let mut chosen: Vec<(usize, usize)> = Vec::with_capacity(free.len());

    fn rec<F: FnMut(&[(usize, usize)])>(
        depth: usize,
        n: usize,
        w: &BTreeSet<usize>,
        free: &[usize],
        arrow: &mut Vec<Option<usize>>,
        chosen: &mut Vec<(usize, usize)>,
        visit: &mut F,
    ) {
        if depth == free.len() {
            visit(chosen);
            return;
        }
        let q = free[depth];
        for t in 0..n {
            if t == q {
                continue;
            }
            // Following assigned arrows from t must not lead back to
            // q; assigned arrows are acyclic, so the walk terminates.
            let mut cur = t;
            let cycles = loop {
                if cur == q {
                    break true;
                }
                if w.contains(&cur) {
                    break false;
                }
                match arrow[cur] {
                    Some(next) => cur = next,
                    None => break false,
                }
            };
            if cycles {
                continue;
            }
            arrow[q] = Some(t);
            chosen.push((q, t));
            rec(depth + 1, n, w, free, arrow, chosen, visit);
            chosen.pop();
            arrow[q] = None;
        }
    }

    rec(0, n, w, free, &mut arrow, &mut chosen, visit);
}

/// Enumerates all W-graphs on `n` states with target set `w`: arrow
/// assignments giving each state outside `w` exactly one outgoing
/// arrow such that no cycle forms among the states outside `w` (every
/// arrow path leads into `w`). Each graph is returned as its arrow
/// list sorted by source state.
pub fn w_graphs(n: usize, w: &BTreeSet<usize>) -> Result<Vec<Vec<(usize, usize)>>> {
    let free = w_graph_free_states(n, w)?;
    let mut graphs = Vec::new();
    visit_w_graphs(n, w, &free, &mut |arrows| graphs.push(arrows.to_vec()));
    Ok(graphs)
}

/// Computes the invariant distribution by the spanning-graph formula:
/// the stationary mass of state `s` is proportional to the sum over
/// all {s}-graphs of the product of transition probabilities along
/// their arrows. Exact up to float rounding, and independent of the
/// linear-algebra route, so the two can cross-check each other.
pub fn fw_invariant(phat: &PhatMatrix) -> Result<StationaryDistribution> {
    let n = phat.n_states();
    if n > FW_STATE_BUDGET {
        return Err(CoreError::Budget(format!(
            "{n} states exceed the spanning-graph budget of {FW_STATE_BUDGET}; \
             use invariant_distribution instead"
        )));
    }
    let mut weights = Vec::with_capacity(n);
    for s in 0..n {
        let w: BTreeSet<usize> = BTreeSet::from([s]);
        let free = w_graph_free_states(n, &w)?;
        let mut total = 0.0f64;
        visit_w_graphs(n, &w, &free, &mut |arrows| {
            let mut prod = 1.0;
            for &(q, t) in arrows {
                prod *= phat.entry(q, t);
            }
            total += prod;
        });
        weights.push(total);
    }
    let total: f64 = weights.iter().sum();
    if total.is_nan() || total <= 0.0 {
        return Err(CoreError::InvalidInput(
            "every spanning graph has weight zero: the chain is reducible".into(),
        ));
    }
    let pi: Vec<f64> = weights.into_iter().map(|r| r / total).collect();
    let residual = residual_inf(&pi, phat);
    Ok(StationaryDistribution {
        pi,
        residual,
        classes: communicating_classes(phat),
        method: SolveMethod::WGraphFormula,
    })
}

/// How invariant mass splits across per-agent success classes.
#[derive(Debug, Clone)]
pub struct FairnessReport {
    /// Mass of each agent's success class (profiles where that agent's
    /// action index is strictly maximal).
    pub per_agent_mass: Vec<f64>,
    /// Mass of profiles with no strict winner.
    pub collision_mass: f64,
    /// max_{i,j} |per_agent_mass_i − per_agent_mass_j|.
    pub max_pairwise_gap: f64,
}

/// Splits a stationary distribution's mass across the per-agent
/// success classes of the game (strict-winner profiles) plus the
/// no-winner remainder.
pub fn fairness_report(
    pi: &StationaryDistribution,
    game: &Game,
    index: &PureStateIndex,
) -> Result<FairnessReport> {
    index.assert_matches(game)?;
    if pi.pi.len() != index.num_states() {
        return Err(CoreError::InvalidInput(format!(
            "distribution over {} states does not match {} pure states",
            pi.pi.len(),
            index.num_states()
        )));
    }
    let n_agents = game.num_players();
    let mut per_agent_mass = vec![0.0f64; n_agents];
    let mut collision_mass = 0.0f64;
    for (p, &mass) in pi.pi.iter().enumerate() {
        match strict_winner(game.profile_at(p).actions()) {
            Some(i) => per_agent_mass[i] += mass,
            None => collision_mass += mass,
        }
    }
    let mut max_pairwise_gap = 0.0f64;
    for i in 0..n_agents {
        for j in i + 1..n_agents {
            max_pairwise_gap = max_pairwise_gap.max((per_agent_mass[i] - per_agent_mass[j]).abs());
        }
    }
    Ok(FairnessReport {
        per_agent_mass,
        collision_mass,
        max_pairwise_gap,
    })
}
