//! The aspiration learning dynamics: a satisficing win-stay/lose-shift
//! rule with trembling aspiration levels.
//!
//! Each agent tracks an aspiration level ρ_i — a fading-memory average
//! of its own past payoffs, occasionally perturbed by a small random
//! tremble. After a play, the aspiration relaxes toward the realized
//! payoff; the action is kept with probability φ(u_i − ρ_i) (1 when
//! satisfied, decreasing with the dissatisfaction gap, floored at `h`)
//! and otherwise resampled uniformly among the *other* actions.
//!
//! Reproducibility contract: every trajectory is driven by a counter
//! RNG derived from `(seed, stream)` via [`stream_rng`], and one step
//! consumes draws in a fixed documented order (see [`step`]), so equal
//! inputs give bit-identical trajectories.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::game::{Game, JointAction};

/// Parameters of the learning rule.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// Aspiration step size ε ∈ (0, 1).
    pub epsilon: f64,
    /// Per-agent tremble probability λ ∈ [0, 1].
    pub lambda: f64,
    /// Tremble magnitude ζ > 0 (tremble uniform on [−ζ, ζ]).
    pub zeta: f64,
    /// Dissatisfaction slope c_φ > 0 of the keep probability.
    pub c_phi: f64,
    /// Floor keep probability h ∈ (0, 1).
    pub h: f64,
    /// Lower aspiration saturation bound.
    pub rho_lo: f64,
    /// Upper aspiration saturation bound.
    pub rho_hi: f64,
}

impl Params {
    /// Validate ranges and the strict bracketing of the game's payoffs
    /// by the saturation bounds.
    pub fn validate(&self, game: &Game) -> Result<()> {
        let all_finite = [
            self.epsilon,
            self.lambda,
            self.zeta,
            self.c_phi,
            self.h,
            self.rho_lo,
            self.rho_hi,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !all_finite {
            return Err(CoreError::InvalidParams("parameters must be finite".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(CoreError::InvalidParams(format!(
                "epsilon must lie in (0, 1), got {}",
                self.epsilon
            )));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(CoreError::InvalidParams(format!(
                "lambda must lie in [0, 1], got {}",
                self.lambda
            )));
        }
        if self.zeta <= 0.0 {
            return Err(CoreError::InvalidParams(format!(
                "zeta must be positive, got {}",
                self.zeta
            )));
        }
        if self.c_phi <= 0.0 {
            return Err(CoreError::InvalidParams(format!(
                "c_phi must be positive, got {}",
                self.c_phi
            )));
        }
        if !(self.h > 0.0 && self.h < 1.0) {
            return Err(CoreError::InvalidParams(format!(
                "h must lie in (0, 1), got {}",
                self.h
            )));
        }
        let (lo, hi) = game.payoff_bounds();
        if !(self.rho_lo < lo && hi < self.rho_hi) {
            return Err(CoreError::InvalidParams(format!(
                "aspiration bounds [{}, {}] must strictly bracket the payoff range [{lo}, {hi}]",
                self.rho_lo, self.rho_hi
            )));
        }
        Ok(())
    }
}

/// How trembles are injected into a step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TremblePolicy {
    /// Each agent trembles independently with probability λ (the full
    /// perturbed process).
    Spontaneous,
    /// Exactly one uniformly chosen agent trembles; λ is ignored (the
    /// one-tremble kernel used to estimate the pure-state chain).
    ForcedSingle,
    /// No trembles (the unperturbed process; λ treated as 0).
    None,
}

/// A point of the learning dynamics: a joint action plus one aspiration
/// level per agent, kept inside the saturation interval.
#[derive(Clone, Debug, PartialEq)]
pub struct LearnerState {
    actions: Vec<usize>,
    profile: usize,
    rho: Vec<f64>,
}

impl LearnerState {
    /// Build a state from explicit actions and aspirations; aspirations
    /// are clamped into the saturation interval.
    pub fn new(game: &Game, params: &Params, actions: Vec<usize>, rho: Vec<f64>) -> Result<Self> {
        let profile = game.index_of(&actions)?;
        if rho.len() != game.num_players() {
            return Err(CoreError::InvalidInput(format!(
                "aspiration vector has {} entries, game has {} players",
                rho.len(),
                game.num_players()
            )));
        }
        if let Some(i) = rho.iter().position(|v| !v.is_finite()) {
            return Err(CoreError::InvalidInput(format!(
                "aspiration {i} is not finite"
            )));
        }
        let rho = rho.into_iter().map(|v| sat(v, params)).collect();
        Ok(LearnerState {
            actions,
            profile,
            rho,
        })
    }

    /// The pure state at a profile: aspirations equal to the profile's
    /// payoffs (a fixed point of the unperturbed dynamics).
    pub fn pure(game: &Game, params: &Params, profile: usize) -> Self {
        let actions = game.profile_at(profile).actions().to_vec();
        let rho = game
            .utilities(profile)
            .iter()
            .map(|&u| sat(u, params))
            .collect();
        LearnerState {
            actions,
            profile,
            rho,
        }
    }

    pub fn actions(&self) -> &[usize] {
        &self.actions
    }

    pub fn joint_action(&self) -> JointAction {
        JointAction::new(self.actions.clone())
    }

    /// Mixed-radix index of the current joint action.
    pub fn profile_index(&self) -> usize {
        self.profile
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }
}

/// Keep probability: 1 when the payoff meets the aspiration, otherwise
/// decreasing linearly in the gap with floor `h`. Always in [h, 1].
pub fn phi(z: f64, params: &Params) -> f64 {
    if z >= 0.0 {
        1.0
    } else {
        (1.0 + params.c_phi * z).max(params.h)
    }
}

/// Clamp an aspiration level into the saturation interval.
pub fn sat(rho: f64, params: &Params) -> f64 {
    rho.clamp(params.rho_lo, params.rho_hi)
}

/// Advance the state by one step of the learning rule.
///
/// Per-step draw order (the reproducibility contract):
///
/// 1. Under [`TremblePolicy::ForcedSingle`] only: one uniform agent
///    index, then one uniform tremble value.
/// 2. For each agent `i` in index order:
///    - tremble indicator uniform (spontaneous and no-tremble policies
///      alike — the latter compares against probability 0);
///    - tremble value uniform on [−ζ, ζ], only when trembling;
///    - keep/switch uniform (always drawn; a satisfied agent keeps its
///      action because the draw lies in [0, 1) < φ = 1);
///    - replacement-action uniform over the other actions, only when
///      switching and the agent has at least two actions.
///
/// Aspirations update as ρ_i ← sat[ρ_i + ε(u_i − ρ_i) + r_i]; the
/// keep probability φ(u_i − ρ_i) uses the pre-update aspiration. All
/// agents update from the same pre-step profile.
pub fn step(
    game: &Game,
    params: &Params,
    policy: TremblePolicy,
    state: &mut LearnerState,
    rng: &mut impl Rng,
) {
    let n = game.num_players();
    let u = game.utilities(state.profile);
    let forced = match policy {
        TremblePolicy::ForcedSingle => {
            let agent = rng.random_range(0..n);
            let value = rng.random_range(-params.zeta..=params.zeta);
            Some((agent, value))
        }
        _ => None,
    };
    let lambda = match policy {
        TremblePolicy::Spontaneous => params.lambda,
        _ => 0.0,
    };
    for (i, &u_i) in u.iter().enumerate() {
        let r = match forced {
            Some((agent, value)) => {
                if agent == i {
                    value
                } else {
                    0.0
                }
            }
            None => {
                let indicator: f64 = rng.random();
                if indicator < lambda {
                    rng.random_range(-params.zeta..=params.zeta)
                } else {
                    0.0
                }
            }
        };
        let gap = u_i - state.rho[i];
        state.rho[i] = sat(state.rho[i] + params.epsilon * gap + r, params);
        let keep: f64 = rng.random();
        if keep >= phi(gap, params) {
            let m = game.num_actions(i);
            if m > 1 {
                let draw = rng.random_range(0..m - 1);
                let replacement = draw + usize::from(draw >= state.actions[i]);
                state.profile = game.unilateral(state.profile, i, replacement);
                state.actions[i] = replacement;
            }
        }
    }
}

/// A streaming consumer of trajectory points; sees `(t, state)` for
/// each pre-step state, `t = 0..horizon`.
pub trait Observer {
    fn observe(&mut self, t: u64, state: &LearnerState) -> Result<()>;
}

/// Derive the counter RNG for `(seed, stream)`. Distinct streams under
/// one seed are independent; stream 0 drives main trajectories, other
/// streams are assigned by the estimation and sweep layers.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Run `horizon` steps from `x0` on the RNG stream `(seed, 0)`,
/// streaming each pre-step state to the observers, and return the final
/// state. An observer error aborts the run with the step attached.
pub fn run(
    game: &Game,
    params: &Params,
    policy: TremblePolicy,
    x0: LearnerState,
    horizon: u64,
    seed: u64,
    observers: &mut [&mut dyn Observer],
) -> Result<LearnerState> {
    params.validate(game)?;
    let mut rng = stream_rng(seed, 0);
    let mut state = x0;
    for t in 0..horizon {
        for obs in observers.iter_mut() {
            obs.observe(t, &state).map_err(|e| CoreError::Observer {
                step: t,
                source: Box::new(e),
            })?;
        }
        step(game, params, policy, &mut state, &mut rng);
    }
    Ok(state)
}

/// Exact absorption certificate: the joint action, when every agent's
/// aspiration is at most its current payoff. From such a state the
/// unperturbed process never switches actions again and aspirations
/// converge geometrically to the payoffs.
pub fn absorption_check(state: &LearnerState, game: &Game) -> Option<JointAction> {
    absorption_check_with_tol(state, game, 0.0)
}

/// [`absorption_check`] with a tolerance: certifies absorption when
/// ρ_i ≤ u_i + tol for every agent. A small positive tolerance
/// compensates for the aspiration update stalling within float
/// precision of the payoff from above.
pub fn absorption_check_with_tol(
    state: &LearnerState,
    game: &Game,
    tol: f64,
) -> Option<JointAction> {
    if is_absorbed(state, game, tol) {
        Some(state.joint_action())
    } else {
        None
    }
}

/// Allocation-free absorption test used in estimation inner loops.
pub(crate) fn is_absorbed(state: &LearnerState, game: &Game, tol: f64) -> bool {
    let u = game.utilities(state.profile);
    state.rho.iter().zip(u).all(|(&r, &ui)| r <= ui + tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::stag_hunt;

    fn params() -> Params {
        Params {
            epsilon: 0.01,
            lambda: 0.001,
            zeta: 0.05,
            c_phi: 0.05,
            h: 0.01,
            rho_lo: -1.0,
            rho_hi: 5.0,
        }
    }

    #[test]
    fn phi_examples() {
        let p = params();
        assert_eq!(phi(0.0, &p), 1.0);
        assert_eq!(phi(1.0, &p), 1.0);
        // Deep dissatisfaction floors at h.
        let deep = -(1.0 - p.h) / p.c_phi - 5.0;
        assert_eq!(phi(deep, &p), p.h);
        // Moderate gap on the linear branch: 1 + 0.05·(−0.6) = 0.97.
        assert_eq!(phi(-0.6, &p), 0.97);
    }

    #[test]
    fn phi_range_and_monotonicity_coarse() {
        let p = params();
        let mut prev = 0.0;
        for k in -100..=100 {
            let z = k as f64 * 0.1;
            let v = phi(z, &p);
            assert!((p.h..=1.0).contains(&v));
            assert!(v >= prev, "phi not nondecreasing at z = {z}");
            prev = v;
        }
    }

    #[test]
    fn sat_clamps() {
        let p = params();
        assert_eq!(sat(2.0, &p), 2.0);
        assert_eq!(sat(p.rho_hi + 1.0, &p), p.rho_hi);
        assert_eq!(sat(p.rho_lo - 0.3, &p), p.rho_lo);
    }

    #[test]
    fn params_validation() {
        let g = stag_hunt();
        assert!(params().validate(&g).is_ok());
        for bad in [
            Params {
                epsilon: 0.0,
                ..params()
            },
            Params {
                epsilon: 1.0,
                ..params()
            },
            Params {
                lambda: -0.1,
                ..params()
            },
            Params {
                lambda: 1.5,
                ..params()
            },
            Params {
                zeta: 0.0,
                ..params()
            },
            Params {
                c_phi: 0.0,
                ..params()
            },
            Params { h: 0.0, ..params() },
            Params { h: 1.0, ..params() },
            // Bounds must strictly bracket payoffs [0, 4].
            Params {
                rho_lo: 0.0,
                ..params()
            },
            Params {
                rho_hi: 4.0,
                ..params()
            },
            Params {
                epsilon: f64::NAN,
                ..params()
            },
        ] {
            assert!(bad.validate(&g).is_err(), "{bad:?} should be rejected");
        }
    }

    #[test]
    fn pure_state_is_fixed_point_without_trembles() {
        let g = stag_hunt();
        let p = params();
        let bb = g.index_of(&[1, 1]).unwrap();
        let x0 = LearnerState::pure(&g, &p, bb);
        let end = run(&g, &p, TremblePolicy::None, x0.clone(), 100, 7, &mut []).unwrap();
        assert_eq!(end, x0);
    }

    #[test]
    fn satisfied_agents_relax_geometrically() {
        let g = stag_hunt();
        let p = params();
        // Aspirations strictly below the payoffs: all agents satisfied,
        // action frozen, gap shrinks by exactly (1 − ε) each step.
        let x0 = LearnerState::new(&g, &p, vec![0, 0], vec![3.0, 2.0]).unwrap();
        let gaps0 = [4.0 - 3.0, 4.0 - 2.0];
        let steps = 50u32;
        let end = run(&g, &p, TremblePolicy::None, x0, steps as u64, 11, &mut []).unwrap();
        assert_eq!(end.actions(), &[0, 0]);
        let factor = (1.0 - p.epsilon).powi(steps as i32);
        for (i, g0) in gaps0.iter().enumerate() {
            let expected = 4.0 - g0 * factor;
            assert!(
                (end.rho()[i] - expected).abs() < 1e-12,
                "agent {i}: rho = {}, expected {expected}",
                end.rho()[i]
            );
        }
    }

    #[test]
    fn single_action_agent_never_moves() {
        let g = crate::game::Game::from_table("deg", vec![1, 2], vec![0.0, 1.0, 0.0, 2.0], None)
            .unwrap();
        let p = Params {
            rho_lo: -1.0,
            rho_hi: 3.0,
            ..params()
        };
        // Agent 0 dissatisfied forever (payoff 0, aspiration near 3 at
        // the start), yet it has nowhere to go.
        let x0 = LearnerState::new(&g, &p, vec![0, 1], vec![2.9, 2.9]).unwrap();
        let mut rng = stream_rng(3, 0);
        let mut state = x0;
        for _ in 0..200 {
            step(&g, &p, TremblePolicy::Spontaneous, &mut state, &mut rng);
            assert_eq!(state.actions()[0], 0);
        }
    }

    #[test]
    fn trajectories_are_deterministic_per_seed_and_stream() {
        let g = stag_hunt();
        let p = params();
        let x0 = LearnerState::pure(&g, &p, 3);
        let a = run(
            &g,
            &p,
            TremblePolicy::Spontaneous,
            x0.clone(),
            2000,
            42,
            &mut [],
        )
        .unwrap();
        let b = run(
            &g,
            &p,
            TremblePolicy::Spontaneous,
            x0.clone(),
            2000,
            42,
            &mut [],
        )
        .unwrap();
        assert_eq!(a, b);
        let c = run(&g, &p, TremblePolicy::Spontaneous, x0, 2000, 43, &mut []).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn no_tremble_policy_matches_zero_lambda() {
        // The no-tremble policy still draws the indicator, so it
        // consumes randomness exactly like the spontaneous policy at
        // λ = 0: the trajectories must agree draw for draw.
        let g = stag_hunt();
        let p = Params {
            lambda: 0.0,
            ..params()
        };
        let x0 = LearnerState::new(&g, &p, vec![0, 1], vec![3.5, 3.5]).unwrap();
        let a = run(&g, &p, TremblePolicy::None, x0.clone(), 500, 9, &mut []).unwrap();
        let b = run(&g, &p, TremblePolicy::Spontaneous, x0, 500, 9, &mut []).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn aspirations_stay_in_bounds_under_heavy_trembling() {
        let g = stag_hunt();
        let p = Params {
            lambda: 1.0,
            zeta: 10.0,
            rho_lo: -0.5,
            rho_hi: 4.5,
            ..params()
        };
        let mut rng = stream_rng(5, 0);
        let mut state = LearnerState::pure(&g, &p, 0);
        for _ in 0..2000 {
            step(&g, &p, TremblePolicy::Spontaneous, &mut state, &mut rng);
            for &r in state.rho() {
                assert!((p.rho_lo..=p.rho_hi).contains(&r));
            }
        }
    }

    #[test]
    fn forced_single_trembles_exactly_one_agent() {
        let g = stag_hunt();
        let p = params();
        // From a pure state, one forced tremble moves exactly one
        // agent's aspiration (ε-relaxation is zero there).
        for seed in 0..20 {
            let mut rng = stream_rng(seed, 0);
            let mut state = LearnerState::pure(&g, &p, 0);
            let rho0 = state.rho().to_vec();
            step(&g, &p, TremblePolicy::ForcedSingle, &mut state, &mut rng);
            let moved = state
                .rho()
                .iter()
                .zip(&rho0)
                .filter(|(a, b)| a != b)
                .count();
            assert_eq!(moved, 1, "seed {seed}");
        }
    }

    #[test]
    fn absorption_certificate() {
        let g = stag_hunt();
        let p = params();
        let pure = LearnerState::pure(&g, &p, 0);
        assert_eq!(
            absorption_check(&pure, &g),
            Some(JointAction::new(vec![0, 0]))
        );
        let below = LearnerState::new(&g, &p, vec![0, 0], vec![3.8, 3.8]).unwrap();
        assert!(absorption_check(&below, &g).is_some());
        let above = LearnerState::new(&g, &p, vec![0, 0], vec![3.8, 4.2]).unwrap();
        assert!(absorption_check(&above, &g).is_none());
        assert!(absorption_check_with_tol(&above, &g, 0.3).is_some());
    }

    #[test]
    fn horizon_zero_returns_initial_state() {
        let g = stag_hunt();
        let p = params();
        let x0 = LearnerState::new(&g, &p, vec![0, 1], vec![1.0, 1.0]).unwrap();
        let end = run(
            &g,
            &p,
            TremblePolicy::Spontaneous,
            x0.clone(),
            0,
            1,
            &mut [],
        )
        .unwrap();
        assert_eq!(end, x0);
    }

    #[test]
    fn observers_see_prestep_states_in_order() {
        struct Collect(Vec<(u64, usize)>);
        impl Observer for Collect {
            fn observe(&mut self, t: u64, state: &LearnerState) -> Result<()> {
                self.0.push((t, state.profile_index()));
                Ok(())
            }
        }
        let g = stag_hunt();
        let p = params();
        let x0 = LearnerState::pure(&g, &p, 3);
        let mut collect = Collect(Vec::new());
        run(&g, &p, TremblePolicy::None, x0, 5, 1, &mut [&mut collect]).unwrap();
        assert_eq!(collect.0, vec![(0, 3), (1, 3), (2, 3), (3, 3), (4, 3)]);
    }

    #[test]
    fn observer_errors_carry_the_step() {
        struct FailAt(u64);
        impl Observer for FailAt {
            fn observe(&mut self, t: u64, _: &LearnerState) -> Result<()> {
                if t == self.0 {
                    Err(CoreError::InvalidInput("boom".into()))
                } else {
                    Ok(())
                }
            }
        }
        let g = stag_hunt();
        let p = params();
        let x0 = LearnerState::pure(&g, &p, 0);
        let mut failer = FailAt(3);
        let err = run(&g, &p, TremblePolicy::None, x0, 10, 1, &mut [&mut failer]).unwrap_err();
        match err {
            CoreError::Observer { step, .. } => assert_eq!(step, 3),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn state_constructor_validates_and_clamps() {
        let g = stag_hunt();
        let p = params();
        assert!(LearnerState::new(&g, &p, vec![0, 2], vec![0.0, 0.0]).is_err());
        assert!(LearnerState::new(&g, &p, vec![0, 0], vec![0.0]).is_err());
        assert!(LearnerState::new(&g, &p, vec![0, 0], vec![f64::NAN, 0.0]).is_err());
        let s = LearnerState::new(&g, &p, vec![0, 0], vec![100.0, -100.0]).unwrap();
        assert_eq!(s.rho(), &[p.rho_hi, p.rho_lo]);
    }
}
