//! Core library for simulating aspiration-based learning dynamics on
//! finite strategic-form games and analyzing the induced Markov chain
//! over pure joint actions.
//!
//! The crate is organized in layers:
//!
//! - [`game`]: payoff storage, joint-action indexing, best-reply and
//!   pure-Nash queries, plus structural verifiers ([`game::verify`])
//!   for coordination structure, symmetry, and payoff constants.
//! - [`games`]: concrete game families — a reference 2×2 coordination
//!   game, common-pool allocation games, and network-formation games.
//! - [`learning`]: the satisficing win-stay/lose-shift dynamic itself,
//!   with deterministic seeded trajectories and trajectory observers.
//! - [`markov`]: the finite-state chain over pure joint actions —
//!   transition-matrix estimation, invariant distributions (direct
//!   linear solve and spanning-tree formula), and fairness summaries.
//! - [`metrics`]: occupancy and domain-specific trajectory statistics.

pub mod error;
pub mod game;
pub mod games;
pub mod learning;
pub mod markov;
pub mod metrics;

pub use error::{CoreError, Result};
pub use game::{DesirableSet, Game, JointAction};
pub use learning::{Observer, Params, TremblePolicy};
