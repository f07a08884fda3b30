//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by game construction, verification, simulation, and
/// chain analysis.
#[derive(Debug, Error)]
pub enum CoreError {
    /// A game definition violates a structural invariant (sizes, finiteness,
    /// ordering constraints of a game family).
    #[error("invalid game: {0}")]
    InvalidGame(String),

    /// A caller-supplied argument is out of range or inconsistent with the
    /// game it refers to.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Learning parameters are outside their admissible ranges, or the
    /// aspiration saturation bounds fail to bracket the game's payoffs.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// A structured text document (game table, adjacency list) could not be
    /// parsed.
    #[error("parse error: {0}")]
    Parse(String),

    /// A structural assumption needed by an operation does not hold for the
    /// given game (e.g. a better-reply walk got stuck, or a layer
    /// decomposition cannot reach some profile).
    #[error("structural error: {0}")]
    Structure(String),

    /// An enumeration or storage budget was exceeded. The operation degrades
    /// loudly instead of silently truncating.
    #[error("size budget exceeded: {0}")]
    Budget(String),

    /// Monte-Carlo estimation failed its own quality gate (too many
    /// unresolved samples in some row).
    #[error("estimation failed: {0}")]
    Estimation(String),

    /// A trajectory observer returned an error; the run is aborted with the
    /// step at which it happened.
    #[error("observer failed at step {step}: {source}")]
    Observer {
        step: u64,
        #[source]
        source: Box<CoreError>,
    },
}

pub type Result<T> = std::result::Result<T, CoreError>;
