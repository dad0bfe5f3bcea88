//! Solvers for the two-party policy competition game.
//!
//! Two parties propose policy vectors `z_A, z_B` in the unit ball of
//! `[-1,1]^k`. Voters' preference vectors aggregate into `Q_A`, `Q_B` and
//! `Q = Q_A + Q_B`; party A wins with probability
//! `1/2 + (z_A - z_B)^T Q / 8`, and each party maximizes the expected
//! utility of its own supporters.
//!
//! Modules:
//! - [`model`]: instances, policies, payoffs, gradients and the polar
//!   reduction onto `span{Q_A, Q_B}`.
//! - [`closed_form`]: exact equilibria for `k = 1`.
//! - [`dynamics`]: projected gradient (and extragradient) ascent with grid
//!   certification of approximate equilibria.
//! - [`grid`]: grid search with ternary best responses that returns a
//!   certified ε-equilibrium.
//! - [`monotonicity`]: the reduced two-variable pseudo-gradient and
//!   monotonicity probes.
//! - [`electorate`]: Monte-Carlo elections relating utility difference to
//!   winning frequency.
//! - [`io`]: CSV and JSON loaders for preference data and instances.

pub mod closed_form;
pub mod dynamics;
pub mod electorate;
pub mod error;
pub mod grid;
pub mod io;
pub mod linalg;
pub mod model;
pub mod monotonicity;

pub use error::{GameError, Result};
pub use model::{
    grad_payoff, hessian_entry, is_consensus_reachable, is_egoistic, payoff, win_prob,
    GameInstance, Party, Policy, PreferenceSet, Profile,
};

/// Tolerance scales shared across the crate.
pub mod tol {
    /// Exact-algebra checks: orthogonality, norms, normalization.
    pub const GEOMETRY: f64 = 1e-12;
    /// Trigonometric round trips.
    pub const ANGLE: f64 = 1e-9;
    /// Finite-difference derivative checks.
    pub const DERIVATIVE: f64 = 1e-6;
}

/// Base seed used when none is given.
pub const DEFAULT_SEED: u64 = 42;
