//! Gradient flows of p-Cheeger energies on finite discrete metric measure spaces.
//!
//! This crate implements the p-Laplacian evolution equation (1 < p < ∞) and the
//! total variation flow (p = 1) as L² gradient flows of the p-Cheeger energy
//!
//! ```text
//! Ch_p(u) = (1/p) ∫ |du|_*^p dν        (p > 1)
//! Ch_1(u) = TV(u) = ∫ |du|_* dν        (p = 1)
//! ```
//!
//! on two backends: finite weighted graphs and Finsler grids (weighted ℓ^α
//! Minkowski norms on 1-D/2-D lattices). The backends carry an exact first-order
//! differential calculus — differential, pointwise cotangent/tangent norms,
//! duality, divergence — in which integration by parts, Hölder saturation, and
//! the coarea formula hold as finite algebraic identities, not up to O(h).
//!
//! The flow is integrated by minimizing movements (implicit Euler). Each step
//! solves the resolvent problem `min Ch_p(u) + ‖u − g‖²/(2τ)` with a first-order
//! primal–dual method and returns a dual vector field `X` certifying optimality:
//!
//! - `−div X = v` (exact by construction),
//! - `|X|^q ≤ |du|_*^p` pointwise (`‖X‖_∞ ≤ 1` for p = 1),
//! - pairing saturation `∫ du(X) dν = ∫ |du|_*^p dν` (`= TV(u)` for p = 1).
//!
//! Module map:
//!
//! | module | contents |
//! |--------|----------|
//! | [`space`] | spaces, node functions, edge fields, differential calculus |
//! | [`functionals`] | Cheeger energies, primal/dual objectives, certificates |
//! | [`pairing`] | vector-field/BV pairing, Gauss–Green, coarea, θ density |
//! | [`flow`] | implicit Euler trajectories and their structural checks |
//! | [`asymptotics`] | Rayleigh quotient λ₁, extinction time, decay bounds |
//! | [`generate`] | deterministic instance generators |
//!
//! The `parallel` feature (on by default) runs independent sweeps — certificate
//! batches, λ₁ restarts, trajectory pairs — on a rayon pool; disabling it gives
//! a bit-identical sequential fallback.

pub mod asymptotics;
pub mod flow;
pub mod functionals;
pub mod generate;
pub mod pairing;
pub mod par;
pub mod rng;
pub mod solver;
pub mod space;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Error, Debug, Clone)]
pub enum Error {
    /// A space failed its construction invariants.
    #[error("invalid space: {0}")]
    InvalidSpace(String),
    /// A node function or edge field does not match the space it is used on.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    /// Malformed input file (space JSON, PGM, CSV).
    #[error("parse error: {0}")]
    Parse(String),
    /// Inner solver failed to reach the requested duality gap.
    #[error("solver did not converge: best relative gap {best_gap:.3e} after {iterations} iterations")]
    NonConvergence { best_gap: f64, iterations: usize },
    /// An operation was invoked with an exponent outside its domain.
    #[error("invalid exponent: {0}")]
    InvalidExponent(String),
    /// An operation with a precondition was invoked on data that violates it.
    #[error("precondition failed: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Conjugate exponent: 1/p + 1/q = 1, with `conjugate(1) = ∞`.
pub fn conjugate(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}
