//! Cheeger energies, resolvent primal/dual objectives, and subgradient
//! certificates.
//!
//! A pair `(u, v)` belongs to the subdifferential of `Ch_p` exactly when some
//! vector field `X` satisfies
//!
//! 1. `-div X = v`,
//! 2. `|X|^q <= |du|_*^p` pointwise (for p = 1: `|X| <= 1`),
//! 3. `∫ du(X) dν = ∫ |du|_*^p dν` (for p = 1: `= TV(u)`).
//!
//! [`verify_certificate`] measures the three residuals; a certificate accepts
//! when all of them fall below the scale-normalized tolerance.

use crate::solver::{ResolventSolution, ResolventSolver, SolverOptions};
use crate::space::{DiscreteSpace, EdgeField, NodeFunction};
use crate::{conjugate, Error, Result};
use serde::{Deserialize, Serialize};

/// `Ch_p(u)`: total variation for p = 1, `(1/p) ∫ |du|_*^p dν` for p > 1.
pub fn energy(space: &DiscreteSpace, u: &NodeFunction, p: f64) -> f64 {
    assert!(p >= 1.0 && p.is_finite(), "energy exponent p = {p}");
    if p == 1.0 {
        space.total_variation(u)
    } else {
        let du = space.differential(u);
        space.cotangent_energy_integral(&du, p) / p
    }
}

/// `Ch_p(u) + ‖u - g‖²_{L²(ν)} / (2 tau)`, the minimizing-movement objective.
pub fn resolvent_objective(
    space: &DiscreteSpace,
    u: &NodeFunction,
    g: &NodeFunction,
    p: f64,
    tau: f64,
) -> f64 {
    assert!(tau > 0.0);
    let diff = u.sub(g);
    energy(space, u, p) + space.inner(&diff, &diff) / (2.0 * tau)
}

/// Value of the Fenchel–Rockafellar dual of the resolvent problem.
#[derive(Debug, Clone, Copy)]
pub struct DualObjective {
    pub value: f64,
    /// For p = 1: whether `|X| <= 1` holds at every node. Infeasible fields get
    /// value `-∞`. Always true for p > 1.
    pub feasible: bool,
}

/// Dual objective, normalized so that `dual <= primal` with equality at the
/// optimum: `-(1/q) ∫ |X|^q dν - ∫ (g div X + tau (div X)²/2) dν`
/// (the first term is dropped for p = 1).
pub fn dual_objective(
    space: &DiscreteSpace,
    field: &EdgeField,
    g: &NodeFunction,
    p: f64,
    tau: f64,
) -> DualObjective {
    assert!(p >= 1.0 && p.is_finite());
    assert!(tau > 0.0);
    let div = space.divergence(field);
    // (1/(2tau)) [∫(tau div X + g)² - ∫g²] expanded; avoids cancellation for small tau.
    let quad: f64 = (0..space.node_count())
        .map(|x| space.nu(x) * (div.values[x] * g.values[x] + tau * div.values[x] * div.values[x] / 2.0))
        .sum();
    if p == 1.0 {
        let sup = space.sup_tangent_norm(field);
        if sup > 1.0 + 1e-12 {
            return DualObjective { value: f64::NEG_INFINITY, feasible: false };
        }
        DualObjective { value: -quad, feasible: true }
    } else {
        let q = conjugate(p);
        let estar = space.tangent_energy_integral(field, q) / q;
        DualObjective { value: -estar - quad, feasible: true }
    }
}

/// Residual report for the subgradient conditions of `(u, v)` with witness `X`.
///
/// `tol` is the effective acceptance tolerance: the input tolerance times
/// `max(1, ‖u‖_∞, ‖v‖_∞)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubgradientCertificate {
    pub accepts: bool,
    pub residual_div: f64,
    pub residual_holder: f64,
    pub residual_pairing: f64,
    pub p: f64,
    pub tol: f64,
}

/// Default absolute residual tolerance (before scale normalization). The
/// discretization is exact, so only solver error remains.
pub const DEFAULT_CERTIFICATE_TOL: f64 = 1e-8;

/// Measure the three subgradient residuals of `(u, v, X)` for `Ch_p`.
pub fn verify_certificate(
    space: &DiscreteSpace,
    u: &NodeFunction,
    v: &NodeFunction,
    field: &EdgeField,
    p: f64,
    tol: f64,
) -> Result<SubgradientCertificate> {
    let n = space.node_count();
    if u.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: u.len() });
    }
    if v.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: v.len() });
    }
    if field.len() != space.field_len() {
        return Err(Error::DimensionMismatch { expected: space.field_len(), got: field.len() });
    }
    let du = space.differential(u);
    let div = space.divergence(field);
    let residual_div = (0..n).map(|x| (v.values[x] + div.values[x]).abs()).fold(0.0, f64::max);
    let (residual_holder, residual_pairing) = if p == 1.0 {
        let sup = space.tangent_norm(field, f64::INFINITY);
        let holder = sup.values.iter().map(|s| (s - 1.0).max(0.0)).fold(0.0, f64::max);
        let pairing = (space.integral_duality(&du, field) - space.total_variation(u)).abs();
        (holder, pairing)
    } else {
        let q = conjugate(p);
        let xq = space.tangent_norm_pow(field, q);
        let dup = space.cotangent_norm_pow(&du, p);
        let holder = xq
            .values
            .iter()
            .zip(&dup.values)
            .map(|(x, d)| (x - d).max(0.0))
            .fold(0.0, f64::max);
        let pairing =
            (space.integral_duality(&du, field) - space.cotangent_energy_integral(&du, p)).abs();
        (holder, pairing)
    };
    let scale = 1.0_f64.max(u.linf()).max(v.linf());
    let tol_eff = tol * scale;
    Ok(SubgradientCertificate {
        accepts: residual_div <= tol_eff && residual_holder <= tol_eff && residual_pairing <= tol_eff,
        residual_div,
        residual_holder,
        residual_pairing,
        p,
        tol: tol_eff,
    })
}

/// Outcome of a subgradient membership test `v ∈ ∂Ch_p(u)`.
#[derive(Debug, Clone)]
pub struct MembershipCheck {
    pub member: bool,
    /// `‖u⁺ - u‖_{L²(ν)}` where `u⁺` resolves `g = u + v` with unit step.
    pub distance: f64,
    pub solution: ResolventSolution,
}

/// Test `v ∈ ∂Ch_p(u)` via its resolvent characterization: `v ∈ ∂Ch_p(u)` iff
/// `u` minimizes `Ch_p(w) + ‖w - (u + v)‖²/2`.
pub fn subgradient_membership(
    space: &DiscreteSpace,
    u: &NodeFunction,
    v: &NodeFunction,
    p: f64,
    tol: f64,
    opts: &SolverOptions,
) -> Result<MembershipCheck> {
    let g = u.add_scaled(1.0, v);
    let solver = ResolventSolver::new(space, p, 1.0, opts.clone())?;
    let solution = solver.step(&g, None)?;
    let distance = space.l2_norm(&solution.u_next.sub(u));
    Ok(MembershipCheck { member: distance <= tol, distance, solution })
}
