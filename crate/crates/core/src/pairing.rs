//! Pairing `(X, Du)` between a bounded vector field and the differential of a
//! node function, its density θ with respect to the variation measure, the
//! Gauss–Green formula, and the coarea structure of the pairing.
//!
//! On a finite space the pairing is the node measure with masses
//! `ν(x) · du(X)(x)`; it is absolutely continuous with respect to the
//! variation measure `ν(x) |du|_*(x)` with density bounded by `‖X‖_∞`.

use crate::space::{DiscreteSpace, EdgeField, NodeFunction, NodeMeasure};

/// The pairing measure and its density θ on the support of the variation
/// measure; `theta[x]` is `None` where `|du|_*(x) = 0` (the variation measure
/// has no mass there, so the density is undefined, not zero).
#[derive(Debug, Clone)]
pub struct PairingResult {
    pub measure: NodeMeasure,
    pub theta: Vec<Option<f64>>,
}

/// `(X, Du)` as a node measure with density θ.
pub fn pairing(space: &DiscreteSpace, field: &EdgeField, u: &NodeFunction) -> PairingResult {
    let du = space.differential(u);
    let point = space.duality(&du, field);
    let var = space.cotangent_norm(&du, 1.0);
    let masses: Vec<f64> =
        point.values.iter().enumerate().map(|(x, v)| space.nu(x) * v).collect();
    let theta = point
        .values
        .iter()
        .zip(&var.values)
        .map(|(p, v)| if *v > 0.0 { Some(p / v) } else { None })
        .collect();
    PairingResult { measure: NodeMeasure { masses }, theta }
}

/// `|∫ u div X dν + ∫ (X, Du)|` — an exact identity in the discrete model,
/// so this is roundoff-sized for every `(u, X)`.
pub fn gauss_green_residual(space: &DiscreteSpace, field: &EdgeField, u: &NodeFunction) -> f64 {
    let div = space.divergence(field);
    let lhs = space.inner(u, &div);
    let rhs = pairing(space, field, u).measure.total();
    (lhs + rhs).abs()
}

/// Sorted distinct values of `u`.
fn levels(u: &NodeFunction) -> Vec<f64> {
    let mut v = u.values.clone();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v.dedup();
    v
}

fn indicator(mask: &[bool]) -> NodeFunction {
    NodeFunction::new(mask.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect())
}

/// Both sides of the pairing coarea formula on a node subset `B`:
/// `Σ_B (X, Du)` versus `Σ_k [Σ_B (X, Dχ_{u > t_k})] Δt_k` over the sorted
/// distinct levels. The two agree exactly because the pairing is linear in
/// `du` and each edge differential decomposes exactly over the level stack.
pub fn pairing_coarea(
    space: &DiscreteSpace,
    field: &EdgeField,
    u: &NodeFunction,
    subset: &[bool],
) -> (f64, f64) {
    let lhs = pairing(space, field, u).measure.total_on(subset);
    let ts = levels(u);
    let mut rhs = 0.0;
    for k in 0..ts.len().saturating_sub(1) {
        let mask = space.superlevel_set(u, ts[k]);
        let chi = indicator(&mask);
        let contribution = pairing(space, field, &chi).measure.total_on(subset);
        rhs += contribution * (ts[k + 1] - ts[k]);
    }
    (lhs, rhs)
}

/// Total-variation coarea: `TV(u)` versus the level sum
/// `Σ_k perimeter({u > t_k}) Δt_k`.
pub fn tv_coarea(space: &DiscreteSpace, u: &NodeFunction) -> (f64, f64) {
    let lhs = space.total_variation(u);
    let ts = levels(u);
    let mut rhs = 0.0;
    for k in 0..ts.len().saturating_sub(1) {
        let mask = space.superlevel_set(u, ts[k]);
        rhs += space.perimeter(&mask) * (ts[k + 1] - ts[k]);
    }
    (lhs, rhs)
}

/// Max over nodes (where both densities exist) of
/// `|θ(X, Du, x) - θ(X, Dχ_{u > t}, x)|`. Exact (zero) for two-valued `u`
/// and generic `t`; for general discrete data a node can mix edges crossing
/// other levels, so the discrepancy is reported rather than asserted.
pub fn theta_levelset_identity(
    space: &DiscreteSpace,
    field: &EdgeField,
    u: &NodeFunction,
    t: f64,
) -> f64 {
    let full = pairing(space, field, u);
    let mask = space.superlevel_set(u, t);
    let cut = pairing(space, field, &indicator(&mask));
    full.theta
        .iter()
        .zip(&cut.theta)
        .filter_map(|(a, b)| match (a, b) {
            (Some(x), Some(y)) => Some((x - y).abs()),
            _ => None,
        })
        .fold(0.0, f64::max)
}

/// Max over nodes with `|du|_* > 0` of `|θ(X, D(T∘u), x) - θ(X, Du, x)|` for a
/// strictly increasing reparametrization `T`. Zero whenever `T` is affine, and
/// for arbitrary strictly increasing `T` on two-valued `u`.
pub fn theta_monotone_invariance<T: Fn(f64) -> f64>(
    space: &DiscreteSpace,
    field: &EdgeField,
    u: &NodeFunction,
    map: T,
) -> f64 {
    let base = pairing(space, field, u);
    let mapped_u = NodeFunction::new(u.values.iter().map(|&v| map(v)).collect());
    let mapped = pairing(space, field, &mapped_u);
    base.theta
        .iter()
        .zip(&mapped.theta)
        .filter_map(|(a, b)| match (a, b) {
            (Some(x), Some(y)) => Some((x - y).abs()),
            _ => None,
        })
        .fold(0.0, f64::max)
}

/// Strictly increasing piecewise-linear map through given breakpoints,
/// extended affinely beyond them.
#[derive(Debug, Clone)]
pub struct PiecewiseLinearMap {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl PiecewiseLinearMap {
    /// Breakpoints must be strictly increasing in both coordinates, with at
    /// least two of them.
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> crate::Result<Self> {
        if xs.len() != ys.len() || xs.len() < 2 {
            return Err(crate::Error::Precondition("need matching breakpoint lists, length >= 2".into()));
        }
        let inc = |v: &[f64]| v.windows(2).all(|w| w[1] > w[0]);
        if !inc(&xs) || !inc(&ys) {
            return Err(crate::Error::Precondition("breakpoints must be strictly increasing".into()));
        }
        Ok(Self { xs, ys })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        let seg = if x <= self.xs[0] {
            0
        } else if x >= self.xs[n - 1] {
            n - 2
        } else {
            self.xs.partition_point(|&b| b <= x) - 1
        };
        let slope = (self.ys[seg + 1] - self.ys[seg]) / (self.xs[seg + 1] - self.xs[seg]);
        self.ys[seg] + slope * (x - self.xs[seg])
    }
}
