//! Discrete metric measure spaces and their first-order differential calculus.
//!
//! Two backends implement the same operation set:
//!
//! - **graph**: antisymmetric functions on weighted edges are the
//!   cotangent/tangent degrees of freedom; the pointwise cotangent norm at a
//!   node is the ν-normalized weighted ℓ^p mean over incident edges,
//!   `|ω|_*(x) = ((1/2ν(x)) Σ_y w(x,y) |ω(x,y)|^p)^{1/p}`.
//! - **grid**: one covector/vector per node (forward-difference convention);
//!   pointwise norms are the Finsler norm `F(x, ·)` and its dual `F*(x, ·)`.
//!
//! With these choices integration by parts, pointwise Hölder with exact
//! saturation by the p-gradient, and the coarea formula for the graph total
//! variation hold as finite algebraic identities.

pub mod graph;
pub mod grid;
pub mod io;
pub mod norm;

pub use graph::WeightedGraphSpace;
pub use grid::{FinslerGridSpace, NormField};
pub use norm::MinkowskiNorm;

use crate::{Error, Result};

/// Real value per node. Values are finite by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeFunction {
    pub values: Vec<f64>,
}

impl NodeFunction {
    pub fn new(values: Vec<f64>) -> Self {
        assert!(values.iter().all(|v| v.is_finite()), "node function with non-finite value");
        Self { values }
    }

    pub fn zeros(n: usize) -> Self {
        Self { values: vec![0.0; n] }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Self::new(vec![c; n])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self::new(self.values.iter().map(|v| c * v).collect())
    }

    /// self + c * other
    pub fn add_scaled(&self, c: f64, other: &Self) -> Self {
        assert_eq!(self.len(), other.len());
        Self::new(self.values.iter().zip(&other.values).map(|(a, b)| a + c * b).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add_scaled(-1.0, other)
    }

    pub fn linf(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Antisymmetric edge function (graph) or per-node vector (grid).
///
/// Graph layout: one value per undirected edge `(a, b)`, `a < b`, holding
/// `X(a, b)`; antisymmetry is structural. Grid layout: `dim` values per node,
/// zero on the outflow boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeField {
    pub values: Vec<f64>,
}

impl EdgeField {
    pub fn zeros(n: usize) -> Self {
        Self { values: vec![0.0; n] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { values: self.values.iter().map(|v| c * v).collect() }
    }

    pub fn add_scaled(&self, c: f64, other: &Self) -> Self {
        assert_eq!(self.len(), other.len());
        Self { values: self.values.iter().zip(&other.values).map(|(a, b)| a + c * b).collect() }
    }
}

/// Signed node measure: already integrated against ν (masses, not densities).
#[derive(Debug, Clone, PartialEq)]
pub struct NodeMeasure {
    pub masses: Vec<f64>,
}

impl NodeMeasure {
    pub fn total(&self) -> f64 {
        self.masses.iter().sum()
    }

    /// Total mass of the restriction to a node subset.
    pub fn total_on(&self, subset: &[bool]) -> f64 {
        self.masses.iter().zip(subset).filter(|(_, &m)| m).map(|(v, _)| v).sum()
    }
}

/// A finite discrete metric measure space: weighted graph or Finsler grid.
#[derive(Debug, Clone)]
pub enum DiscreteSpace {
    Graph(WeightedGraphSpace),
    Grid(FinslerGridSpace),
}

impl From<WeightedGraphSpace> for DiscreteSpace {
    fn from(g: WeightedGraphSpace) -> Self {
        DiscreteSpace::Graph(g)
    }
}

impl From<FinslerGridSpace> for DiscreteSpace {
    fn from(g: FinslerGridSpace) -> Self {
        DiscreteSpace::Grid(g)
    }
}

impl DiscreteSpace {
    pub fn node_count(&self) -> usize {
        match self {
            DiscreteSpace::Graph(g) => g.node_count(),
            DiscreteSpace::Grid(g) => g.node_count(),
        }
    }

    /// Length of the value vector of an [`EdgeField`] on this space.
    pub fn field_len(&self) -> usize {
        match self {
            DiscreteSpace::Graph(g) => g.edge_count(),
            DiscreteSpace::Grid(g) => g.node_count() * g.dim(),
        }
    }

    pub fn nu(&self, x: usize) -> f64 {
        match self {
            DiscreteSpace::Graph(g) => g.nu(x),
            DiscreteSpace::Grid(g) => g.nu(x),
        }
    }

    pub fn nu_slice(&self) -> &[f64] {
        match self {
            DiscreteSpace::Graph(g) => g.nu_slice(),
            DiscreteSpace::Grid(g) => g.nu_slice(),
        }
    }

    pub fn total_measure(&self) -> f64 {
        self.nu_slice().iter().sum()
    }

    pub fn zero_field(&self) -> EdgeField {
        EdgeField::zeros(self.field_len())
    }

    /// Wrap raw values as a field, validating length and (on grids) zeroing
    /// boundary components so the forward-difference convention holds.
    pub fn field_from_values(&self, values: Vec<f64>) -> Result<EdgeField> {
        if values.len() != self.field_len() {
            return Err(Error::DimensionMismatch { expected: self.field_len(), got: values.len() });
        }
        let mut field = EdgeField { values };
        if let DiscreteSpace::Grid(g) = self {
            for idx in 0..g.node_count() {
                for axis in 0..g.dim() {
                    if !g.interior(idx, axis) {
                        field.values[idx * g.dim() + axis] = 0.0;
                    }
                }
            }
        }
        Ok(field)
    }

    fn check_nodes(&self, u: &NodeFunction) {
        assert_eq!(u.len(), self.node_count(), "node function does not match space");
    }

    fn check_field(&self, x: &EdgeField) {
        assert_eq!(x.len(), self.field_len(), "edge field does not match space");
    }

    /// Differential: `du(x,y) = u(y) - u(x)` on graph edges; forward difference
    /// over `h` per axis on grids (zero on the outflow boundary).
    pub fn differential(&self, u: &NodeFunction) -> EdgeField {
        self.check_nodes(u);
        match self {
            DiscreteSpace::Graph(g) => EdgeField {
                values: g.edges().iter().map(|e| u.values[e.b] - u.values[e.a]).collect(),
            },
            DiscreteSpace::Grid(g) => {
                let d = g.dim();
                let mut values = vec![0.0; g.node_count() * d];
                for idx in 0..g.node_count() {
                    for axis in 0..d {
                        if let Some(nbr) = g.forward(idx, axis) {
                            values[idx * d + axis] = (u.values[nbr] - u.values[idx]) / g.h();
                        }
                    }
                }
                EdgeField { values }
            }
        }
    }

    /// Pointwise cotangent norm `|ω|_*` for `p ∈ [1, ∞)`. On the grid backend
    /// the norm is the Finsler dual norm `F*(x, ω(x))` for every `p`.
    pub fn cotangent_norm(&self, omega: &EdgeField, p: f64) -> NodeFunction {
        assert!(p >= 1.0 && p.is_finite(), "cotangent exponent p = {p}");
        self.check_field(omega);
        match self {
            DiscreteSpace::Graph(_) => {
                NodeFunction::new(self.cotangent_norm_pow(omega, p).values.iter().map(|v| v.powf(1.0 / p)).collect())
            }
            DiscreteSpace::Grid(g) => NodeFunction::new(
                (0..g.node_count())
                    .map(|i| g.norm_at(i).dual_eval(&omega.values[i * g.dim()..(i + 1) * g.dim()]))
                    .collect(),
            ),
        }
    }

    /// `|ω|_*^p` per node, computed without the p-th root.
    pub fn cotangent_norm_pow(&self, omega: &EdgeField, p: f64) -> NodeFunction {
        assert!(p >= 1.0 && p.is_finite());
        self.check_field(omega);
        match self {
            DiscreteSpace::Graph(g) => NodeFunction::new(
                (0..g.node_count())
                    .map(|x| {
                        let s: f64 = g
                            .incident(x)
                            .iter()
                            .map(|inc| {
                                let w = g.edges()[inc.edge].w;
                                let v = omega.values[inc.edge].abs();
                                if p == 1.0 {
                                    w * v
                                } else if p == 2.0 {
                                    w * v * v
                                } else {
                                    w * v.powf(p)
                                }
                            })
                            .sum();
                        s / (2.0 * g.nu(x))
                    })
                    .collect(),
            ),
            DiscreteSpace::Grid(g) => NodeFunction::new(
                (0..g.node_count())
                    .map(|i| g.norm_at(i).dual_eval(&omega.values[i * g.dim()..(i + 1) * g.dim()]).powf(p))
                    .collect(),
            ),
        }
    }

    /// Pointwise tangent norm `|X|` for `q ∈ (1, ∞]`. For `q = ∞` on graphs this
    /// is the maximum of `|X(x,y)|` over incident edges; on grids it is
    /// `F(x, X(x))` for every `q`.
    pub fn tangent_norm(&self, field: &EdgeField, q: f64) -> NodeFunction {
        assert!(q > 1.0, "tangent exponent q = {q}");
        self.check_field(field);
        match self {
            DiscreteSpace::Graph(g) => {
                if q.is_infinite() {
                    NodeFunction::new(
                        (0..g.node_count())
                            .map(|x| {
                                g.incident(x)
                                    .iter()
                                    .map(|inc| field.values[inc.edge].abs())
                                    .fold(0.0, f64::max)
                            })
                            .collect(),
                    )
                } else {
                    NodeFunction::new(
                        self.tangent_norm_pow(field, q).values.iter().map(|v| v.powf(1.0 / q)).collect(),
                    )
                }
            }
            DiscreteSpace::Grid(g) => NodeFunction::new(
                (0..g.node_count())
                    .map(|i| g.norm_at(i).eval(&field.values[i * g.dim()..(i + 1) * g.dim()]))
                    .collect(),
            ),
        }
    }

    /// `|X|^q` per node for finite `q`.
    pub fn tangent_norm_pow(&self, field: &EdgeField, q: f64) -> NodeFunction {
        assert!(q > 1.0 && q.is_finite());
        self.check_field(field);
        match self {
            DiscreteSpace::Graph(g) => NodeFunction::new(
                (0..g.node_count())
                    .map(|x| {
                        let s: f64 = g
                            .incident(x)
                            .iter()
                            .map(|inc| {
                                let w = g.edges()[inc.edge].w;
                                let v = field.values[inc.edge].abs();
                                if q == 2.0 {
                                    w * v * v
                                } else {
                                    w * v.powf(q)
                                }
                            })
                            .sum();
                        s / (2.0 * g.nu(x))
                    })
                    .collect(),
            ),
            DiscreteSpace::Grid(g) => NodeFunction::new(
                (0..g.node_count())
                    .map(|i| g.norm_at(i).eval(&field.values[i * g.dim()..(i + 1) * g.dim()]).powf(q))
                    .collect(),
            ),
        }
    }

    /// Pointwise duality `ω(X)`: `(1/2ν(x)) Σ_y w(x,y) ω(x,y) X(x,y)` on graphs,
    /// the Euclidean pairing `ω(x)·X(x)` on grids.
    pub fn duality(&self, omega: &EdgeField, field: &EdgeField) -> NodeFunction {
        self.check_field(omega);
        self.check_field(field);
        match self {
            DiscreteSpace::Graph(g) => NodeFunction::new(
                (0..g.node_count())
                    .map(|x| {
                        let s: f64 = g
                            .incident(x)
                            .iter()
                            // sign^2 = 1: the product of two antisymmetric values
                            // is orientation-free.
                            .map(|inc| g.edges()[inc.edge].w * omega.values[inc.edge] * field.values[inc.edge])
                            .sum();
                        s / (2.0 * g.nu(x))
                    })
                    .collect(),
            ),
            DiscreteSpace::Grid(g) => {
                let d = g.dim();
                NodeFunction::new(
                    (0..g.node_count())
                        .map(|i| {
                            (0..d).map(|k| omega.values[i * d + k] * field.values[i * d + k]).sum()
                        })
                        .collect(),
                )
            }
        }
    }

    /// Divergence, the negative adjoint of [`Self::differential`] with respect
    /// to the ν-weighted inner products:
    /// `Σ_x ν(x) g(x) div X(x) = -Σ_x ν(x) dg(X)(x)` for every `g`.
    pub fn divergence(&self, field: &EdgeField) -> NodeFunction {
        self.check_field(field);
        match self {
            DiscreteSpace::Graph(g) => NodeFunction::new(
                (0..g.node_count())
                    .map(|x| {
                        let s: f64 = g
                            .incident(x)
                            .iter()
                            .map(|inc| g.edges()[inc.edge].w * inc.sign * field.values[inc.edge])
                            .sum();
                        s / g.nu(x)
                    })
                    .collect(),
            ),
            DiscreteSpace::Grid(g) => {
                let d = g.dim();
                NodeFunction::new(
                    (0..g.node_count())
                        .map(|idx| {
                            let mut s = 0.0;
                            for axis in 0..d {
                                if g.interior(idx, axis) {
                                    s += g.nu(idx) * field.values[idx * d + axis];
                                }
                                if let Some(back) = g.backward(idx, axis) {
                                    s -= g.nu(back) * field.values[back * d + axis];
                                }
                            }
                            s / (g.nu(idx) * g.h())
                        })
                        .collect(),
                )
            }
        }
    }

    /// The p-gradient of `u` given its differential: the tangent field with
    /// `du(X) = |X|^q = |du|_*^p` pointwise. Graph: `X_e = |du_e|^{p-2} du_e`
    /// (sign for p = 1, zero where `du_e = 0`). Grid: the dual-saturating
    /// direction scaled by `F*(du)^{p-1}`.
    pub fn p_gradient(&self, du: &EdgeField, p: f64) -> EdgeField {
        assert!(p >= 1.0 && p.is_finite());
        self.check_field(du);
        match self {
            DiscreteSpace::Graph(_) => EdgeField {
                values: du
                    .values
                    .iter()
                    .map(|&t| {
                        if t == 0.0 {
                            0.0
                        } else if p == 1.0 {
                            t.signum()
                        } else if p == 2.0 {
                            t
                        } else {
                            t.abs().powf(p - 2.0) * t
                        }
                    })
                    .collect(),
            },
            DiscreteSpace::Grid(g) => {
                let d = g.dim();
                let mut values = vec![0.0; du.len()];
                for i in 0..g.node_count() {
                    let xi = &du.values[i * d..(i + 1) * d];
                    let m = g.norm_at(i).dual_eval(xi);
                    if m == 0.0 {
                        continue;
                    }
                    let dir = g.norm_at(i).dual_saturator(xi);
                    let scale = if p == 1.0 { 1.0 } else { m.powf(p - 1.0) };
                    for k in 0..d {
                        values[i * d + k] = scale * dir[k];
                    }
                }
                EdgeField { values }
            }
        }
    }

    /// Total variation `TV(u) = Σ_x ν(x) |du|_*(x)` with the p = 1 norm.
    /// Graph closed form: `Σ_e w_e |du_e|`.
    pub fn total_variation(&self, u: &NodeFunction) -> f64 {
        self.check_nodes(u);
        match self {
            DiscreteSpace::Graph(g) => g
                .edges()
                .iter()
                .map(|e| e.w * (u.values[e.b] - u.values[e.a]).abs())
                .sum(),
            DiscreteSpace::Grid(_) => {
                let du = self.differential(u);
                self.cotangent_energy_integral(&du, 1.0)
            }
        }
    }

    /// Node-wise variation masses `ν(x) |du|_*(x)`.
    pub fn variation_measure(&self, u: &NodeFunction) -> NodeMeasure {
        let du = self.differential(u);
        let norms = self.cotangent_norm(&du, 1.0);
        NodeMeasure {
            masses: norms.values.iter().enumerate().map(|(x, v)| self.nu(x) * v).collect(),
        }
    }

    /// Perimeter of a node subset: `TV(χ_S)`. Graph closed form: the weight sum
    /// over cut edges.
    pub fn perimeter(&self, subset: &[bool]) -> f64 {
        assert_eq!(subset.len(), self.node_count());
        match self {
            DiscreteSpace::Graph(g) => g
                .edges()
                .iter()
                .filter(|e| subset[e.a] != subset[e.b])
                .map(|e| e.w)
                .sum(),
            DiscreteSpace::Grid(_) => {
                let chi = NodeFunction::new(subset.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect());
                self.total_variation(&chi)
            }
        }
    }

    /// `{x : u(x) > t}` as a mask.
    pub fn superlevel_set(&self, u: &NodeFunction, t: f64) -> Vec<bool> {
        self.check_nodes(u);
        u.values.iter().map(|&v| v > t).collect()
    }

    /// Connected component id per node.
    pub fn components(&self) -> Vec<usize> {
        match self {
            DiscreteSpace::Graph(g) => g.components(),
            DiscreteSpace::Grid(g) => vec![0; g.node_count()],
        }
    }

    /// ν-weighted mean of `u` on each component, as a node function constant
    /// per component. This is the projection onto the kernel of every `Ch_p`.
    pub fn componentwise_mean(&self, u: &NodeFunction) -> NodeFunction {
        self.check_nodes(u);
        let comp = self.components();
        let ncomp = comp.iter().copied().max().map_or(0, |m| m + 1);
        let mut mass = vec![0.0; ncomp];
        let mut vol = vec![0.0; ncomp];
        for (x, &c) in comp.iter().enumerate() {
            mass[c] += self.nu(x) * u.values[x];
            vol[c] += self.nu(x);
        }
        NodeFunction::new(comp.iter().map(|&c| mass[c] / vol[c]).collect())
    }

    /// `u` minus its componentwise mean.
    pub fn project_mean_zero(&self, u: &NodeFunction) -> NodeFunction {
        u.sub(&self.componentwise_mean(u))
    }

    /// `∫ u v dν`.
    pub fn inner(&self, u: &NodeFunction, v: &NodeFunction) -> f64 {
        self.check_nodes(u);
        self.check_nodes(v);
        u.values
            .iter()
            .zip(&v.values)
            .enumerate()
            .map(|(x, (a, b))| self.nu(x) * a * b)
            .sum()
    }

    pub fn l2_norm(&self, u: &NodeFunction) -> f64 {
        self.inner(u, u).sqrt()
    }

    pub fn l1_norm(&self, u: &NodeFunction) -> f64 {
        self.check_nodes(u);
        u.values.iter().enumerate().map(|(x, v)| self.nu(x) * v.abs()).sum()
    }

    pub fn linf_norm(&self, u: &NodeFunction) -> f64 {
        u.linf()
    }

    /// `∫ u dν`.
    pub fn mass(&self, u: &NodeFunction) -> f64 {
        self.check_nodes(u);
        u.values.iter().enumerate().map(|(x, v)| self.nu(x) * v).sum()
    }

    /// `‖u⁺‖_r` in L^r(ν), `r ∈ {1, 2, ∞}` (positive part).
    pub fn positive_part_norm(&self, u: &NodeFunction, r: f64) -> f64 {
        self.check_nodes(u);
        if r == 1.0 {
            u.values.iter().enumerate().map(|(x, v)| self.nu(x) * v.max(0.0)).sum()
        } else if r == 2.0 {
            u.values
                .iter()
                .enumerate()
                .map(|(x, v)| {
                    let p = v.max(0.0);
                    self.nu(x) * p * p
                })
                .sum::<f64>()
                .sqrt()
        } else {
            assert!(r.is_infinite(), "positive-part norm supports r in {{1, 2, ∞}}");
            u.values.iter().fold(0.0, |m, v| m.max(v.max(0.0)))
        }
    }

    /// `∫ ω(X) dν`, computed edge-separably on graphs.
    pub fn integral_duality(&self, omega: &EdgeField, field: &EdgeField) -> f64 {
        self.check_field(omega);
        self.check_field(field);
        match self {
            DiscreteSpace::Graph(g) => g
                .edges()
                .iter()
                .enumerate()
                .map(|(i, e)| e.w * omega.values[i] * field.values[i])
                .sum(),
            DiscreteSpace::Grid(_) => {
                let point = self.duality(omega, field);
                self.mass(&point)
            }
        }
    }

    /// `∫ |ω|_*^p dν`, computed edge-separably on graphs.
    pub fn cotangent_energy_integral(&self, omega: &EdgeField, p: f64) -> f64 {
        assert!(p >= 1.0 && p.is_finite());
        self.check_field(omega);
        match self {
            DiscreteSpace::Graph(g) => g
                .edges()
                .iter()
                .enumerate()
                .map(|(i, e)| {
                    let v = omega.values[i].abs();
                    if p == 1.0 {
                        e.w * v
                    } else if p == 2.0 {
                        e.w * v * v
                    } else {
                        e.w * v.powf(p)
                    }
                })
                .sum(),
            DiscreteSpace::Grid(_) => {
                let pointwise = self.cotangent_norm_pow(omega, p);
                self.mass(&pointwise)
            }
        }
    }

    /// `∫ |X|^q dν` for finite q.
    pub fn tangent_energy_integral(&self, field: &EdgeField, q: f64) -> f64 {
        let pointwise = self.tangent_norm_pow(field, q);
        self.mass(&pointwise)
    }

    /// `‖X‖_∞`: the largest pointwise tangent ∞-norm over nodes.
    pub fn sup_tangent_norm(&self, field: &EdgeField) -> f64 {
        self.tangent_norm(field, f64::INFINITY).values.iter().fold(0.0, |m, v| m.max(*v))
    }

    /// Fold a time step into the space: graph weights scale by `tau` (the
    /// energy is linear in `w`); grid norms scale so that the dual norm gains
    /// `tau^{1/p}` (the energy is linear in `F*^p`). The resolvent objective on
    /// the scaled space with unit step equals the original with step `tau`.
    pub fn scaled_for_tau(&self, tau: f64, p: f64) -> DiscreteSpace {
        assert!(tau > 0.0);
        match self {
            DiscreteSpace::Graph(g) => DiscreteSpace::Graph(g.scale_weights(tau)),
            DiscreteSpace::Grid(g) => DiscreteSpace::Grid(g.scale_norms(tau.powf(-1.0 / p))),
        }
    }

    /// Map a dual field of the tau-scaled problem back to this space.
    pub fn unscale_dual(&self, field: &EdgeField, tau: f64) -> EdgeField {
        match self {
            DiscreteSpace::Graph(_) => field.clone(),
            DiscreteSpace::Grid(_) => field.scaled(1.0 / tau),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn two_point() -> DiscreteSpace {
        DiscreteSpace::Graph(WeightedGraphSpace::new(vec![1.0, 1.0], vec![(0, 1, 1.0)]).unwrap())
    }

    pub(crate) fn p3() -> DiscreteSpace {
        DiscreteSpace::Graph(
            WeightedGraphSpace::new(vec![1.0, 1.0, 1.0], vec![(0, 1, 1.0), (1, 2, 1.0)]).unwrap(),
        )
    }

    #[test]
    fn differential_on_p3() {
        let s = p3();
        let u = NodeFunction::new(vec![0.0, 1.0, 3.0]);
        let du = s.differential(&u);
        assert_eq!(du.values, vec![1.0, 2.0]);
    }

    #[test]
    fn differential_of_constant_is_zero() {
        for s in [p3(), DiscreteSpace::Grid(FinslerGridSpace::euclidean(vec![3, 3], 0.7).unwrap())] {
            let u = NodeFunction::constant(s.node_count(), 4.2);
            let du = s.differential(&u);
            assert!(du.values.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn differential_on_coarse_1d_grid() {
        let s = DiscreteSpace::Grid(FinslerGridSpace::euclidean(vec![2], 0.5).unwrap());
        let u = NodeFunction::new(vec![0.0, 1.0]);
        let du = s.differential(&u);
        assert_eq!(du.values, vec![2.0, 0.0]);
    }

    #[test]
    fn cotangent_norm_examples() {
        let s = two_point();
        let omega = s.field_from_values(vec![2.0]).unwrap();
        let n = s.cotangent_norm(&omega, 2.0);
        assert!((n.values[0] - 2f64.sqrt()).abs() < 1e-15);
        assert!((n.values[1] - 2f64.sqrt()).abs() < 1e-15);

        let zero = s.zero_field();
        assert_eq!(s.cotangent_norm(&zero, 1.0).values, vec![0.0, 0.0]);

        let p3 = p3();
        let u = NodeFunction::new(vec![0.0, 1.0, 3.0]);
        let du = p3.differential(&u);
        let n1 = p3.cotangent_norm(&du, 1.0);
        assert!((n1.values[1] - 1.5).abs() < 1e-15);
    }

    #[test]
    fn tangent_norm_examples() {
        let s = two_point();
        let x = s.field_from_values(vec![-1.0]).unwrap();
        let n = s.tangent_norm(&x, f64::INFINITY);
        assert_eq!(n.values, vec![1.0, 1.0]);
        assert_eq!(s.tangent_norm(&s.zero_field(), 2.0).values, vec![0.0, 0.0]);

        let p3 = p3();
        let x = p3.field_from_values(vec![0.3, -0.7]).unwrap();
        let n2 = p3.tangent_norm(&x, 2.0);
        assert!((n2.values[1] - 0.29f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn duality_examples() {
        let s = two_point();
        let du = s.field_from_values(vec![-2.0]).unwrap();
        let x = s.field_from_values(vec![-1.0]).unwrap();
        let d = s.duality(&du, &x);
        assert!((d.values[0] - 1.0).abs() < 1e-15);

        let p3 = p3();
        let u = NodeFunction::new(vec![0.0, 1.0, 3.0]);
        let dup3 = p3.differential(&u);
        let xf = p3.field_from_values(vec![0.3, -0.7]).unwrap();
        let pair = p3.duality(&dup3, &xf);
        assert!((pair.values[1] - (-0.55)).abs() < 1e-15);

        assert_eq!(p3.duality(&dup3, &p3.zero_field()).values, vec![0.0; 3]);
    }

    #[test]
    fn divergence_examples() {
        let s = two_point();
        let x = s.field_from_values(vec![-1.0]).unwrap();
        assert_eq!(s.divergence(&x).values, vec![-1.0, 1.0]);

        let p3 = p3();
        let (a, b) = (0.8, -0.4);
        let x = p3.field_from_values(vec![a, b]).unwrap();
        let div = p3.divergence(&x);
        assert!((div.values[0] - a).abs() < 1e-15);
        assert!((div.values[1] - (b - a)).abs() < 1e-15);
        assert!((div.values[2] - (-b)).abs() < 1e-15);
        assert!(p3.mass(&div).abs() < 1e-15);
    }

    #[test]
    fn integration_by_parts_both_backends() {
        let spaces = vec![
            p3(),
            DiscreteSpace::Graph(
                WeightedGraphSpace::new(
                    vec![0.5, 2.0, 1.0, 3.0],
                    vec![(0, 1, 1.5), (1, 2, 0.3), (0, 3, 2.0), (2, 3, 0.9)],
                )
                .unwrap(),
            ),
            DiscreteSpace::Grid(
                FinslerGridSpace::new(
                    vec![3, 2],
                    0.5,
                    vec![1.0, 2.0, 0.5, 1.5, 1.0, 0.25],
                    NormField::Uniform(MinkowskiNorm::new(1.5, vec![1.0, 2.0]).unwrap()),
                )
                .unwrap(),
            ),
        ];
        for s in spaces {
            let n = s.node_count();
            let g = NodeFunction::new((0..n).map(|i| (i as f64 * 0.7).sin()).collect());
            let x = s
                .field_from_values((0..s.field_len()).map(|i| (i as f64 * 1.3).cos()).collect())
                .unwrap();
            let lhs = s.inner(&g, &s.divergence(&x));
            let dg = s.differential(&g);
            let rhs = -s.mass(&s.duality(&dg, &x));
            assert!((lhs - rhs).abs() <= 1e-13 * (1.0 + lhs.abs()), "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn tv_and_perimeter_examples() {
        let s = two_point();
        let u = NodeFunction::new(vec![1.0, -1.0]);
        assert!((s.total_variation(&u) - 2.0).abs() < 1e-15);
        assert_eq!(s.total_variation(&NodeFunction::constant(2, 3.0)), 0.0);

        let p3 = p3();
        let u = NodeFunction::new(vec![0.0, 1.0, 3.0]);
        assert!((p3.total_variation(&u) - 3.0).abs() < 1e-15);

        assert_eq!(p3.perimeter(&[false, false, true]), 1.0);
        assert_eq!(p3.perimeter(&[false, true, false]), 2.0);
        assert_eq!(p3.perimeter(&[false, false, false]), 0.0);
        assert_eq!(p3.perimeter(&[true, true, true]), 0.0);
    }

    #[test]
    fn perimeter_equals_tv_of_indicator() {
        let s = DiscreteSpace::Graph(
            WeightedGraphSpace::new(vec![1.0, 0.5, 2.0, 1.0], vec![(0, 1, 0.4), (1, 2, 1.1), (2, 3, 0.6), (0, 3, 0.2)])
                .unwrap(),
        );
        for bits in 0..16u32 {
            let mask: Vec<bool> = (0..4).map(|i| bits >> i & 1 == 1).collect();
            let chi = NodeFunction::new(mask.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect());
            assert_eq!(s.perimeter(&mask), s.total_variation(&chi));
        }
    }

    #[test]
    fn superlevel_examples() {
        let s = p3();
        let u = NodeFunction::new(vec![0.0, 1.0, 3.0]);
        assert_eq!(s.superlevel_set(&u, 0.5), vec![false, true, true]);
        assert_eq!(s.superlevel_set(&u, 3.0), vec![false, false, false]);
        assert_eq!(s.superlevel_set(&u, -1.0), vec![true, true, true]);
    }

    #[test]
    fn variation_measure_total_is_tv() {
        let s = p3();
        let u = NodeFunction::new(vec![0.0, 1.0, 3.0]);
        let m = s.variation_measure(&u);
        assert!((m.total() - s.total_variation(&u)).abs() < 1e-14);
        assert!((m.masses[1] - 1.5).abs() < 1e-15);
    }

    #[test]
    fn holder_saturation_by_p_gradient() {
        let spaces = vec![
            p3(),
            DiscreteSpace::Grid(
                FinslerGridSpace::new(
                    vec![3, 3],
                    0.8,
                    vec![1.0; 9],
                    NormField::Uniform(MinkowskiNorm::new(3.0, vec![1.0, 0.5]).unwrap()),
                )
                .unwrap(),
            ),
        ];
        for s in spaces {
            for p in [1.0, 1.5, 2.0, 3.0] {
                let q = crate::conjugate(p);
                let n = s.node_count();
                let u = NodeFunction::new((0..n).map(|i| ((i * i) as f64 * 0.37).sin()).collect());
                let du = s.differential(&u);
                let x = s.p_gradient(&du, p);
                let pair = s.duality(&du, &x);
                let dup = s.cotangent_norm_pow(&du, p);
                for i in 0..n {
                    assert!(
                        (pair.values[i] - dup.values[i]).abs() <= 1e-10 * (1.0 + dup.values[i]),
                        "p={p} node {i}"
                    );
                }
                if q.is_finite() {
                    let xq = s.tangent_norm_pow(&x, q);
                    for i in 0..n {
                        assert!((xq.values[i] - dup.values[i]).abs() <= 1e-10 * (1.0 + dup.values[i]));
                    }
                } else {
                    let xi = s.tangent_norm(&x, f64::INFINITY);
                    for v in xi.values {
                        assert!(v <= 1.0 + 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn mean_projection_per_component() {
        let s = DiscreteSpace::Graph(
            WeightedGraphSpace::new(vec![1.0, 3.0, 2.0, 2.0], vec![(0, 1, 1.0), (2, 3, 1.0)]).unwrap(),
        );
        let u = NodeFunction::new(vec![4.0, 0.0, 1.0, -1.0]);
        let mean = s.componentwise_mean(&u);
        assert!((mean.values[0] - 1.0).abs() < 1e-15); // (4*1 + 0*3)/4
        assert!((mean.values[2] - 0.0).abs() < 1e-15); // (2 - 2)/4
        let z = s.project_mean_zero(&u);
        let comp = s.components();
        for c in 0..2 {
            let m: f64 = z
                .values
                .iter()
                .enumerate()
                .filter(|(i, _)| comp[*i] == c)
                .map(|(i, v)| s.nu(i) * v)
                .sum();
            assert!(m.abs() < 1e-14);
        }
    }

    #[test]
    fn tau_scaling_identities() {
        let tau = 0.37;
        for p in [1.0, 1.7, 2.0, 3.0] {
            for s in [
                p3(),
                DiscreteSpace::Grid(
                    FinslerGridSpace::new(
                        vec![4],
                        0.5,
                        vec![1.0, 2.0, 1.5, 0.5],
                        NormField::Uniform(MinkowskiNorm::new(2.0, vec![1.3]).unwrap()),
                    )
                    .unwrap(),
                ),
            ] {
                let scaled = s.scaled_for_tau(tau, p);
                let u = NodeFunction::new((0..s.node_count()).map(|i| (i as f64).cos()).collect());
                let du = s.differential(&u);
                let du_s = scaled.differential(&u);
                let a = scaled.cotangent_energy_integral(&du_s, p);
                let b = tau * s.cotangent_energy_integral(&du, p);
                assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()), "p={p}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn grid_boundary_components_are_zeroed() {
        let s = DiscreteSpace::Grid(FinslerGridSpace::euclidean(vec![2, 2], 1.0).unwrap());
        let f = s.field_from_values(vec![1.0; 8]).unwrap();
        // nodes 1, 3 have no +x neighbor; nodes 2, 3 have no +y neighbor
        assert_eq!(f.values[2], 0.0);
        assert_eq!(f.values[5], 0.0);
        assert_eq!(f.values[6], 0.0);
        assert_eq!(f.values[7], 0.0);
    }
}
