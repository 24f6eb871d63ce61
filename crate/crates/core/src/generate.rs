//! Deterministic instance generators: structured graphs, seeded random
//! geometric graphs, and grids. The same seed always yields the same space,
//! bit for bit.

use crate::rng::SplitMix64;
use crate::space::{DiscreteSpace, EdgeField, FinslerGridSpace, MinkowskiNorm, NodeFunction, NormField, WeightedGraphSpace};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "kebab-case")]
pub enum ValueLaw {
    Unit,
    Uniform { lo: f64, hi: f64 },
}

impl ValueLaw {
    fn draw(&self, rng: &mut SplitMix64) -> f64 {
        match self {
            ValueLaw::Unit => 1.0,
            ValueLaw::Uniform { lo, hi } => rng.uniform(*lo, *hi),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GeneratorKind {
    Path,
    Cycle,
    Star,
    /// Uniform points in the unit square; `w = exp(-dist²/sigma²)`, kept when
    /// `w >= cutoff`.
    RandomGeometric { sigma: f64, cutoff: f64 },
    /// Regular grid, `size` nodes per axis.
    Grid { dim: usize, h: f64, alpha: f64, scales: Vec<f64> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneratorSpec {
    #[serde(flatten)]
    pub kind: GeneratorKind,
    pub size: usize,
    #[serde(default = "default_law")]
    pub weights: ValueLaw,
    #[serde(default = "default_law")]
    pub measures: ValueLaw,
}

fn default_law() -> ValueLaw {
    ValueLaw::Unit
}

pub fn generate(spec: &GeneratorSpec, seed: u64) -> Result<DiscreteSpace> {
    if spec.size == 0 {
        return Err(Error::Precondition("generator with zero nodes".into()));
    }
    let mut rng = SplitMix64::new(seed);
    let n = spec.size;
    match &spec.kind {
        GeneratorKind::Path => {
            let nu = (0..n).map(|_| spec.measures.draw(&mut rng)).collect();
            let edges = (0..n.saturating_sub(1))
                .map(|i| (i, i + 1, spec.weights.draw(&mut rng)))
                .collect();
            Ok(DiscreteSpace::Graph(WeightedGraphSpace::new(nu, edges)?))
        }
        GeneratorKind::Cycle => {
            if n < 3 {
                return Err(Error::Precondition("cycle needs at least 3 nodes".into()));
            }
            let nu = (0..n).map(|_| spec.measures.draw(&mut rng)).collect();
            let mut edges: Vec<(usize, usize, f64)> =
                (0..n - 1).map(|i| (i, i + 1, spec.weights.draw(&mut rng))).collect();
            edges.push((n - 1, 0, spec.weights.draw(&mut rng)));
            Ok(DiscreteSpace::Graph(WeightedGraphSpace::new(nu, edges)?))
        }
        GeneratorKind::Star => {
            if n < 2 {
                return Err(Error::Precondition("star needs at least 2 nodes".into()));
            }
            let nu = (0..n).map(|_| spec.measures.draw(&mut rng)).collect();
            let edges = (1..n).map(|i| (0, i, spec.weights.draw(&mut rng))).collect();
            Ok(DiscreteSpace::Graph(WeightedGraphSpace::new(nu, edges)?))
        }
        GeneratorKind::RandomGeometric { sigma, cutoff } => {
            if !(sigma.is_finite() && *sigma > 0.0 && cutoff.is_finite() && *cutoff > 0.0) {
                return Err(Error::Precondition("sigma and cutoff must be positive".into()));
            }
            let points: Vec<(f64, f64)> =
                (0..n).map(|_| (rng.next_f64(), rng.next_f64())).collect();
            let nu = (0..n).map(|_| spec.measures.draw(&mut rng)).collect();
            let mut edges = Vec::new();
            for i in 0..n {
                for j in (i + 1)..n {
                    let dx = points[i].0 - points[j].0;
                    let dy = points[i].1 - points[j].1;
                    let w = (-(dx * dx + dy * dy) / (sigma * sigma)).exp();
                    if w >= *cutoff {
                        edges.push((i, j, w * spec.weights.draw(&mut rng)));
                    }
                }
            }
            Ok(DiscreteSpace::Graph(WeightedGraphSpace::new(nu, edges)?))
        }
        GeneratorKind::Grid { dim, h, alpha, scales } => {
            let shape = vec![n; *dim];
            let count: usize = shape.iter().product();
            let omega = (0..count).map(|_| spec.measures.draw(&mut rng)).collect();
            let nm = MinkowskiNorm::new(*alpha, scales.clone())?;
            Ok(DiscreteSpace::Grid(FinslerGridSpace::new(shape, *h, omega, NormField::Uniform(nm))?))
        }
    }
}

pub fn is_connected(space: &DiscreteSpace) -> bool {
    space.components().iter().all(|&c| c == 0)
}

/// Uniform random node function in `[lo, hi)`.
pub fn random_node_function(space: &DiscreteSpace, rng: &mut SplitMix64, lo: f64, hi: f64) -> NodeFunction {
    NodeFunction::new((0..space.node_count()).map(|_| rng.uniform(lo, hi)).collect())
}

/// Uniform random edge field in `[lo, hi)` (boundary-sanitized on grids).
pub fn random_field(space: &DiscreteSpace, rng: &mut SplitMix64, lo: f64, hi: f64) -> EdgeField {
    space
        .field_from_values((0..space.field_len()).map(|_| rng.uniform(lo, hi)).collect())
        .expect("generated field has the right length")
}
