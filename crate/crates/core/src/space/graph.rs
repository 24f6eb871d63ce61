//! Finite weighted graphs as discrete metric measure spaces.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// One undirected edge, stored once with `a < b`. The edge degree of freedom
/// of an antisymmetric field is its value on the oriented pair `(a, b)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphEdge {
    pub a: usize,
    pub b: usize,
    pub w: f64,
}

/// Incidence of a node with an edge: `sign = +1` when the node is the edge's
/// `a` endpoint, so a stored value `x_e` means `X(node, neighbor) = sign * x_e`.
#[derive(Debug, Clone, Copy)]
pub struct Incidence {
    pub edge: usize,
    pub neighbor: usize,
    pub sign: f64,
}

/// A finite set of nodes with strictly positive measures `nu` and symmetric
/// nonnegative edge weights `w` (zero diagonal). Node order and the edge list
/// are sorted at construction so iteration is reproducible.
#[derive(Debug, Clone)]
pub struct WeightedGraphSpace {
    nu: Vec<f64>,
    edges: Vec<GraphEdge>,
    adjacency: Vec<Vec<Incidence>>,
}

impl WeightedGraphSpace {
    /// Build from node measures and an undirected edge list. Edges may be given
    /// in either orientation; duplicates, self-loops, nonpositive measures and
    /// negative or non-finite weights are rejected. Zero-weight pairs are
    /// dropped (they are not edges).
    pub fn new(nu: Vec<f64>, edges: Vec<(usize, usize, f64)>) -> Result<Self> {
        let n = nu.len();
        if n == 0 {
            return Err(Error::InvalidSpace("space has no nodes".into()));
        }
        for (i, &m) in nu.iter().enumerate() {
            if !(m.is_finite() && m > 0.0) {
                return Err(Error::InvalidSpace(format!("nu({i}) = {m} is not strictly positive")));
            }
        }
        let mut list: Vec<GraphEdge> = Vec::with_capacity(edges.len());
        for (u, v, w) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidSpace(format!("edge ({u},{v}) out of range")));
            }
            if u == v {
                return Err(Error::InvalidSpace(format!("self-loop at node {u}")));
            }
            if !w.is_finite() || w < 0.0 {
                return Err(Error::InvalidSpace(format!("edge ({u},{v}) has weight {w}")));
            }
            if w == 0.0 {
                continue;
            }
            let (a, b) = if u < v { (u, v) } else { (v, u) };
            list.push(GraphEdge { a, b, w });
        }
        list.sort_by_key(|x| (x.a, x.b));
        for pair in list.windows(2) {
            if pair[0].a == pair[1].a && pair[0].b == pair[1].b {
                return Err(Error::InvalidSpace(format!(
                    "duplicate edge ({},{})",
                    pair[0].a, pair[0].b
                )));
            }
        }
        let mut adjacency = vec![Vec::new(); n];
        for (idx, e) in list.iter().enumerate() {
            adjacency[e.a].push(Incidence { edge: idx, neighbor: e.b, sign: 1.0 });
            adjacency[e.b].push(Incidence { edge: idx, neighbor: e.a, sign: -1.0 });
        }
        Ok(Self { nu, edges: list, adjacency })
    }

    pub fn node_count(&self) -> usize {
        self.nu.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nu(&self, x: usize) -> f64 {
        self.nu[x]
    }

    pub fn nu_slice(&self) -> &[f64] {
        &self.nu
    }

    pub fn edges(&self) -> &[GraphEdge] {
        &self.edges
    }

    pub fn incident(&self, x: usize) -> &[Incidence] {
        &self.adjacency[x]
    }

    /// Same nodes and topology with every weight multiplied by `factor`.
    /// The Cheeger energy is linear in the weights, so this realizes the
    /// time-step folding `tau * Ch_p = Ch_p^{tau w}`.
    pub fn scale_weights(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for e in &mut out.edges {
            e.w *= factor;
        }
        out
    }

    /// Connected component id per node (ids are 0.. in order of first node).
    pub fn components(&self) -> Vec<usize> {
        let n = self.node_count();
        let mut comp = vec![usize::MAX; n];
        let mut next = 0;
        let mut stack = Vec::new();
        for start in 0..n {
            if comp[start] != usize::MAX {
                continue;
            }
            comp[start] = next;
            stack.push(start);
            while let Some(x) = stack.pop() {
                for inc in &self.adjacency[x] {
                    if comp[inc.neighbor] == usize::MAX {
                        comp[inc.neighbor] = next;
                        stack.push(inc.neighbor);
                    }
                }
            }
            next += 1;
        }
        comp
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn p3() -> WeightedGraphSpace {
        WeightedGraphSpace::new(vec![1.0, 1.0, 1.0], vec![(0, 1, 1.0), (1, 2, 1.0)]).unwrap()
    }

    #[test]
    fn rejects_bad_input() {
        assert!(WeightedGraphSpace::new(vec![], vec![]).is_err());
        assert!(WeightedGraphSpace::new(vec![1.0, -1.0], vec![]).is_err());
        assert!(WeightedGraphSpace::new(vec![1.0, 1.0], vec![(0, 0, 1.0)]).is_err());
        assert!(WeightedGraphSpace::new(vec![1.0, 1.0], vec![(0, 1, -2.0)]).is_err());
        assert!(WeightedGraphSpace::new(vec![1.0, 1.0], vec![(0, 1, 1.0), (1, 0, 2.0)]).is_err());
    }

    #[test]
    fn zero_weight_pairs_are_not_edges() {
        let s = WeightedGraphSpace::new(vec![1.0, 1.0, 1.0], vec![(0, 1, 1.0), (1, 2, 0.0)]).unwrap();
        assert_eq!(s.edge_count(), 1);
    }

    #[test]
    fn edges_are_sorted_and_oriented() {
        let s = WeightedGraphSpace::new(vec![1.0; 4], vec![(3, 2, 1.0), (1, 0, 2.0)]).unwrap();
        assert_eq!(s.edges()[0].a, 0);
        assert_eq!(s.edges()[0].b, 1);
        assert_eq!(s.edges()[1].a, 2);
        assert_eq!(s.edges()[1].b, 3);
    }

    #[test]
    fn components_of_disconnected_graph() {
        let s = WeightedGraphSpace::new(vec![1.0; 5], vec![(0, 1, 1.0), (3, 4, 1.0)]).unwrap();
        let c = s.components();
        assert_eq!(c, vec![0, 0, 1, 2, 2]);
    }

    #[test]
    fn p3_incidence_signs() {
        let s = p3();
        let inc = s.incident(1);
        assert_eq!(inc.len(), 2);
        assert_eq!(inc[0].sign, -1.0); // edge (0,1) seen from node 1
        assert_eq!(inc[1].sign, 1.0); // edge (1,2) seen from node 1
    }
}
