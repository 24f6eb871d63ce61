//! Finsler grids: 1-D/2-D lattices with a node measure density and a
//! (possibly per-node) Minkowski norm on covectors/vectors.

use super::norm::MinkowskiNorm;
use crate::{Error, Result};

/// Norm structure over the grid: one norm everywhere, or one per node.
#[derive(Debug, Clone)]
pub enum NormField {
    Uniform(MinkowskiNorm),
    PerNode(Vec<MinkowskiNorm>),
}

/// A regular grid with spacing `h`, node measure `omega(x) * h^dim`, and a
/// reversible Minkowski norm `F(x, ·)` from the weighted ℓ^α family. Covector
/// fields (differentials) carry the dual norm `F*`; vector fields carry `F`.
///
/// Fields use the forward-difference convention: component `i` at a node with
/// no `+e_i` neighbor is identically zero.
#[derive(Debug, Clone)]
pub struct FinslerGridSpace {
    dim: usize,
    shape: Vec<usize>,
    h: f64,
    omega: Vec<f64>,
    nu: Vec<f64>,
    norms: NormField,
}

impl FinslerGridSpace {
    pub fn new(shape: Vec<usize>, h: f64, omega: Vec<f64>, norms: NormField) -> Result<Self> {
        let dim = shape.len();
        if dim == 0 || dim > 2 {
            return Err(Error::InvalidSpace(format!("grid dimension {dim} not in {{1, 2}}")));
        }
        if shape.contains(&0) {
            return Err(Error::InvalidSpace("grid axis with zero nodes".into()));
        }
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidSpace(format!("grid spacing h = {h}")));
        }
        let n: usize = shape.iter().product();
        if omega.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: omega.len() });
        }
        if omega.iter().any(|&o| !(o.is_finite() && o > 0.0)) {
            return Err(Error::InvalidSpace("measure density must be strictly positive".into()));
        }
        match &norms {
            NormField::Uniform(nm) => {
                if nm.dim() != dim {
                    return Err(Error::DimensionMismatch { expected: dim, got: nm.dim() });
                }
            }
            NormField::PerNode(v) => {
                if v.len() != n {
                    return Err(Error::DimensionMismatch { expected: n, got: v.len() });
                }
                if v.iter().any(|nm| nm.dim() != dim) {
                    return Err(Error::InvalidSpace("per-node norm with wrong dimension".into()));
                }
            }
        }
        let hd = h.powi(dim as i32);
        let nu = omega.iter().map(|o| o * hd).collect();
        Ok(Self { dim, shape, h, omega, nu, norms })
    }

    /// Uniform unit density and Euclidean norm.
    pub fn euclidean(shape: Vec<usize>, h: f64) -> Result<Self> {
        let n: usize = shape.iter().product();
        let dim = shape.len();
        Self::new(shape, h, vec![1.0; n], NormField::Uniform(MinkowskiNorm::euclidean(dim)))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn node_count(&self) -> usize {
        self.nu.len()
    }

    pub fn nu(&self, x: usize) -> f64 {
        self.nu[x]
    }

    pub fn nu_slice(&self) -> &[f64] {
        &self.nu
    }

    pub fn norm_at(&self, x: usize) -> &MinkowskiNorm {
        match &self.norms {
            NormField::Uniform(nm) => nm,
            NormField::PerNode(v) => &v[x],
        }
    }

    pub fn norms(&self) -> &NormField {
        &self.norms
    }

    fn stride(&self, axis: usize) -> usize {
        if axis == 0 {
            1
        } else {
            self.shape[0]
        }
    }

    fn coord(&self, idx: usize, axis: usize) -> usize {
        if axis == 0 {
            idx % self.shape[0]
        } else {
            idx / self.shape[0]
        }
    }

    /// Forward neighbor of `idx` along `axis`, if any.
    pub fn forward(&self, idx: usize, axis: usize) -> Option<usize> {
        if self.coord(idx, axis) + 1 < self.shape[axis] {
            Some(idx + self.stride(axis))
        } else {
            None
        }
    }

    /// Backward neighbor of `idx` along `axis`, if any.
    pub fn backward(&self, idx: usize, axis: usize) -> Option<usize> {
        if self.coord(idx, axis) > 0 {
            Some(idx - self.stride(axis))
        } else {
            None
        }
    }

    /// True when the field component `(idx, axis)` carries a degree of freedom.
    pub fn interior(&self, idx: usize, axis: usize) -> bool {
        self.coord(idx, axis) + 1 < self.shape[axis]
    }

    /// All norms multiplied by `factor`.
    pub fn scale_norms(&self, factor: f64) -> Self {
        let norms = match &self.norms {
            NormField::Uniform(nm) => NormField::Uniform(nm.scaled(factor)),
            NormField::PerNode(v) => NormField::PerNode(v.iter().map(|nm| nm.scaled(factor)).collect()),
        };
        Self { norms, ..self.clone() }
    }
}
