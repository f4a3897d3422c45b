//! Regular discretization of the unit cube `[0,1]^d`.
//!
//! The dominating measure μ is the uniform probability measure; every node is
//! the center of a lattice cell and carries μ-mass `m^{-d}`. Integrals against
//! μ are midpoint-rule quadratures, which keeps all divergence integrands
//! positive and is exact for functions that are linear within cells.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Hard cap on the number of grid nodes (`m^d`).
pub const MAX_GRID_NODES: usize = 1 << 22;

/// A regular lattice of cell centers over `[0,1]^d` with uniform μ-weights.
#[derive(Debug)]
pub struct GridSpec<S> {
    dim: usize,
    points_per_axis: usize,
    n_nodes: usize,
    /// `strides[a] = m^{d-1-a}`; axis 0 varies slowest in the flat node order.
    strides: Vec<usize>,
    node_weight: S,
}

impl<S: Scalar> GridSpec<S> {
    pub fn new(dim: usize, points_per_axis: usize) -> Result<Arc<Self>> {
        if dim < 1 {
            return Err(Error::InvalidGrid("dim must be at least 1".into()));
        }
        if points_per_axis < 2 {
            return Err(Error::InvalidGrid(
                "points_per_axis must be at least 2".into(),
            ));
        }
        let n_nodes = (points_per_axis as u128)
            .checked_pow(dim as u32)
            .filter(|&n| n <= MAX_GRID_NODES as u128)
            .ok_or(Error::GridTooLarge {
                dim,
                points_per_axis,
                max: MAX_GRID_NODES,
            })? as usize;

        let mut strides = vec![1usize; dim];
        for a in (0..dim.saturating_sub(1)).rev() {
            strides[a] = strides[a + 1] * points_per_axis;
        }
        Ok(Arc::new(GridSpec {
            dim,
            points_per_axis,
            n_nodes,
            strides,
            node_weight: S::one() / S::of_usize(n_nodes),
        }))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    /// μ-mass of each cell, `m^{-d}`.
    pub fn weight(&self) -> S {
        self.node_weight
    }

    /// Lattice index of `node` along `axis`.
    pub fn axis_index(&self, node: usize, axis: usize) -> usize {
        (node / self.strides[axis]) % self.points_per_axis
    }

    /// Coordinate of `node` along `axis`: `(i + 1/2) / m`.
    pub fn node_coord(&self, node: usize, axis: usize) -> S {
        (S::of_usize(self.axis_index(node, axis)) + S::of(0.5))
            / S::of_usize(self.points_per_axis)
    }

    pub fn node(&self, node: usize) -> Vec<S> {
        (0..self.dim).map(|a| self.node_coord(node, a)).collect()
    }

    pub fn write_node(&self, node: usize, out: &mut [S]) {
        for (a, slot) in out.iter_mut().enumerate().take(self.dim) {
            *slot = self.node_coord(node, a);
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = Vec<S>> + '_ {
        (0..self.n_nodes).map(|i| self.node(i))
    }

    /// Index of the node whose cell contains `point` (ties at upper cell
    /// boundaries resolve downward, so `1.0` maps into the last cell).
    pub fn nearest_node(&self, point: &[S]) -> Result<usize> {
        if point.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: point.len(),
            });
        }
        let m = self.points_per_axis;
        let mut flat = 0usize;
        for (a, &x) in point.iter().enumerate() {
            if !x.is_finite() {
                return Err(Error::NonFinite {
                    context: "point coordinate",
                });
            }
            let scaled = (x * S::of_usize(m)).floor();
            let idx = scaled.to_isize().unwrap_or(0).clamp(0, m as isize - 1) as usize;
            flat += idx * self.strides[a];
        }
        Ok(flat)
    }

    /// Grids are interchangeable when they have the same shape.
    pub fn compatible(&self, other: &Self) -> bool {
        self.dim == other.dim && self.points_per_axis == other.points_per_axis
    }
}

impl<S: Scalar> PartialEq for GridSpec<S> {
    fn eq(&self, other: &Self) -> bool {
        self.compatible(other)
    }
}

/// Builds the uniform grid; rejects shapes with more than [`MAX_GRID_NODES`]
/// nodes.
pub fn make_grid<S: Scalar>(dim: usize, points_per_axis: usize) -> Result<Arc<GridSpec<S>>> {
    GridSpec::new(dim, points_per_axis)
}
