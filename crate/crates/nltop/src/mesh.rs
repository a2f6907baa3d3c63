//! Structured quadrilateral grid over a rectangular design domain.
//!
//! Nodes and elements are numbered column-major: node `ix * (nely + 1) + iy`,
//! element `ex * nely + ey`, with `x` to the right and `y` up. Elastic problems
//! interleave displacement dofs as `(2 * node, 2 * node + 1)`; scalar problems
//! use one dof per node.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Regular grid of square bilinear elements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mesh2D {
    /// Elements along x.
    pub nelx: usize,
    /// Elements along y.
    pub nely: usize,
    /// Element edge length.
    pub elem_size: f64,
}

impl Mesh2D {
    pub fn new(nelx: usize, nely: usize, elem_size: f64) -> Result<Self> {
        if nelx == 0 || nely == 0 {
            return Err(Error::InvalidParameter(format!(
                "mesh must have at least one element per direction, got {nelx}x{nely}"
            )));
        }
        if !(elem_size > 0.0) || !elem_size.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "element size must be positive and finite, got {elem_size}"
            )));
        }
        Ok(Self { nelx, nely, elem_size })
    }

    pub fn num_elements(&self) -> usize {
        self.nelx * self.nely
    }

    pub fn num_nodes(&self) -> usize {
        (self.nelx + 1) * (self.nely + 1)
    }

    pub fn node_id(&self, ix: usize, iy: usize) -> usize {
        debug_assert!(ix <= self.nelx && iy <= self.nely);
        ix * (self.nely + 1) + iy
    }

    pub fn element_id(&self, ex: usize, ey: usize) -> usize {
        debug_assert!(ex < self.nelx && ey < self.nely);
        ex * self.nely + ey
    }

    /// `(ex, ey)` grid coordinates of element `e`.
    pub fn element_coords(&self, e: usize) -> (usize, usize) {
        (e / self.nely, e % self.nely)
    }

    /// Element centroid in physical units.
    pub fn element_center(&self, e: usize) -> (f64, f64) {
        let (ex, ey) = self.element_coords(e);
        (
            (ex as f64 + 0.5) * self.elem_size,
            (ey as f64 + 0.5) * self.elem_size,
        )
    }

    /// Corner nodes counterclockwise: lower-left, lower-right, upper-right, upper-left.
    pub fn element_nodes(&self, e: usize) -> [usize; 4] {
        let (ex, ey) = self.element_coords(e);
        [
            self.node_id(ex, ey),
            self.node_id(ex + 1, ey),
            self.node_id(ex + 1, ey + 1),
            self.node_id(ex, ey + 1),
        ]
    }

    /// Interleaved (ux, uy) dofs for the element's nodes, same node order as
    /// [`Self::element_nodes`].
    pub fn element_dofs_elastic(&self, e: usize) -> [usize; 8] {
        let n = self.element_nodes(e);
        [
            2 * n[0], 2 * n[0] + 1,
            2 * n[1], 2 * n[1] + 1,
            2 * n[2], 2 * n[2] + 1,
            2 * n[3], 2 * n[3] + 1,
        ]
    }

    pub fn num_dofs_elastic(&self) -> usize {
        2 * self.num_nodes()
    }

    pub fn num_dofs_scalar(&self) -> usize {
        self.num_nodes()
    }
}
