use serde::{Deserialize, Serialize};

use crate::error::{KirchhoffError, Result};

/// Uniform Dirichlet grid on `(0, L)` or `(0, Lx) x (0, Ly)`.
///
/// Only interior nodes carry unknowns; boundary values are implicitly zero.
/// Spacing on each axis is `extent / (nodes + 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mesh {
    dim: usize,
    extent: [f64; 2],
    nodes: [usize; 2],
}

impl Mesh {
    /// Build a mesh of dimension 1 or 2. `extent` and `nodes` must have `dim` entries.
    pub fn new(extent: &[f64], nodes: &[usize]) -> Result<Self> {
        let dim = extent.len();
        if !(1..=2).contains(&dim) {
            return Err(KirchhoffError::Structure(format!(
                "mesh dimension must be 1 or 2, got {dim}"
            )));
        }
        if nodes.len() != dim {
            return Err(KirchhoffError::Structure(format!(
                "{} node counts given for a {dim}-dimensional mesh",
                nodes.len()
            )));
        }
        let mut e = [1.0; 2];
        let mut n = [1usize; 2];
        for axis in 0..dim {
            if !(extent[axis].is_finite() && extent[axis] > 0.0) {
                return Err(KirchhoffError::Structure(format!(
                    "extent on axis {axis} must be positive and finite, got {}",
                    extent[axis]
                )));
            }
            if nodes[axis] == 0 {
                return Err(KirchhoffError::Structure(format!(
                    "axis {axis} needs at least one interior node"
                )));
            }
            e[axis] = extent[axis];
            n[axis] = nodes[axis];
        }
        Ok(Self {
            dim,
            extent: e,
            nodes: n,
        })
    }

    pub fn interval(length: f64, nodes: usize) -> Result<Self> {
        Self::new(&[length], &[nodes])
    }

    pub fn rectangle(lx: f64, ly: f64, nx: usize, ny: usize) -> Result<Self> {
        Self::new(&[lx, ly], &[nx, ny])
    }

    /// Unit interval with `nodes` interior points.
    pub fn unit_interval(nodes: usize) -> Result<Self> {
        Self::interval(1.0, nodes)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn extent(&self, axis: usize) -> f64 {
        self.extent[axis]
    }

    pub fn nodes(&self, axis: usize) -> usize {
        self.nodes[axis]
    }

    /// Grid spacing on `axis`.
    pub fn spacing(&self, axis: usize) -> f64 {
        self.extent[axis] / (self.nodes[axis] + 1) as f64
    }

    /// Number of unknowns (product of interior counts).
    pub fn len(&self) -> usize {
        self.nodes[..self.dim].iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Quadrature weight attached to each node.
    pub fn cell_measure(&self) -> f64 {
        (0..self.dim).map(|a| self.spacing(a)).product()
    }

    /// Coordinates of the interior node with flat index `idx` (x varies fastest).
    pub fn coords(&self, idx: usize) -> [f64; 2] {
        let nx = self.nodes[0];
        let (i, j) = (idx % nx, idx / nx);
        let x = (i + 1) as f64 * self.spacing(0);
        let y = if self.dim == 2 {
            (j + 1) as f64 * self.spacing(1)
        } else {
            0.0
        };
        [x, y]
    }

    /// Same grid with node counts doubled-plus-one on every axis (h halves).
    pub fn refined(&self) -> Self {
        let mut m = *self;
        for axis in 0..self.dim {
            m.nodes[axis] = 2 * self.nodes[axis] + 1;
        }
        m
    }
}

/// Nodal values of a grid function vanishing on the boundary.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    mesh: Mesh,
    values: Vec<f64>,
}

impl Field {
    /// Validating constructor: length must match the mesh and every value must be finite.
    pub fn new(mesh: Mesh, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.len() {
            return Err(KirchhoffError::Structure(format!(
                "field has {} values but mesh has {} nodes",
                values.len(),
                mesh.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(KirchhoffError::Structure(format!(
                "non-finite value {} at node {pos}",
                values[pos]
            )));
        }
        Ok(Self { mesh, values })
    }

    pub(crate) fn from_raw(mesh: Mesh, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), mesh.len());
        Self { mesh, values }
    }

    pub fn zeros(mesh: Mesh) -> Self {
        Self {
            values: vec![0.0; mesh.len()],
            mesh,
        }
    }

    /// Sample `f(x, y)` at interior nodes (`y = 0` in 1D).
    pub fn from_fn(mesh: Mesh, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = (0..mesh.len())
            .map(|k| {
                let [x, y] = mesh.coords(k);
                f(x, y)
            })
            .collect();
        Self { mesh, values }
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            mesh: self.mesh,
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    /// `self + c * other`
    pub fn add_scaled(&self, c: f64, other: &Field) -> Result<Self> {
        self.check_same_mesh(other)?;
        Ok(Self {
            mesh: self.mesh,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + c * b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &Field) -> Result<Self> {
        self.add_scaled(-1.0, other)
    }

    /// Pointwise map.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            mesh: self.mesh,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn check_same_mesh(&self, other: &Field) -> Result<()> {
        if self.mesh != other.mesh {
            return Err(KirchhoffError::MeshMismatch(format!(
                "{:?} vs {:?}",
                self.mesh, other.mesh
            )));
        }
        Ok(())
    }
}
