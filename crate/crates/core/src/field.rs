//! Piecewise-affine scalar functions given by nodal values on a mesh.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::Error;
use crate::mesh::Mesh;
use crate::Result;

/// A P1 finite-element function: one value per mesh node. Holds conductivity
/// fields, potentials, gradients, and prior weights alike.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    mesh: Arc<Mesh>,
    values: Vec<f64>,
}

impl Field {
    pub fn new(mesh: Arc<Mesh>, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.num_nodes() {
            return Err(Error::MeshDataMismatch(format!(
                "field has {} values for a mesh with {} nodes",
                values.len(),
                mesh.num_nodes()
            )));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("field values"));
        }
        Ok(Self { mesh, values })
    }

    /// Construct without the length/finiteness checks; for internal hot
    /// paths whose inputs are already validated fields.
    pub(crate) fn from_values_unchecked(mesh: Arc<Mesh>, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), mesh.num_nodes());
        Self { mesh, values }
    }

    pub fn constant(mesh: Arc<Mesh>, value: f64) -> Self {
        let n = mesh.num_nodes();
        Self { mesh, values: vec![value; n] }
    }

    pub fn zeros(mesh: Arc<Mesh>) -> Self {
        Self::constant(mesh, 0.0)
    }

    /// Evaluate a function of the node position at every node.
    pub fn from_fn(mesh: Arc<Mesh>, f: impl Fn([f64; 2]) -> f64) -> Self {
        let values = mesh.nodes().iter().map(|&p| f(p)).collect();
        Self { mesh, values }
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// True if both fields live on the same mesh object.
    pub fn same_mesh(&self, other: &Field) -> bool {
        Arc::ptr_eq(&self.mesh, &other.mesh)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Index of the node with the largest value (first one on ties).
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.values.iter().enumerate() {
            if v > self.values[best] {
                best = i;
            }
        }
        best
    }

    /// Number of nonzero nodal values.
    pub fn nnz(&self) -> usize {
        self.values.iter().filter(|&&v| v != 0.0).count()
    }

    /// Gradient on a triangle (constant per triangle for P1).
    pub fn tri_gradient(&self, t: usize) -> [f64; 2] {
        let (grads, _) = self.mesh.p1_gradients(t);
        let tri = self.mesh.triangles()[t];
        let mut g = [0.0, 0.0];
        for k in 0..3 {
            g[0] += self.values[tri[k]] * grads[k][0];
            g[1] += self.values[tri[k]] * grads[k][1];
        }
        g
    }

    /// Integral over the mesh by exact P1 quadrature
    /// (triangle area times vertex mean).
    pub fn integral(&self) -> f64 {
        let mut acc = 0.0;
        for (t, tri) in self.mesh.triangles().iter().enumerate() {
            let mean = (self.values[tri[0]] + self.values[tri[1]] + self.values[tri[2]]) / 3.0;
            acc += self.mesh.tri_areas()[t] * mean;
        }
        acc
    }
}
