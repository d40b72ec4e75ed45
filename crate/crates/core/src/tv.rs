//! Smoothed total-variation baseline: the same discrepancy and descent
//! machinery as the sparsity reconstruction, with the nodal l1 penalty
//! replaced by `alpha * int sqrt(|grad delta gamma|^2 + b) dx` and the
//! thresholding step by a plain projected Sobolev-gradient step. Keeping the
//! optimizer identical makes the comparison about the penalty, not the
//! solver.

use alloc::sync::Arc;
use alloc::vec;
// Resolves f64 math in no_std builds; builds that link std use the
// inherent methods instead and leave this import idle.
#[allow(unused_imports)]
use num_traits::Float;

use crate::fem::DualVector;
use crate::field::Field;
use crate::forward::CauchyDataSet;
use crate::mesh::Mesh;
use crate::recon::{DescentParams, MethodCfg, ReconResult};
use crate::Result;

/// Configuration of a TV reconstruction.
#[derive(Debug, Clone, PartialEq)]
pub struct TvConfig {
    /// TV regularization weight.
    pub alpha: f64,
    /// Smoothing constant making the penalty differentiable (small; the
    /// penalty then approximates `alpha * int |grad delta gamma|`).
    pub b: f64,
    pub params: DescentParams,
}

impl TvConfig {
    pub fn new(alpha: f64) -> Self {
        Self { alpha, b: 1e-5, params: DescentParams::default() }
    }
}

/// Smoothed TV penalty `alpha * sum_T |T| sqrt(|grad delta gamma|_T|^2 + b)`
/// (exact quadrature: P1 gradients are constant per triangle).
pub fn tv_penalty(delta_gamma: &Field, alpha: f64, b: f64) -> f64 {
    let mesh = delta_gamma.mesh();
    let mut acc = 0.0;
    for t in 0..mesh.num_triangles() {
        let g = delta_gamma.tri_gradient(t);
        acc += mesh.tri_areas()[t] * (g[0] * g[0] + g[1] * g[1] + b).sqrt();
    }
    alpha * acc
}

/// Variation of the TV penalty as a dual vector: the weighted-stiffness
/// action `eta -> alpha * int grad dg . grad eta / sqrt(|grad dg|^2 + b)`,
/// assembled per triangle.
pub fn tv_gradient(delta_gamma: &Field, alpha: f64, b: f64) -> DualVector {
    let mesh = delta_gamma.mesh();
    let mut coeffs = vec![0.0; mesh.num_nodes()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let g = delta_gamma.tri_gradient(t);
        let weight = alpha / (g[0] * g[0] + g[1] * g[1] + b).sqrt();
        let (grads, area) = mesh.p1_gradients(t);
        for k in 0..3 {
            coeffs[tri[k]] += weight * area * (g[0] * grads[k][0] + g[1] * grads[k][1]);
        }
    }
    DualVector::new(mesh.clone(), coeffs)
}

/// TV reconstruction with the shared descent loop (projection, BB steps,
/// weak monotonicity, stopping) driven by the gradient of
/// discrepancy + TV penalty.
pub fn reconstruct_tv(
    data: &CauchyDataSet,
    mesh: &Arc<Mesh>,
    sigma0: &Field,
    config: &TvConfig,
) -> Result<ReconResult> {
    let method = MethodCfg::Tv { alpha: config.alpha, b: config.b };
    crate::recon::run_descent(&method, &config.params, data, mesh, sigma0)
}
