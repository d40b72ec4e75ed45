//! Simulated partial-boundary measurements: trigonometric Neumann patterns,
//! fine-mesh forward solves, angular resampling of the Dirichlet traces onto
//! the reconstruction mesh, and calibrated Gaussian noise.
//!
//! Simulating on a mesh much finer than the one used for reconstruction and
//! transferring only boundary samples avoids the inverse crime of testing an
//! inversion against its own discretization.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
// Resolves f64 math in no_std builds; builds that link std use the
// inherent methods instead and leave this import idle.
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::Error;
use crate::fem::{boundary_load, DataFit, StiffnessSystem};
use crate::field::Field;
use crate::mesh::{BoundaryArc, Mesh};
use crate::Result;

const TWO_PI: f64 = 2.0 * core::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PatternKind {
    Cosine,
    Sine,
}

/// Trigonometric current pattern with `n` whole periods in its arc. On the
/// full boundary these are the Fourier modes cos(n theta), sin(n theta);
/// on a partial arc they are scaled and translated to fit the interval and
/// vanish outside it, which keeps them mean-free.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeumannPattern {
    pub kind: PatternKind,
    pub n: u32,
    pub arc: BoundaryArc,
}

fn wrap_angle(theta: f64) -> f64 {
    let t = theta % TWO_PI;
    if t < 0.0 {
        t + TWO_PI
    } else {
        t
    }
}

impl NeumannPattern {
    pub fn new(kind: PatternKind, n: u32, arc: BoundaryArc) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("pattern order must be at least 1".into()));
        }
        Ok(Self { kind, n, arc })
    }

    /// Evaluate the flux at angle `theta` (normalized into [0, 2*pi)).
    pub fn eval(&self, theta: f64) -> f64 {
        let theta = wrap_angle(theta);
        if !self.arc.contains(theta) {
            return 0.0;
        }
        let phase = if self.arc.is_full() {
            self.n as f64 * theta
        } else {
            TWO_PI * self.n as f64 * (theta - self.arc.theta1()) / self.arc.span()
        };
        match self.kind {
            PatternKind::Cosine => phase.cos(),
            PatternKind::Sine => phase.sin(),
        }
    }

    /// Assembled load vector on a mesh (edges split at the arc endpoints).
    pub fn load(&self, mesh: &Mesh) -> Vec<f64> {
        let splits = if self.arc.is_full() {
            Vec::new()
        } else {
            alloc::vec![self.arc.theta1(), self.arc.theta2()]
        };
        boundary_load(mesh, |t| self.eval(t), &splits)
    }
}

/// The ten measurement patterns used throughout: cosine and sine with
/// 1 to 5 periods, adapted to the arc.
pub fn default_pattern_set(arc: &BoundaryArc) -> Vec<NeumannPattern> {
    let mut out = Vec::with_capacity(10);
    for n in 1..=5 {
        out.push(NeumannPattern { kind: PatternKind::Cosine, n, arc: *arc });
        out.push(NeumannPattern { kind: PatternKind::Sine, n, arc: *arc });
    }
    out
}

/// Dirichlet trace samples along the boundary, keyed by angle.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySamples {
    /// Strictly increasing angles in [0, 2*pi).
    pub theta: Vec<f64>,
    pub value: Vec<f64>,
}

impl BoundarySamples {
    /// Piecewise-linear periodic evaluation; exact at sample angles.
    pub fn eval(&self, theta: f64) -> f64 {
        let n = self.theta.len();
        let t = wrap_angle(theta);
        let idx = self.theta.partition_point(|&s| s <= t);
        if idx > 0 && self.theta[idx - 1] == t {
            return self.value[idx - 1];
        }
        // Segment from idx-1 to idx, wrapping around 2*pi.
        let (t0, v0, mut t1, v1) = if idx == 0 || idx == n {
            (self.theta[n - 1], self.value[n - 1], self.theta[0] + TWO_PI, self.value[0])
        } else {
            (self.theta[idx - 1], self.value[idx - 1], self.theta[idx], self.value[idx])
        };
        let mut tt = t;
        if tt < t0 {
            tt += TWO_PI;
        }
        if t1 <= t0 {
            t1 += TWO_PI;
        }
        let s = (tt - t0) / (t1 - t0);
        v0 + s * (v1 - v0)
    }
}

/// K Cauchy pairs on one arc: the applied patterns and the sampled noisy
/// Dirichlet traces, plus everything needed to reproduce the noise draw.
#[derive(Debug, Clone, PartialEq)]
pub struct CauchyDataSet {
    pub arc: BoundaryArc,
    pub patterns: Vec<NeumannPattern>,
    /// Per pattern: Dirichlet samples at the reconstruction-mesh arc nodes.
    pub samples: Vec<BoundarySamples>,
    pub noise_level: f64,
    pub seed: u64,
    /// Realized noise standard deviation
    /// `eps * max_k max_j |f_k(x_j)|` (one global value).
    pub noise_std: f64,
    /// Edge length of the mesh the samples were taken on (reconstruction
    /// default).
    pub recon_h: f64,
}

impl CauchyDataSet {
    /// Bind the data set to a mesh: assemble the pattern loads and resample
    /// the Dirichlet data at the mesh's arc nodes (exact where angles
    /// coincide with the original sampling grid).
    pub fn bind(&self, mesh: &Arc<Mesh>) -> Result<DataFit> {
        if self.patterns.len() != self.samples.len() {
            return Err(Error::MeshDataMismatch("pattern/sample count mismatch".into()));
        }
        let node_ids = mesh.arc_node_ids(&self.arc);
        if node_ids.is_empty() {
            return Err(Error::MeshDataMismatch(
                "measurement arc contains no boundary nodes of this mesh".into(),
            ));
        }
        let w = mesh.boundary_weights();
        let quad_w: Vec<f64> = node_ids.iter().map(|&i| w[i]).collect();
        let thetas: Vec<f64> = node_ids.iter().map(|&i| crate::geom::angle_of(mesh.nodes()[i])).collect();
        let dirichlet: Vec<Vec<f64>> = self
            .samples
            .iter()
            .map(|s| thetas.iter().map(|&t| s.eval(t)).collect())
            .collect();
        let loads: Vec<Vec<f64>> = self.patterns.iter().map(|p| p.load(mesh)).collect();
        Ok(DataFit { arc: self.arc, node_ids, quad_w, dirichlet, loads })
    }
}

/// Knobs for [`simulate`].
#[derive(Debug, Clone, Copy)]
pub struct SimOptions {
    /// Relative noise level epsilon (>= 0).
    pub noise_level: f64,
    pub seed: u64,
    /// Explicit opt-in for simulating and reconstructing on the same mesh.
    pub allow_same_mesh: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self { noise_level: 1e-2, seed: 0, allow_same_mesh: false }
    }
}

/// Result of a simulation: the data set and the fine/reconstruction edge
/// length ratio (at least ~3 is recommended to keep the discretizations
/// independent; the caller decides whether to warn).
pub struct SimOutcome {
    pub data: CauchyDataSet,
    pub mesh_ratio: f64,
}

/// Simulate noisy partial-boundary Cauchy data for `true_sigma` (given on a
/// fine mesh) sampled at the boundary nodes of `recon_mesh`.
///
/// For each of the ten default patterns the forward problem is solved on the
/// fine mesh; the trace is transferred by piecewise-linear interpolation in
/// the boundary angle, re-grounded in the reconstruction mesh's quadrature,
/// and perturbed by white i.i.d. Gaussian noise of standard deviation
/// `eps * max_k max_j |f_k(x_j)|` at the arc nodes only. Pattern `k` draws
/// from an independent, documented stream (ChaCha8, stream id `k`), so the
/// data set is bit-reproducible for a given seed.
pub fn simulate(
    true_sigma: &Field,
    arc: &BoundaryArc,
    recon_mesh: &Arc<Mesh>,
    opts: &SimOptions,
) -> Result<SimOutcome> {
    if !(opts.noise_level >= 0.0 && opts.noise_level.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "noise level must be nonnegative, got {}",
            opts.noise_level
        )));
    }
    let fine = true_sigma.mesh();
    if fine.num_nodes() == recon_mesh.num_nodes() && fine.nodes() == recon_mesh.nodes() {
        if !opts.allow_same_mesh {
            return Err(Error::InverseCrime);
        }
    }
    let mesh_ratio = recon_mesh.max_edge_len() / fine.max_edge_len();

    let system = StiffnessSystem::assemble(fine, true_sigma, arc)?;
    let patterns = default_pattern_set(arc);

    // Reconstruction-mesh sampling grid inside the arc.
    let recon_ids = recon_mesh.arc_node_ids(arc);
    if recon_ids.is_empty() {
        return Err(Error::MeshDataMismatch(
            "measurement arc contains no boundary nodes of the reconstruction mesh".into(),
        ));
    }
    let recon_theta: Vec<f64> =
        recon_ids.iter().map(|&i| crate::geom::angle_of(recon_mesh.nodes()[i])).collect();
    let w = recon_mesh.boundary_weights();
    let quad_w: Vec<f64> = recon_ids.iter().map(|&i| w[i]).collect();
    let total_w: f64 = quad_w.iter().sum();

    let mut noiseless: Vec<Vec<f64>> = Vec::with_capacity(patterns.len());
    for pattern in &patterns {
        let load = pattern.load(fine);
        let u = system.solve_neumann(&load)?;
        let full_trace = BoundarySamples {
            theta: fine.boundary_theta().to_vec(),
            value: fine.boundary_nodes().iter().map(|&i| u.values()[i]).collect(),
        };
        let mut f: Vec<f64> = recon_theta.iter().map(|&t| full_trace.eval(t)).collect();
        // Re-ground in the reconstruction mesh's trapezoidal quadrature so
        // the noiseless samples have exactly zero mean over the arc.
        let mean: f64 = quad_w.iter().zip(&f).map(|(w, v)| w * v).sum::<f64>() / total_w;
        for v in &mut f {
            *v -= mean;
        }
        noiseless.push(f);
    }

    let peak = noiseless
        .iter()
        .flat_map(|f| f.iter())
        .fold(0.0f64, |acc, &v| acc.max(v.abs()));
    let noise_std = opts.noise_level * peak;

    let mut samples = Vec::with_capacity(patterns.len());
    for (k, f) in noiseless.into_iter().enumerate() {
        let mut values = f;
        if noise_std > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(k as u64);
            let normal = Normal::new(0.0, noise_std)
                .map_err(|_| Error::InvalidParameter("invalid noise standard deviation".into()))?;
            // The noisy samples are deliberately not re-grounded; the
            // grounding multiplier of the adjoint solves absorbs the defect.
            for v in &mut values {
                *v += normal.sample(&mut rng);
            }
        }
        samples.push(BoundarySamples { theta: recon_theta.clone(), value: values });
    }

    Ok(SimOutcome {
        data: CauchyDataSet {
            arc: *arc,
            patterns,
            samples,
            noise_level: opts.noise_level,
            seed: opts.seed,
            noise_std,
            recon_h: recon_mesh.max_edge_len(),
        },
        mesh_ratio,
    })
}
