//! P1 finite elements for the grounded Neumann problem
//! `div(gamma grad u) = 0`, `gamma du/dn = g`, `int_{Gamma_D} u ds = 0`,
//! plus the pieces the reconstruction loop needs on top of it: boundary
//! quadrature, the data discrepancy, its derivative assembled from forward
//! and adjoint solves, and the H1 Riesz (Sobolev-gradient) solve.
//!
//! Grounding uses a Lagrange multiplier for the functional
//! `int_{Gamma_D} u ds`. The saddle system is solved exactly by block
//! elimination: one measured boundary node is pinned, the remaining
//! positive-definite block is factorized once per conductivity, and the
//! pinned value and multiplier come from a 2x2 Schur complement. The
//! factorization is reused across all right-hand sides of an iteration
//! (K forward plus K adjoint solves).

use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
// Resolves f64 math in no_std builds; builds that link std use the
// inherent methods instead and leave this import idle.
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::Error;
use crate::field::Field;
use crate::mesh::{BoundaryArc, Mesh};
use crate::sparse::{rcm, CsrMatrix, Ldlt};
use crate::Result;

/// Relative tolerance for the mean-zero compatibility of Neumann data.
pub const COMPATIBILITY_TOL: f64 = 1e-8;

/// Relative residual bound enforced after every grounded solve.
pub const SOLVE_RESIDUAL_TOL: f64 = 1e-10;

/// Assemble the P1 stiffness matrix with conductivity `gamma` taken
/// piecewise constant per triangle as the average of its vertex values.
pub fn assemble_stiffness(mesh: &Mesh, gamma: &Field) -> CsrMatrix {
    let mut triplets = Vec::with_capacity(9 * mesh.num_triangles());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let (grads, area) = mesh.p1_gradients(t);
        let g = gamma.values();
        let coeff = (g[tri[0]] + g[tri[1]] + g[tri[2]]) / 3.0;
        for i in 0..3 {
            for j in 0..3 {
                let v = coeff * area * (grads[i][0] * grads[j][0] + grads[i][1] * grads[j][1]);
                triplets.push((tri[i], tri[j], v));
            }
        }
    }
    CsrMatrix::from_triplets(mesh.num_nodes(), &triplets)
}

/// Assemble the consistent P1 mass matrix.
pub fn assemble_mass(mesh: &Mesh) -> CsrMatrix {
    let mut triplets = Vec::with_capacity(9 * mesh.num_triangles());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let scale = mesh.tri_areas()[t] / 12.0;
        for i in 0..3 {
            for j in 0..3 {
                let v = scale * if i == j { 2.0 } else { 1.0 };
                triplets.push((tri[i], tri[j], v));
            }
        }
    }
    CsrMatrix::from_triplets(mesh.num_nodes(), &triplets)
}

/// Load vector for an analytic Neumann flux `g(theta)`: per boundary edge
/// Gauss-Legendre quadrature of `g` against the P1 trace hats, with edges
/// split at the given angles so discontinuities at arc endpoints never sit
/// inside a quadrature panel. Summing the entries telescopes to the exact
/// boundary integral of `g`, so mean-free fluxes yield compatible loads to
/// rounding accuracy.
pub fn boundary_load(mesh: &Mesh, g: impl Fn(f64) -> f64, splits: &[f64]) -> Vec<f64> {
    // 5-point Gauss-Legendre on [0, 1].
    const GP: [(f64, f64); 5] = [
        (0.046910077030668074, 0.11846344252809454),
        (0.23076534494715845, 0.23931433524968324),
        (0.5, 0.28444444444444444),
        (0.7692346550528415, 0.23931433524968324),
        (0.9530899229693319, 0.11846344252809454),
    ];
    let two_pi = 2.0 * core::f64::consts::PI;
    let mut b = vec![0.0; mesh.num_nodes()];
    let theta_of: alloc::collections::BTreeMap<usize, f64> = mesh
        .boundary_nodes()
        .iter()
        .copied()
        .zip(mesh.boundary_theta().iter().copied())
        .collect();
    for e in mesh.boundary_edges() {
        let t0 = theta_of[&e[0]];
        let mut t1 = theta_of[&e[1]];
        if t1 <= t0 {
            t1 += two_pi; // closing edge wraps through 2*pi
        }
        let len = crate::geom::dist(mesh.nodes()[e[0]], mesh.nodes()[e[1]]);
        let mut cuts = vec![t0, t1];
        for &s in splits {
            for shift in [s, s + two_pi] {
                if shift > t0 && shift < t1 {
                    cuts.push(shift);
                }
            }
        }
        cuts.sort_by(f64::total_cmp);
        for pair in cuts.windows(2) {
            let (a, c) = (pair[0], pair[1]);
            if c <= a {
                continue;
            }
            let frac = (c - a) / (t1 - t0);
            for (x, w) in GP {
                let theta = a + x * (c - a);
                // position along the edge in [0, 1]
                let s = (theta - t0) / (t1 - t0);
                let gv = g(theta) * w * len * frac;
                b[e[0]] += gv * (1.0 - s);
                b[e[1]] += gv * s;
            }
        }
    }
    b
}

/// Load vector for Neumann data given by nodal values on the measured arc:
/// trapezoidal quadrature `b_i = w_i * v_i` over the arc nodes (exact
/// pairing for P1 traces). `values` is aligned with `node_ids`.
pub fn nodal_load(mesh: &Mesh, node_ids: &[usize], values: &[f64]) -> Vec<f64> {
    let w = mesh.boundary_weights();
    let mut b = vec![0.0; mesh.num_nodes()];
    for (&i, &v) in node_ids.iter().zip(values) {
        b[i] = w[i] * v;
    }
    b
}

/// Measured Cauchy data bound to a mesh: the arc nodes, the trapezoidal
/// quadrature weights on them, the Dirichlet samples per pattern, and the
/// assembled Neumann load per pattern.
#[derive(Debug, Clone)]
pub struct DataFit {
    pub arc: BoundaryArc,
    /// Mesh node indices strictly inside the measured arc, angular order.
    pub node_ids: Vec<usize>,
    /// Boundary quadrature weight of each arc node.
    pub quad_w: Vec<f64>,
    /// Dirichlet samples, one vector per pattern, aligned with `node_ids`.
    pub dirichlet: Vec<Vec<f64>>,
    /// Neumann load vectors, one per pattern, over all mesh nodes.
    pub loads: Vec<Vec<f64>>,
}

impl DataFit {
    pub fn num_patterns(&self) -> usize {
        self.loads.len()
    }

    /// Trapezoidal L2(Gamma_D) inner product of two arc-node vectors.
    pub fn arc_inner(&self, a: &[f64], b: &[f64]) -> f64 {
        self.quad_w
            .iter()
            .zip(a.iter().zip(b))
            .map(|(w, (x, y))| w * x * y)
            .sum()
    }
}

/// Stiffness matrix of one conductivity together with the grounding
/// constraint and its cached factorization.
pub struct StiffnessSystem {
    mesh: Arc<Mesh>,
    arc_d: BoundaryArc,
    a: CsrMatrix,
    /// Grounding functional m_i = w_i * chi_{Gamma_D}(theta_i).
    grounding: Vec<f64>,
    pinned: usize,
    keep: Vec<usize>,
    a_ii: CsrMatrix,
    ldlt: Ldlt,
    /// A_II^{-1} (column of A at the pinned node) and A_II^{-1} m_I.
    y1: Vec<f64>,
    y2: Vec<f64>,
    schur: [[f64; 2]; 2],
}

impl StiffnessSystem {
    /// Assemble and factorize for conductivity `gamma` grounded over `arc_d`.
    pub fn assemble(mesh: &Arc<Mesh>, gamma: &Field, arc_d: &BoundaryArc) -> Result<Self> {
        if !Arc::ptr_eq(gamma.mesh(), mesh) {
            return Err(Error::MeshDataMismatch("gamma lives on a different mesh".into()));
        }
        for (i, &v) in gamma.values().iter().enumerate() {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::AdmissibilityViolation { node: i, value: v });
            }
        }
        let a = assemble_stiffness(mesh, gamma);

        let w = mesh.boundary_weights();
        let mask = mesh.arc_mask(arc_d);
        let mut grounding = vec![0.0; mesh.num_nodes()];
        for (&b, &m) in mesh.boundary_nodes().iter().zip(&mask) {
            grounding[b] = w[b] * m;
        }
        // Pin the measured-arc node with the largest grounding weight.
        let pinned = match grounding
            .iter()
            .enumerate()
            .filter(|(_, &m)| m > 0.0)
            .max_by(|(i, x), (j, y)| x.total_cmp(y).then(j.cmp(i)))
        {
            Some((i, _)) => i,
            None => return Err(Error::SingularSystem("measured arc contains no boundary nodes")),
        };

        let keep: Vec<usize> = (0..mesh.num_nodes()).filter(|&i| i != pinned).collect();
        let a_ii = a.submatrix(&keep);
        let perm = rcm(&a_ii);
        let ldlt = Ldlt::factor(&a_ii, &perm)?;

        let col_p: Vec<f64> = {
            let (cols, vals) = a.row(pinned);
            let mut dense = vec![0.0; mesh.num_nodes()];
            for (c, v) in cols.iter().zip(vals) {
                dense[*c] = *v;
            }
            keep.iter().map(|&old| dense[old]).collect()
        };
        let m_i: Vec<f64> = keep.iter().map(|&old| grounding[old]).collect();
        let y1 = ldlt.solve_refined(&a_ii, &col_p);
        let y2 = ldlt.solve_refined(&a_ii, &m_i);

        let a_pp = {
            let (cols, vals) = a.row(pinned);
            cols.iter().zip(vals).find(|(c, _)| **c == pinned).map_or(0.0, |(_, v)| *v)
        };
        let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
        let m_p = grounding[pinned];
        let schur = [
            [a_pp - dot(&col_p, &y1), m_p - dot(&col_p, &y2)],
            [m_p - dot(&m_i, &y1), -dot(&m_i, &y2)],
        ];
        let det = schur[0][0] * schur[1][1] - schur[0][1] * schur[1][0];
        if !det.is_finite() || det.abs() < 1e-30 {
            return Err(Error::SingularSystem("grounded saddle system is singular"));
        }

        Ok(Self {
            mesh: mesh.clone(),
            arc_d: *arc_d,
            a,
            grounding,
            pinned,
            keep,
            a_ii,
            ldlt,
            y1,
            y2,
            schur,
        })
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn arc_d(&self) -> &BoundaryArc {
        &self.arc_d
    }

    pub fn grounding(&self) -> &[f64] {
        &self.grounding
    }

    /// Solve the grounded system for an arbitrary load, returning the
    /// potential and the grounding multiplier. The multiplier absorbs any
    /// mean defect of the load (it equals `sum(load) / sum(m)`), which keeps
    /// noise-perturbed adjoint loads well-posed.
    pub fn solve_grounded(&self, load: &[f64]) -> Result<(Field, f64)> {
        if load.len() != self.mesh.num_nodes() {
            return Err(Error::MeshDataMismatch(format!(
                "load has {} entries for {} nodes",
                load.len(),
                self.mesh.num_nodes()
            )));
        }
        let b_i: Vec<f64> = self.keep.iter().map(|&old| load[old]).collect();
        let y0 = self.ldlt.solve_refined(&self.a_ii, &b_i);

        let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
        let col_p: Vec<f64> = {
            let (cols, vals) = self.a.row(self.pinned);
            let mut dense = vec![0.0; self.mesh.num_nodes()];
            for (c, v) in cols.iter().zip(vals) {
                dense[*c] = *v;
            }
            self.keep.iter().map(|&old| dense[old]).collect()
        };
        let m_i: Vec<f64> = self.keep.iter().map(|&old| self.grounding[old]).collect();
        let rhs = [load[self.pinned] - dot(&col_p, &y0), -dot(&m_i, &y0)];
        let det = self.schur[0][0] * self.schur[1][1] - self.schur[0][1] * self.schur[1][0];
        let u_p = (rhs[0] * self.schur[1][1] - rhs[1] * self.schur[0][1]) / det;
        let lambda = (self.schur[0][0] * rhs[1] - self.schur[1][0] * rhs[0]) / det;

        let mut u = vec![0.0; self.mesh.num_nodes()];
        u[self.pinned] = u_p;
        for (new, &old) in self.keep.iter().enumerate() {
            u[old] = y0[new] - self.y1[new] * u_p - self.y2[new] * lambda;
        }

        // Full saddle residual including the grounding row.
        let mut r = vec![0.0; self.mesh.num_nodes()];
        self.a.matvec(&u, &mut r);
        let mut res2 = 0.0;
        for i in 0..r.len() {
            let ri = load[i] - r[i] - self.grounding[i] * lambda;
            res2 += ri * ri;
        }
        let ground_row: f64 = dot(&self.grounding, &u);
        res2 += ground_row * ground_row;
        let load_norm = dot(load, load).sqrt();
        if !(res2.sqrt() <= SOLVE_RESIDUAL_TOL * load_norm || load_norm == 0.0) {
            return Err(Error::SingularSystem("grounded solve residual above tolerance"));
        }
        let field = Field::new(self.mesh.clone(), u)?;
        Ok((field, lambda))
    }

    /// Solve with boundary current flux `g` given as a load vector,
    /// rejecting data whose boundary integral is not (numerically) zero.
    pub fn solve_neumann(&self, load: &[f64]) -> Result<Field> {
        let mean: f64 = load.iter().sum();
        let w = self.mesh.boundary_weights();
        let norm2: f64 = load
            .iter()
            .zip(&w)
            .filter(|(_, &wi)| wi > 0.0)
            .map(|(&b, &wi)| b * b / wi)
            .sum();
        let g_norm = norm2.sqrt();
        if g_norm > 0.0 && mean.abs() > COMPATIBILITY_TOL * g_norm {
            return Err(Error::IncompatibleNeumannData { mean, norm: g_norm });
        }
        let (u, _) = self.solve_grounded(load)?;
        Ok(u)
    }

    /// Dirichlet trace of the grounded solution sampled on the arc nodes.
    pub fn nd_trace(&self, load: &[f64], arc: &BoundaryArc) -> Result<Vec<f64>> {
        let u = self.solve_neumann(load)?;
        Ok(self.mesh.arc_node_ids(arc).iter().map(|&i| u.values()[i]).collect())
    }
}

/// Forward solves for every pattern of a data set, with the per-pattern
/// boundary residuals and the total discrepancy. The potentials are kept for
/// reuse by the derivative assembly.
pub struct ForwardSolves {
    pub potentials: Vec<Field>,
    /// (Lambda_gamma g_k - f_k) at the arc nodes, one vector per pattern.
    pub residuals: Vec<Vec<f64>>,
    pub discrepancy: f64,
}

/// Solve all K forward problems and accumulate
/// `1/2 sum_k ||Lambda_gamma g_k - f_k||^2_{L2(Gamma_D)}`.
pub fn forward_solves(system: &StiffnessSystem, fit: &DataFit) -> Result<ForwardSolves> {
    if fit.dirichlet.len() != fit.loads.len() {
        return Err(Error::MeshDataMismatch("pattern/sample count mismatch".into()));
    }
    let mut potentials = Vec::with_capacity(fit.loads.len());
    let mut residuals = Vec::with_capacity(fit.loads.len());
    let mut total = 0.0;
    for (load, f) in fit.loads.iter().zip(&fit.dirichlet) {
        if f.len() != fit.node_ids.len() {
            return Err(Error::MeshDataMismatch("sample vector length mismatch".into()));
        }
        let (u, _) = system.solve_grounded(load)?;
        let res: Vec<f64> = fit
            .node_ids
            .iter()
            .zip(f)
            .map(|(&i, &fi)| u.values()[i] - fi)
            .collect();
        total += 0.5 * fit.arc_inner(&res, &res);
        potentials.push(u);
        residuals.push(res);
    }
    Ok(ForwardSolves { potentials, residuals, discrepancy: total })
}

/// Total data discrepancy for the conductivity behind `system`.
pub fn discrepancy(system: &StiffnessSystem, fit: &DataFit) -> Result<f64> {
    Ok(forward_solves(system, fit)?.discrepancy)
}

/// Derivative of the discrepancy as a functional on nodal perturbations.
#[derive(Debug, Clone)]
pub struct DualVector {
    mesh: Arc<Mesh>,
    coeffs: Vec<f64>,
}

impl DualVector {
    pub fn new(mesh: Arc<Mesh>, coeffs: Vec<f64>) -> Self {
        Self { mesh, coeffs }
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Pairing with a nodal perturbation field.
    pub fn apply(&self, eta: &Field) -> f64 {
        self.coeffs.iter().zip(eta.values()).map(|(r, e)| r * e).sum()
    }
}

/// Assemble the discrepancy derivative from cached forward solves: for each
/// pattern solve the adjoint problem with Neumann data
/// `chi_{Gamma_D} (Lambda_gamma g_k - f_k)`, form the per-triangle products
/// `G_k = -grad u_k . grad z_k`, and integrate them against the P1 hats
/// (each triangle contributes a third of its area per vertex). The adjoint
/// solves reuse the factorization cached in `system`.
pub fn assemble_r_prime(
    system: &StiffnessSystem,
    solves: &ForwardSolves,
    fit: &DataFit,
) -> Result<DualVector> {
    let mesh = system.mesh();
    let mut coeffs = vec![0.0; mesh.num_nodes()];
    for (u, res) in solves.potentials.iter().zip(&solves.residuals) {
        let load = nodal_load(mesh, &fit.node_ids, res);
        let (z, _) = system.solve_grounded(&load)?;
        for (t, tri) in mesh.triangles().iter().enumerate() {
            let gu = u.tri_gradient(t);
            let gz = z.tri_gradient(t);
            let g_t = -(gu[0] * gz[0] + gu[1] * gz[1]);
            let contrib = g_t * mesh.tri_areas()[t] / 3.0;
            for &v in tri {
                coeffs[v] += contrib;
            }
        }
    }
    Ok(DualVector::new(mesh.clone(), coeffs))
}

/// H1 metric and Riesz solver of one mesh: `K(1) + M` with homogeneous
/// Dirichlet rows on the boundary, factorized once and reused for every
/// gradient of every iteration (the metric does not depend on gamma).
pub struct SobolevSolver {
    mesh: Arc<Mesh>,
    h1: CsrMatrix,
    interior: Vec<usize>,
    h_ii: CsrMatrix,
    ldlt: Ldlt,
}

impl SobolevSolver {
    pub fn new(mesh: &Arc<Mesh>) -> Result<Self> {
        let ones = Field::constant(mesh.clone(), 1.0);
        let k = assemble_stiffness(mesh, &ones);
        let m = assemble_mass(mesh);
        let mut triplets = Vec::new();
        for r in 0..mesh.num_nodes() {
            let (cols, vals) = k.row(r);
            for (c, v) in cols.iter().zip(vals) {
                triplets.push((r, *c, *v));
            }
            let (cols, vals) = m.row(r);
            for (c, v) in cols.iter().zip(vals) {
                triplets.push((r, *c, *v));
            }
        }
        let h1 = CsrMatrix::from_triplets(mesh.num_nodes(), &triplets);
        let interior: Vec<usize> =
            (0..mesh.num_nodes()).filter(|&i| !mesh.is_boundary(i)).collect();
        if interior.is_empty() {
            return Err(Error::SingularSystem("mesh has no interior nodes"));
        }
        let h_ii = h1.submatrix(&interior);
        let perm = rcm(&h_ii);
        let ldlt = Ldlt::factor(&h_ii, &perm)?;
        Ok(Self { mesh: mesh.clone(), h1, interior, h_ii, ldlt })
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    /// Riesz representative of a dual vector in H1_0: solves
    /// `(K + M) v = r` on interior nodes, exact zeros on the boundary.
    pub fn gradient(&self, rp: &DualVector) -> Result<Field> {
        if !Arc::ptr_eq(rp.mesh(), &self.mesh) {
            return Err(Error::MeshDataMismatch("dual vector lives on a different mesh".into()));
        }
        let r_i: Vec<f64> = self.interior.iter().map(|&i| rp.coeffs()[i]).collect();
        let v_i = self.ldlt.solve_refined(&self.h_ii, &r_i);
        let mut v = vec![0.0; self.mesh.num_nodes()];
        for (new, &old) in self.interior.iter().enumerate() {
            v[old] = v_i[new];
        }
        Field::new(self.mesh.clone(), v)
    }

    /// Full H1(Omega) inner product `a^T (K + M) b` of two nodal fields.
    pub fn h1_inner(&self, a: &Field, b: &Field) -> f64 {
        self.h1.quadratic(a.values(), b.values())
    }

    pub fn h1_norm_sq(&self, a: &Field) -> f64 {
        self.h1_inner(a, a)
    }
}
