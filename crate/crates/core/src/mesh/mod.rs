//! Conforming triangulations of the unit disk.
//!
//! A [`Mesh`] is immutable after construction: generation, refinement, and
//! interpolation all produce new meshes, so meshes can be shared freely
//! across threads behind an `Arc`.

mod generate;
mod interp;
mod refine;

pub use generate::generate_disk_mesh;
pub use interp::interpolate;
pub use refine::{refine_where, TransferEntry, TransferMap};

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use crate::error::Error;
use crate::geom;
use crate::Result;

/// Tolerance for boundary nodes sitting on the unit circle.
pub const BOUNDARY_SNAP_TOL: f64 = 1e-10;

const TWO_PI: f64 = 2.0 * core::f64::consts::PI;

/// An angular interval `(theta1, theta2)` of the unit circle, used for both
/// the current-carrying and the measured part of the boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryArc {
    theta1: f64,
    theta2: f64,
}

impl BoundaryArc {
    /// New arc with `0 <= theta1 < theta2 <= 2*pi`. A span of exactly
    /// `2*pi` is the full boundary.
    pub fn new(theta1: f64, theta2: f64) -> Result<Self> {
        if !(theta1.is_finite() && theta2.is_finite()) {
            return Err(Error::InvalidParameter("arc angles must be finite".into()));
        }
        if !(0.0..TWO_PI).contains(&theta1) || theta2 <= theta1 || theta2 > TWO_PI {
            return Err(Error::InvalidParameter(format!(
                "arc must satisfy 0 <= theta1 < theta2 <= 2*pi, got ({theta1}, {theta2})"
            )));
        }
        Ok(Self { theta1, theta2 })
    }

    /// The full boundary.
    pub fn full() -> Self {
        Self { theta1: 0.0, theta2: TWO_PI }
    }

    pub fn theta1(&self) -> f64 {
        self.theta1
    }

    pub fn theta2(&self) -> f64 {
        self.theta2
    }

    pub fn span(&self) -> f64 {
        self.theta2 - self.theta1
    }

    pub fn is_full(&self) -> bool {
        self.span() >= TWO_PI
    }

    /// Membership of an angle. The full arc contains every angle; a partial
    /// arc contains only the open interval, so the endpoints (a set of
    /// measure zero) are excluded.
    pub fn contains(&self, theta: f64) -> bool {
        self.is_full() || (theta > self.theta1 && theta < self.theta2)
    }
}

/// Triangulation of the unit disk.
///
/// Triangles are positively oriented node-index triples. Boundary nodes are
/// kept sorted by angle and form a closed polygon inscribed in the unit
/// circle.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    nodes: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    boundary_nodes: Vec<usize>,
    boundary_theta: Vec<f64>,
    boundary_edges: Vec<[usize; 2]>,
    tri_areas: Vec<f64>,
    is_boundary: Vec<bool>,
}

impl Mesh {
    /// Build a mesh from raw nodes and positively oriented triangles,
    /// deriving boundary topology and checking conformity.
    pub fn new(nodes: Vec<[f64; 2]>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        if nodes.is_empty() || triangles.is_empty() {
            return Err(Error::MeshInvariant("empty mesh".into()));
        }
        for (i, p) in nodes.iter().enumerate() {
            if !(p[0].is_finite() && p[1].is_finite()) {
                return Err(Error::MeshInvariant(format!("non-finite node {i}")));
            }
        }
        let mut tri_areas = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= nodes.len()) {
                return Err(Error::MeshInvariant(format!("triangle {t} has bad node index")));
            }
            let a2 = geom::signed_area_x2(nodes[tri[0]], nodes[tri[1]], nodes[tri[2]]);
            if a2 <= 0.0 {
                return Err(Error::MeshInvariant(format!(
                    "triangle {t} has non-positive area {}",
                    0.5 * a2
                )));
            }
            tri_areas.push(0.5 * a2);
        }

        // Count triangles per undirected edge: 1 = boundary, 2 = interior.
        let mut edge_count: BTreeMap<(usize, usize), u32> = BTreeMap::new();
        for tri in &triangles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                *edge_count.entry(key).or_insert(0) += 1;
            }
        }
        let mut boundary_adj: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        let mut n_edges = 0usize;
        for (&(a, b), &cnt) in &edge_count {
            n_edges += 1;
            match cnt {
                1 => {
                    boundary_adj.entry(a).or_default().push(b);
                    boundary_adj.entry(b).or_default().push(a);
                }
                2 => {}
                _ => {
                    return Err(Error::MeshInvariant(format!(
                        "edge ({a},{b}) shared by {cnt} triangles"
                    )))
                }
            }
        }
        // Euler characteristic of a disk: V - E + F = 1.
        let euler = nodes.len() as i64 - n_edges as i64 + triangles.len() as i64;
        if euler != 1 {
            return Err(Error::MeshInvariant(format!("Euler characteristic {euler}, expected 1")));
        }
        for (&v, adj) in &boundary_adj {
            if adj.len() != 2 {
                return Err(Error::MeshInvariant(format!(
                    "boundary node {v} has {} boundary edges",
                    adj.len()
                )));
            }
        }

        // Boundary nodes sorted by angle (ties by index) must walk the
        // boundary cycle; this holds for star-shaped domains like the disk.
        let mut boundary_nodes: Vec<usize> = boundary_adj.keys().copied().collect();
        boundary_nodes.sort_by(|&i, &j| {
            geom::angle_of(nodes[i])
                .total_cmp(&geom::angle_of(nodes[j]))
                .then(i.cmp(&j))
        });
        let boundary_theta: Vec<f64> =
            boundary_nodes.iter().map(|&i| geom::angle_of(nodes[i])).collect();
        let nb = boundary_nodes.len();
        let mut boundary_edges = Vec::with_capacity(nb);
        for k in 0..nb {
            let a = boundary_nodes[k];
            let b = boundary_nodes[(k + 1) % nb];
            if !boundary_adj[&a].contains(&b) {
                return Err(Error::MeshInvariant(format!(
                    "boundary nodes {a} and {b} are angular neighbours but share no edge"
                )));
            }
            boundary_edges.push([a, b]);
        }

        let mut is_boundary = vec![false; nodes.len()];
        for &b in &boundary_nodes {
            is_boundary[b] = true;
        }

        Ok(Self {
            nodes,
            triangles,
            boundary_nodes,
            boundary_theta,
            boundary_edges,
            tri_areas,
            is_boundary,
        })
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    /// Boundary node indices sorted by angle.
    pub fn boundary_nodes(&self) -> &[usize] {
        &self.boundary_nodes
    }

    /// Angle of each boundary node, aligned with [`Self::boundary_nodes`].
    pub fn boundary_theta(&self) -> &[f64] {
        &self.boundary_theta
    }

    /// Consecutive boundary node pairs, closing the polygon.
    pub fn boundary_edges(&self) -> &[[usize; 2]] {
        &self.boundary_edges
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        self.is_boundary[node]
    }

    /// Area of each triangle.
    pub fn tri_areas(&self) -> &[f64] {
        &self.tri_areas
    }

    pub fn total_area(&self) -> f64 {
        self.tri_areas.iter().sum()
    }

    pub fn max_edge_len(&self) -> f64 {
        let mut m: f64 = 0.0;
        for tri in &self.triangles {
            for k in 0..3 {
                m = m.max(geom::dist(self.nodes[tri[k]], self.nodes[tri[(k + 1) % 3]]));
            }
        }
        m
    }

    /// Node areas: each triangle contributes a third of its area to each of
    /// its vertices. Their sum is exactly the mesh area, and for a P1 hat
    /// function the value doubles as its L1 norm.
    pub fn node_areas(&self) -> Vec<f64> {
        let mut beta = vec![0.0; self.nodes.len()];
        for (t, tri) in self.triangles.iter().enumerate() {
            let third = self.tri_areas[t] / 3.0;
            for &v in tri {
                beta[v] += third;
            }
        }
        beta
    }

    /// Trapezoidal boundary quadrature weights: half the length of the two
    /// adjacent boundary edges for boundary nodes, zero for interior nodes.
    pub fn boundary_weights(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.nodes.len()];
        for e in &self.boundary_edges {
            let half = 0.5 * geom::dist(self.nodes[e[0]], self.nodes[e[1]]);
            w[e[0]] += half;
            w[e[1]] += half;
        }
        w
    }

    /// Characteristic function of an arc sampled at the boundary nodes,
    /// aligned with [`Self::boundary_nodes`]. Nodes strictly inside the arc
    /// get weight 1, endpoints and outside nodes get 0.
    pub fn arc_mask(&self, arc: &BoundaryArc) -> Vec<f64> {
        self.boundary_theta
            .iter()
            .map(|&t| if arc.contains(t) { 1.0 } else { 0.0 })
            .collect()
    }

    /// Mesh node indices of boundary nodes strictly inside the arc,
    /// in angular order.
    pub fn arc_node_ids(&self, arc: &BoundaryArc) -> Vec<usize> {
        self.boundary_nodes
            .iter()
            .zip(&self.boundary_theta)
            .filter(|(_, &t)| arc.contains(t))
            .map(|(&i, _)| i)
            .collect()
    }

    /// Check the disk-specific invariant that every boundary node lies on
    /// the unit circle within [`BOUNDARY_SNAP_TOL`].
    pub fn validate_disk(&self) -> Result<()> {
        for &b in &self.boundary_nodes {
            let r = geom::norm(self.nodes[b]);
            if (r - 1.0).abs() > BOUNDARY_SNAP_TOL {
                return Err(Error::MeshInvariant(format!(
                    "boundary node {b} at radius {r} is off the unit circle"
                )));
            }
        }
        Ok(())
    }

    /// Gradient of the P1 basis functions on a triangle: returns
    /// (gradients of the three hats, triangle area).
    pub(crate) fn p1_gradients(&self, t: usize) -> ([[f64; 2]; 3], f64) {
        let [i, j, k] = self.triangles[t];
        let (a, b, c) = (self.nodes[i], self.nodes[j], self.nodes[k]);
        let inv2a = 1.0 / (2.0 * self.tri_areas[t]);
        // grad of hat at vertex v is the inward normal of the opposite edge
        // scaled by 1/(2*area).
        let g = [
            [(b[1] - c[1]) * inv2a, (c[0] - b[0]) * inv2a],
            [(c[1] - a[1]) * inv2a, (a[0] - c[0]) * inv2a],
            [(a[1] - b[1]) * inv2a, (b[0] - a[0]) * inv2a],
        ];
        (g, self.tri_areas[t])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::sync::Arc;

    pub(crate) fn unit_triangle_mesh() -> Mesh {
        Mesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![[0, 1, 2]],
        )
        .unwrap()
    }

    #[test]
    fn arc_invariants() {
        assert!(BoundaryArc::new(1.0, 1.0).is_err());
        assert!(BoundaryArc::new(-0.1, 1.0).is_err());
        assert!(BoundaryArc::new(0.0, 7.0).is_err());
        let full = BoundaryArc::new(0.0, TWO_PI).unwrap();
        assert!(full.is_full());
        assert_eq!(full, BoundaryArc::full());
        assert!(full.contains(0.0));
        let half = BoundaryArc::new(0.0, core::f64::consts::PI).unwrap();
        assert!(!half.is_full());
        assert!(half.contains(1.0));
        assert!(!half.contains(0.0)); // endpoint excluded
        assert!(!half.contains(4.0));
    }

    #[test]
    fn single_triangle_node_areas() {
        let mesh = unit_triangle_mesh();
        let beta = mesh.node_areas();
        for b in beta {
            assert!((b - 0.5 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn node_areas_sum_to_area() {
        let mesh = Arc::new(generate_disk_mesh(0.2).unwrap());
        let beta = mesh.node_areas();
        let total: f64 = beta.iter().sum();
        let area = mesh.total_area();
        assert!((total - area).abs() <= 1e-12 * area);
        assert!(beta.iter().all(|&b| b > 0.0));
    }

    #[test]
    fn hub_node_shared_by_six_triangles() {
        // Center of the coarsest disk mesh is shared by 6 equal triangles.
        let mesh = generate_disk_mesh(0.9).unwrap();
        let mut hub_areas = Vec::new();
        for (t, tri) in mesh.triangles().iter().enumerate() {
            if tri.contains(&0) {
                hub_areas.push(mesh.tri_areas()[t]);
            }
        }
        assert_eq!(hub_areas.len(), 6);
        let a = hub_areas[0];
        assert!(hub_areas.iter().all(|&x| (x - a).abs() < 1e-14));
        assert!((mesh.node_areas()[0] - 2.0 * a).abs() < 1e-14);
    }

    #[test]
    fn rejects_flipped_triangle() {
        let r = Mesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![[0, 2, 1]],
        );
        assert!(r.is_err());
    }
}
