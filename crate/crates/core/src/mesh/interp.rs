//! Inter-mesh interpolation via point location on a uniform grid.

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
use crate::geom;
use crate::Result;

use super::Mesh;

/// Barycentric slack tolerated before a query point is treated as genuinely
/// outside the source mesh. Boundary nodes of a finer target mesh fall in
/// the sliver between the source hull and the unit circle by at most
/// O(h^2), far below this bound, and extrapolating from the best triangle's
/// plane keeps interpolation exact for globally affine fields.
const SLIVER_TOL: f64 = 0.05;

/// Spatial index: triangles bucketed on a uniform grid over the unit square.
pub(crate) struct TriangleLocator<'a> {
    mesh: &'a Mesh,
    cell: f64,
    per_axis: usize,
    buckets: Vec<Vec<u32>>,
}

impl<'a> TriangleLocator<'a> {
    pub fn new(mesh: &'a Mesh) -> Self {
        let cell = mesh.max_edge_len().max(1e-6);
        let per_axis = ((2.2 / cell).ceil() as usize).clamp(1, 4096);
        let cell = 2.2 / per_axis as f64;
        let mut buckets = vec![Vec::new(); per_axis * per_axis];
        let index = |x: f64| -> usize {
            (((x + 1.1) / cell) as isize).clamp(0, per_axis as isize - 1) as usize
        };
        for (t, tri) in mesh.triangles().iter().enumerate() {
            let xs = tri.map(|v| mesh.nodes()[v][0]);
            let ys = tri.map(|v| mesh.nodes()[v][1]);
            let (x0, x1) = (index(xs.iter().copied().fold(f64::INFINITY, f64::min)),
                            index(xs.iter().copied().fold(f64::NEG_INFINITY, f64::max)));
            let (y0, y1) = (index(ys.iter().copied().fold(f64::INFINITY, f64::min)),
                            index(ys.iter().copied().fold(f64::NEG_INFINITY, f64::max)));
            for gy in y0..=y1 {
                for gx in x0..=x1 {
                    buckets[gy * per_axis + gx].push(t as u32);
                }
            }
        }
        Self { mesh, cell, per_axis, buckets }
    }

    /// Triangle whose barycentric coordinates of `p` have the largest
    /// minimum, searching outward from the containing grid cell. Ties break
    /// to the lowest triangle index.
    pub fn locate(&self, p: [f64; 2]) -> (usize, [f64; 3]) {
        let index = |x: f64| -> isize { ((x + 1.1) / self.cell) as isize };
        let (cx, cy) = (index(p[0]), index(p[1]));
        let mut best: Option<(usize, [f64; 3], f64)> = None;
        let consider = |t: usize, best: &mut Option<(usize, [f64; 3], f64)>| {
            let tri = self.mesh.triangles()[t];
            let w = geom::barycentric(
                p,
                self.mesh.nodes()[tri[0]],
                self.mesh.nodes()[tri[1]],
                self.mesh.nodes()[tri[2]],
            );
            let score = w[0].min(w[1]).min(w[2]);
            if best.as_ref().is_none_or(|&(bt, _, bs)| score > bs || (score == bs && t < bt)) {
                *best = Some((t, w, score));
            }
        };
        for ring in 0..self.per_axis as isize {
            let (x0, x1) = (cx - ring, cx + ring);
            let (y0, y1) = (cy - ring, cy + ring);
            for gy in y0..=y1 {
                for gx in x0..=x1 {
                    if ring > 0 && gx > x0 && gx < x1 && gy > y0 && gy < y1 {
                        continue; // interior of the ring was already visited
                    }
                    if gx < 0 || gy < 0 || gx >= self.per_axis as isize || gy >= self.per_axis as isize
                    {
                        continue;
                    }
                    for &t in &self.buckets[gy as usize * self.per_axis + gx as usize] {
                        consider(t as usize, &mut best);
                    }
                }
            }
            // A containing or sliver-adjacent triangle ends the search; only
            // points far outside the mesh keep expanding.
            if let Some((_, _, score)) = best {
                if score >= -SLIVER_TOL {
                    break;
                }
            }
        }
        let (t, w, _) = best.expect("mesh has at least one triangle");
        (t, w)
    }
}

/// Interpolation weights for evaluating a source-mesh P1 field at `p`.
///
/// Inside the mesh these are plain barycentric coordinates. Points in the
/// sliver between the mesh hull and the unit circle extrapolate the nearest
/// triangle's plane (exact for affine fields); anything further out is
/// clamped to that triangle's closure.
pub(crate) fn eval_weights(locator: &TriangleLocator, p: [f64; 2]) -> (usize, [f64; 3]) {
    let (t, mut w) = locator.locate(p);
    let score = w[0].min(w[1]).min(w[2]);
    if score < -SLIVER_TOL {
        for v in &mut w {
            *v = v.max(0.0);
        }
        let sum = w[0] + w[1] + w[2];
        for v in &mut w {
            *v /= sum;
        }
    }
    (t, w)
}

/// Evaluate `field` at the nodes of `target`, producing a field on `target`.
pub fn interpolate(field: &Field, target: &Arc<Mesh>) -> Result<Field> {
    for (i, &p) in target.nodes().iter().enumerate() {
        if geom::norm(p) > 1.0 + 1e-9 {
            return Err(Error::MeshDataMismatch(format!(
                "target node {i} lies outside the closed unit disk"
            )));
        }
    }
    let locator = TriangleLocator::new(field.mesh());
    let src = field.mesh();
    let values = target
        .nodes()
        .iter()
        .map(|&p| {
            let (t, w) = eval_weights(&locator, p);
            let tri = src.triangles()[t];
            w[0] * field.values()[tri[0]]
                + w[1] * field.values()[tri[1]]
                + w[2] * field.values()[tri[2]]
        })
        .collect();
    Field::new(target.clone(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generate_disk_mesh;

    #[test]
    fn constant_reproduced() {
        let fine = Arc::new(generate_disk_mesh(0.1).unwrap());
        let coarse = Arc::new(generate_disk_mesh(0.33).unwrap());
        let f = Field::constant(fine, 1.0);
        let g = interpolate(&f, &coarse).unwrap();
        for &v in g.values() {
            assert!((v - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn affine_exact_on_target_nodes() {
        let fine = Arc::new(generate_disk_mesh(0.07).unwrap());
        let coarse = Arc::new(generate_disk_mesh(0.26).unwrap());
        let f = Field::from_fn(fine, |p| p[0] + 2.0 * p[1]);
        let g = interpolate(&f, &coarse).unwrap();
        for (&v, &p) in g.values().iter().zip(coarse.nodes()) {
            assert!((v - (p[0] + 2.0 * p[1])).abs() < 1e-12, "at {p:?}");
        }
    }

    #[test]
    fn quadratic_error_is_second_order() {
        let fine = Arc::new(generate_disk_mesh(0.02).unwrap());
        let coarse = Arc::new(generate_disk_mesh(0.1).unwrap());
        let f = Field::from_fn(fine, |p| p[0] * p[0] + p[1] * p[1]);
        let g = interpolate(&f, &coarse).unwrap();
        let mut max_err: f64 = 0.0;
        for (&v, &p) in g.values().iter().zip(coarse.nodes()) {
            max_err = max_err.max((v - (p[0] * p[0] + p[1] * p[1])).abs());
        }
        assert!(max_err < 0.01, "max error {max_err}");
    }

    #[test]
    fn same_mesh_is_identity() {
        let mesh = Arc::new(generate_disk_mesh(0.2).unwrap());
        let f = Field::from_fn(mesh.clone(), |p| (3.0 * p[0]).sin() + p[1]);
        let g = interpolate(&f, &mesh).unwrap();
        for (a, b) in f.values().iter().zip(g.values()) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn rejects_target_outside_domain() {
        let fine = Arc::new(generate_disk_mesh(0.2).unwrap());
        let bad = Arc::new(
            crate::mesh::Mesh::new(
                alloc::vec![[0.0, 0.0], [3.0, 0.0], [0.0, 3.0]],
                alloc::vec![[0, 1, 2]],
            )
            .unwrap(),
        );
        let f = Field::constant(fine, 1.0);
        assert!(interpolate(&f, &bad).is_err());
    }
}
