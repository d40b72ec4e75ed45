//! Structured disk meshing with concentric rings.
//!
//! Ring `i` of `R` carries `6*i` nodes at radius `i/R`, which keeps radial
//! and tangential spacing within a factor ~1.05 of each other and places the
//! boundary nodes uniformly on the unit circle. Consecutive rings are
//! stitched by an angular two-pointer sweep.

use alloc::format;
use alloc::vec::Vec;
// Resolves f64 math in no_std builds; builds that link std use the
// inherent methods instead and leave this import idle.
#[allow(unused_imports)]
use num_traits::Float;
use crate::error::Error;
use crate::Result;

use super::Mesh;

/// Generate a quasi-uniform triangulation of the unit disk with target edge
/// length `h` (maximum edge length stays below `1.5*h`).
pub fn generate_disk_mesh(h: f64) -> Result<Mesh> {
    if !(h > 0.0 && h < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "disk mesh edge length must lie in (0, 1), got {h}"
        )));
    }
    let rings = (1.0 / h).ceil() as usize;
    let rings = rings.max(2);

    let mut nodes: Vec<[f64; 2]> = Vec::with_capacity(1 + 3 * rings * (rings + 1));
    nodes.push([0.0, 0.0]);
    let mut ring_start = Vec::with_capacity(rings + 1);
    ring_start.push(0usize); // ring 0 is the single center node
    for i in 1..=rings {
        ring_start.push(nodes.len());
        let count = 6 * i;
        let radius = i as f64 / rings as f64;
        for k in 0..count {
            let theta = 2.0 * core::f64::consts::PI * k as f64 / count as f64;
            // The outermost ring lands exactly on the unit circle.
            nodes.push([radius * theta.cos(), radius * theta.sin()]);
        }
    }

    let mut triangles: Vec<[usize; 3]> = Vec::with_capacity(6 * rings * rings);
    // Center fan.
    for k in 0..6usize {
        triangles.push([0, 1 + k, 1 + (k + 1) % 6]);
    }
    // Strips between consecutive rings, merged by normalized angle.
    for i in 1..rings {
        let (n1, n2) = (6 * i, 6 * (i + 1));
        let inner = ring_start[i];
        let outer = ring_start[i + 1];
        let mut a = 0usize;
        let mut b = 0usize;
        while a < n1 || b < n2 {
            let next_inner = (a + 1) as f64 / n1 as f64;
            let next_outer = (b + 1) as f64 / n2 as f64;
            if b < n2 && (a == n1 || next_outer < next_inner) {
                triangles.push([inner + a % n1, outer + b % n2, outer + (b + 1) % n2]);
                b += 1;
            } else {
                triangles.push([inner + a % n1, outer + (b % n2), inner + (a + 1) % n1]);
                a += 1;
            }
        }
    }

    let mesh = Mesh::new(nodes, triangles)?;
    mesh.validate_disk()?;
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coarse_mesh_area_within_five_percent() {
        let mesh = generate_disk_mesh(0.5).unwrap();
        assert!(mesh.num_triangles() >= 12);
        let area = mesh.total_area();
        assert!(
            (area - core::f64::consts::PI).abs() < 0.05 * core::f64::consts::PI,
            "area {area}"
        );
    }

    #[test]
    fn fine_mesh_area_within_two_permille() {
        let mesh = generate_disk_mesh(0.05).unwrap();
        let area = mesh.total_area();
        assert!((area - core::f64::consts::PI).abs() < 0.002 * core::f64::consts::PI);
    }

    #[test]
    fn max_edge_length_bound() {
        for h in [0.5, 0.21, 0.1, 0.047] {
            let mesh = generate_disk_mesh(h).unwrap();
            assert!(mesh.max_edge_len() <= 1.5 * h, "h = {h}");
        }
    }

    #[test]
    fn rejects_bad_edge_length() {
        assert!(generate_disk_mesh(0.0).is_err());
        assert!(generate_disk_mesh(1.0).is_err());
        assert!(generate_disk_mesh(-0.1).is_err());
        assert!(generate_disk_mesh(f64::NAN).is_err());
    }

    #[test]
    fn boundary_is_uniform_and_sorted() {
        let mesh = generate_disk_mesh(0.3).unwrap();
        let theta = mesh.boundary_theta();
        assert!(theta.windows(2).all(|w| w[0] < w[1]));
        let n = theta.len();
        let step = 2.0 * core::f64::consts::PI / n as f64;
        for (k, &t) in theta.iter().enumerate() {
            assert!((t - k as f64 * step).abs() < 1e-12);
        }
    }
}

