//! Plane geometry helpers: triangles, polygons, and geometric regions.

use alloc::vec::Vec;
// Resolves f64 math in no_std builds; builds that link std use the
// inherent methods instead and leave this import idle.
#[allow(unused_imports)]
use num_traits::Float;
/// Twice the signed area of triangle (a, b, c); positive for
/// counter-clockwise orientation.
pub fn signed_area_x2(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

pub fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1])).sqrt()
}

pub fn norm(p: [f64; 2]) -> f64 {
    (p[0] * p[0] + p[1] * p[1]).sqrt()
}

/// Angle of `p` in `[0, 2*pi)`.
pub fn angle_of(p: [f64; 2]) -> f64 {
    let t = p[1].atan2(p[0]);
    if t < 0.0 {
        t + 2.0 * core::f64::consts::PI
    } else {
        t
    }
}

/// Barycentric coordinates of `p` with respect to triangle (a, b, c).
/// Coordinates sum to 1; any may be negative when `p` lies outside.
pub fn barycentric(p: [f64; 2], a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> [f64; 3] {
    let d = signed_area_x2(a, b, c);
    let wa = signed_area_x2(p, b, c) / d;
    let wb = signed_area_x2(a, p, c) / d;
    let wc = 1.0 - wa - wb;
    [wa, wb, wc]
}

/// Signed area of a simple polygon (shoelace formula).
pub fn polygon_area(points: &[[f64; 2]]) -> f64 {
    let n = points.len();
    let mut acc = 0.0;
    for i in 0..n {
        let p = points[i];
        let q = points[(i + 1) % n];
        acc += p[0] * q[1] - q[0] * p[1];
    }
    0.5 * acc
}

/// Area centroid of a simple polygon.
pub fn polygon_centroid(points: &[[f64; 2]]) -> [f64; 2] {
    let n = points.len();
    let mut cx = 0.0;
    let mut cy = 0.0;
    let mut a = 0.0;
    for i in 0..n {
        let p = points[i];
        let q = points[(i + 1) % n];
        let w = p[0] * q[1] - q[0] * p[1];
        a += w;
        cx += (p[0] + q[0]) * w;
        cy += (p[1] + q[1]) * w;
    }
    [cx / (3.0 * a), cy / (3.0 * a)]
}

/// Winding-number point-in-polygon test (nonzero rule).
pub fn polygon_contains(points: &[[f64; 2]], p: [f64; 2]) -> bool {
    let n = points.len();
    let mut winding = 0i32;
    for i in 0..n {
        let a = points[i];
        let b = points[(i + 1) % n];
        if a[1] <= p[1] {
            if b[1] > p[1] && signed_area_x2(a, b, p) > 0.0 {
                winding += 1;
            }
        } else if b[1] <= p[1] && signed_area_x2(a, b, p) < 0.0 {
            winding -= 1;
        }
    }
    winding != 0
}

/// A geometric subset of the plane used for prior masks and region metrics.
#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    Disk { center: [f64; 2], radius: f64 },
    Polygon { points: Vec<[f64; 2]> },
    Union(Vec<Region>),
}

impl Region {
    pub fn contains(&self, p: [f64; 2]) -> bool {
        match self {
            Region::Disk { center, radius } => dist(*center, p) < *radius,
            Region::Polygon { points } => polygon_contains(points, p),
            Region::Union(parts) => parts.iter().any(|r| r.contains(p)),
        }
    }

    /// Area of the region. Unions are treated as disjoint (overlaps counted
    /// twice); the masks built from them only need membership, not measure.
    pub fn area(&self) -> f64 {
        match self {
            Region::Disk { radius, .. } => core::f64::consts::PI * radius * radius,
            Region::Polygon { points } => polygon_area(points).abs(),
            Region::Union(parts) => parts.iter().map(Region::area).sum(),
        }
    }

    /// Area centroid (area-weighted over union parts).
    pub fn centroid(&self) -> [f64; 2] {
        match self {
            Region::Disk { center, .. } => *center,
            Region::Polygon { points } => polygon_centroid(points),
            Region::Union(parts) => {
                let mut cx = 0.0;
                let mut cy = 0.0;
                let mut a = 0.0;
                for r in parts {
                    let w = r.area();
                    let c = r.centroid();
                    cx += w * c[0];
                    cy += w * c[1];
                    a += w;
                }
                [cx / a, cy / a]
            }
        }
    }

    /// Scale the region by `factor` about a fixed point.
    pub fn scaled_about(&self, factor: f64, pivot: [f64; 2]) -> Region {
        let map = |p: [f64; 2]| {
            [
                pivot[0] + factor * (p[0] - pivot[0]),
                pivot[1] + factor * (p[1] - pivot[1]),
            ]
        };
        match self {
            Region::Disk { center, radius } => Region::Disk {
                center: map(*center),
                radius: factor * radius,
            },
            Region::Polygon { points } => Region::Polygon {
                points: points.iter().map(|&p| map(p)).collect(),
            },
            Region::Union(parts) => {
                Region::Union(parts.iter().map(|r| r.scaled_about(factor, pivot)).collect())
            }
        }
    }

    /// Scale the region by `factor` about its own centroid.
    pub fn scaled(&self, factor: f64) -> Region {
        self.scaled_about(factor, self.centroid())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shoelace_unit_square() {
        let sq = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        assert!((polygon_area(&sq) - 1.0).abs() < 1e-15);
        let c = polygon_centroid(&sq);
        assert!((c[0] - 0.5).abs() < 1e-15 && (c[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn winding_number_concave() {
        // L-shaped polygon.
        let l = [
            [0.0, 0.0],
            [2.0, 0.0],
            [2.0, 1.0],
            [1.0, 1.0],
            [1.0, 2.0],
            [0.0, 2.0],
        ];
        assert!(polygon_contains(&l, [0.5, 1.5]));
        assert!(polygon_contains(&l, [1.5, 0.5]));
        assert!(!polygon_contains(&l, [1.5, 1.5]));
    }

    #[test]
    fn disk_dilation_keeps_center() {
        let r = Region::Disk { center: [0.3, -0.2], radius: 0.25 };
        let d = r.scaled(1.25);
        match d {
            Region::Disk { center, radius } => {
                assert_eq!(center, [0.3, -0.2]);
                assert!((radius - 0.3125).abs() < 1e-15);
            }
            _ => panic!("dilated disk is a disk"),
        }
    }

    #[test]
    fn barycentric_sums_to_one() {
        let (a, b, c) = ([0.0, 0.0], [1.0, 0.0], [0.0, 1.0]);
        let w = barycentric([0.2, 0.3], a, b, c);
        assert!((w[0] + w[1] + w[2] - 1.0).abs() < 1e-14);
        assert!((w[1] - 0.2).abs() < 1e-14);
        assert!((w[2] - 0.3).abs() < 1e-14);
    }
}
