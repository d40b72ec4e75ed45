//! Test conductivities: piecewise-constant disk and kite inclusions and
//! twice-differentiable bumps on a unit background.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;
// Resolves f64 math in no_std builds; builds that link std use the
// inherent methods instead and leave this import idle.
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::Error;
use crate::field::Field;
use crate::geom::{self, Region};
use crate::mesh::Mesh;
use crate::Result;

/// Number of segments used to polygonize the kite curve for membership
/// tests and support regions.
const KITE_SEGMENTS: usize = 256;

/// Radial profile of a smooth bump: the default quartic `(1 - t^2)^2` is C1
/// at the seam with bounded curvature; `Sextic` upgrades to `(1 - t^2)^3`,
/// which is C2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BumpProfile {
    #[default]
    Quartic,
    Sextic,
}

/// Inclusion geometry.
#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Disk {
        center: [f64; 2],
        radius: f64,
    },
    /// The standard non-convex kite curve
    /// `center + scale * R(rotation) (cos t + 0.65 cos 2t - 0.65, 1.5 sin t)`.
    Kite {
        center: [f64; 2],
        scale: f64,
        rotation: f64,
    },
    SmoothBump {
        center: [f64; 2],
        radius: f64,
        profile: BumpProfile,
    },
}

impl Shape {
    /// Points on the shape outline (used for membership and support regions).
    fn outline(&self) -> Vec<[f64; 2]> {
        match self {
            Shape::Disk { center, radius } | Shape::SmoothBump { center, radius, .. } => (0..64)
                .map(|k| {
                    let t = 2.0 * core::f64::consts::PI * k as f64 / 64.0;
                    [center[0] + radius * t.cos(), center[1] + radius * t.sin()]
                })
                .collect(),
            Shape::Kite { center, scale, rotation } => {
                let (cr, sr) = (rotation.cos(), rotation.sin());
                (0..KITE_SEGMENTS)
                    .map(|k| {
                        let t = 2.0 * core::f64::consts::PI * k as f64 / KITE_SEGMENTS as f64;
                        let x = t.cos() + 0.65 * (2.0 * t).cos() - 0.65;
                        let y = 1.5 * t.sin();
                        [
                            center[0] + scale * (cr * x - sr * y),
                            center[1] + scale * (sr * x + cr * y),
                        ]
                    })
                    .collect()
            }
        }
    }

    /// Geometric region covered by the inclusion.
    pub fn region(&self) -> Region {
        match self {
            Shape::Disk { center, radius } | Shape::SmoothBump { center, radius, .. } => {
                Region::Disk { center: *center, radius: *radius }
            }
            Shape::Kite { .. } => Region::Polygon { points: self.outline() },
        }
    }

    /// Largest distance of the shape from the origin.
    fn max_extent(&self) -> f64 {
        self.outline().iter().map(|&p| geom::norm(p)).fold(0.0, f64::max)
    }

    /// Perturbation value at a point, in units of the inclusion contrast.
    fn profile_at(&self, p: [f64; 2]) -> f64 {
        match self {
            Shape::Disk { center, radius } => {
                if geom::dist(*center, p) < *radius {
                    1.0
                } else {
                    0.0
                }
            }
            Shape::Kite { .. } => {
                if self.region().contains(p) {
                    1.0
                } else {
                    0.0
                }
            }
            Shape::SmoothBump { center, radius, profile } => {
                let t = geom::dist(*center, p) / radius;
                if t >= 1.0 {
                    0.0
                } else {
                    let base = 1.0 - t * t;
                    match profile {
                        BumpProfile::Quartic => base * base,
                        BumpProfile::Sextic => base * base * base,
                    }
                }
            }
        }
    }
}

/// One inclusion: a shape and the conductivity contrast it adds to the
/// background (the peak amplitude for smooth bumps).
#[derive(Debug, Clone, PartialEq)]
pub struct Inclusion {
    pub shape: Shape,
    pub contrast: f64,
}

/// A synthetic conductivity: constant background plus inclusions strictly
/// inside the unit disk.
#[derive(Debug, Clone, PartialEq)]
pub struct PhantomSpec {
    pub background: f64,
    pub inclusions: Vec<Inclusion>,
}

impl PhantomSpec {
    /// Validate geometry and admissibility against the bounds `[c, 1/c]`.
    pub fn validate(&self, c: f64) -> Result<()> {
        if !(c > 0.0 && c < 1.0) {
            return Err(Error::InvalidParameter(format!("admissibility constant {c}")));
        }
        if !(self.background >= c && self.background <= 1.0 / c) {
            return Err(Error::InvalidParameter(format!(
                "background {} outside [{c}, {}]",
                self.background,
                1.0 / c
            )));
        }
        for (i, inc) in self.inclusions.iter().enumerate() {
            let extent = inc.shape.max_extent();
            if extent >= 1.0 {
                return Err(Error::InvalidParameter(format!(
                    "inclusion {i} reaches radius {extent} outside the open unit disk"
                )));
            }
            let peak = self.background + inc.contrast;
            if !(peak >= c && peak <= 1.0 / c) {
                return Err(Error::InvalidParameter(format!(
                    "inclusion {i} drives sigma to {peak}, outside [{c}, {}]",
                    1.0 / c
                )));
            }
        }
        Ok(())
    }

    /// Nodal conductivity sigma = background + sum of inclusion profiles.
    pub fn rasterize(&self, mesh: &Arc<Mesh>) -> Field {
        Field::from_fn(mesh.clone(), |p| {
            self.background
                + self
                    .inclusions
                    .iter()
                    .map(|inc| inc.contrast * inc.shape.profile_at(p))
                    .sum::<f64>()
        })
    }

    /// Nodal perturbation delta sigma = sigma - background.
    pub fn delta_sigma(&self, mesh: &Arc<Mesh>) -> Field {
        Field::from_fn(mesh.clone(), |p| {
            self.inclusions
                .iter()
                .map(|inc| inc.contrast * inc.shape.profile_at(p))
                .sum::<f64>()
        })
    }

    /// Union of the inclusion supports (used for prior masks and metrics).
    pub fn support_region(&self) -> Region {
        Region::Union(self.inclusions.iter().map(|i| i.shape.region()).collect())
    }

    /// Peak conductivity value over the phantom.
    pub fn peak(&self) -> f64 {
        self.inclusions
            .iter()
            .map(|i| self.background + i.contrast)
            .fold(self.background, f64::max)
    }

    /// The circular inclusion of Fig-style studies: centered at
    /// `(0.4, 0)` with radius `0.25` and contrast `+4`.
    pub fn circular() -> Self {
        Self {
            background: 1.0,
            inclusions: alloc::vec![Inclusion {
                shape: Shape::Disk { center: [0.4, 0.0], radius: 0.25 },
                contrast: 4.0,
            }],
        }
    }

    /// Kite-shaped piecewise constant inclusion.
    pub fn kite() -> Self {
        Self {
            background: 1.0,
            inclusions: alloc::vec![Inclusion {
                shape: Shape::Kite { center: [0.1, 0.0], scale: 0.3, rotation: 0.0 },
                contrast: 4.0,
            }],
        }
    }

    /// Multiple C2 inclusions: two large bumps in the upper half and a small
    /// one in the lower half.
    pub fn multi_smooth() -> Self {
        let bump = |center: [f64; 2], radius: f64, contrast: f64| Inclusion {
            shape: Shape::SmoothBump { center, radius, profile: BumpProfile::Sextic },
            contrast,
        };
        Self {
            background: 1.0,
            inclusions: alloc::vec![
                bump([-0.35, 0.4], 0.3, 2.0),
                bump([0.35, 0.4], 0.3, 2.0),
                bump([0.0, -0.45], 0.18, 2.0),
            ],
        }
    }
}
