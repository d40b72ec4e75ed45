//! Spatially distributed regularization weights.
//!
//! Prior knowledge of the perturbation support enters through per-node
//! factors mu_j: close to zero where the support is assumed (little
//! penalization), one elsewhere. The node penalty weight is
//! `alpha_j = alpha * beta_j * mu_j`, where the node area beta_j makes the
//! discrete weighted l1 penalty approximate `alpha * int mu |delta gamma|`
//! and thereby keeps a good alpha nearly mesh-independent.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::error::Error;
use crate::field::Field;
use crate::geom::Region;
use crate::mesh::Mesh;
use crate::Result;

/// Assumed support region with inside/outside weights and a relative
/// dilation applied about the region centroid.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorMask {
    /// Assumed support of the perturbation; `None` means no prior.
    pub region: Option<Region>,
    /// Weight inside the (dilated) region, in (0, 1].
    pub mu_in: f64,
    /// Weight outside, in (0, 1].
    pub mu_out: f64,
    /// Signed relative dilation: the region is scaled by `1 + delta_r`.
    pub delta_r: f64,
}

impl PriorMask {
    /// No prior information: mu = 1 everywhere.
    pub fn none() -> Self {
        Self { region: None, mu_in: 1e-2, mu_out: 1.0, delta_r: 0.0 }
    }

    /// Prior support with the default weights (1e-2 inside, 1 outside).
    pub fn around(region: Region, delta_r: f64) -> Self {
        Self { region: Some(region), mu_in: 1e-2, mu_out: 1.0, delta_r }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("mu_in", self.mu_in), ("mu_out", self.mu_out)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::InvalidParameter(format!("{name} must lie in (0, 1], got {v}")));
            }
        }
        if !(1.0 + self.delta_r > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "dilation factor 1 + delta_r must be positive, got delta_r = {}",
                self.delta_r
            )));
        }
        Ok(())
    }

    /// Nodal mu field: `mu_in` at nodes inside the dilated region, `mu_out`
    /// outside, identically 1 without a region.
    pub fn mu_field(&self, mesh: &Arc<Mesh>) -> Result<Field> {
        self.validate()?;
        Ok(match &self.region {
            None => Field::constant(mesh.clone(), 1.0),
            Some(region) => {
                let dilated = region.scaled(1.0 + self.delta_r);
                let (mu_in, mu_out) = (self.mu_in, self.mu_out);
                Field::from_fn(mesh.clone(), |p| {
                    if dilated.contains(p) {
                        mu_in
                    } else {
                        mu_out
                    }
                })
            }
        })
    }
}

/// Per-node penalty weights `alpha_j = alpha * beta_j * mu_j`.
pub fn alpha_weights(alpha: f64, mu: &Field, beta: &[f64]) -> Result<Vec<f64>> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
    }
    if mu.len() != beta.len() {
        return Err(Error::MeshDataMismatch("mu and node areas disagree in length".into()));
    }
    Ok(mu.values().iter().zip(beta).map(|(m, b)| alpha * b * m).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generate_disk_mesh;
    use crate::phantom::PhantomSpec;

    fn disk(h: f64) -> Arc<Mesh> {
        Arc::new(generate_disk_mesh(h).unwrap())
    }

    #[test]
    fn no_region_means_unit_weights() {
        let mesh = disk(0.2);
        let mu = PriorMask::none().mu_field(&mesh).unwrap();
        assert!(mu.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn disk_region_marks_inside_nodes() {
        let mesh = disk(0.1);
        let region = Region::Disk { center: [0.4, 0.0], radius: 0.25 };
        let mu = PriorMask::around(region.clone(), 0.0).mu_field(&mesh).unwrap();
        for (&p, &v) in mesh.nodes().iter().zip(mu.values()) {
            let expect = if region.contains(p) { 1e-2 } else { 1.0 };
            assert_eq!(v, expect, "at {p:?}");
        }
    }

    #[test]
    fn dilation_grows_the_marked_set() {
        let mesh = disk(0.08);
        let region = Region::Disk { center: [0.4, 0.0], radius: 0.25 };
        let tight = PriorMask::around(region.clone(), 0.0).mu_field(&mesh).unwrap();
        let wide = PriorMask::around(region, 0.25).mu_field(&mesh).unwrap();
        for (t, w) in tight.values().iter().zip(wide.values()) {
            assert!(w <= t, "dilated set must contain the tight set");
        }
        let count = |f: &Field| f.values().iter().filter(|&&v| v < 1.0).count();
        assert!(count(&wide) > count(&tight));
    }

    #[test]
    fn shrinking_below_nothing_rejected() {
        let mask = PriorMask::around(Region::Disk { center: [0.0, 0.0], radius: 0.2 }, -1.0);
        assert!(mask.validate().is_err());
    }

    #[test]
    fn alpha_weights_formulas() {
        let mesh = disk(0.2);
        let beta = mesh.node_areas();
        let mu = PriorMask::none().mu_field(&mesh).unwrap();
        let a = alpha_weights(0.5, &mu, &beta).unwrap();
        for (ai, bi) in a.iter().zip(&beta) {
            assert!((ai - 0.5 * bi).abs() < 1e-18);
        }
        // With mu = 1 and delta gamma = 1 the penalty is alpha * mesh area.
        let penalty: f64 = a.iter().sum();
        assert!((penalty - 0.5 * mesh.total_area()).abs() < 1e-13);
    }

    /// The area weighting makes the discrete penalty of a fixed perturbation
    /// nearly mesh-independent.
    #[test]
    fn penalty_is_mesh_independent() {
        let spec = PhantomSpec::circular();
        let mut penalties = Vec::new();
        for h in [0.05, 0.025] {
            let mesh = disk(h);
            let ds = spec.delta_sigma(&mesh);
            let beta = mesh.node_areas();
            let mu = PriorMask::none().mu_field(&mesh).unwrap();
            let a = alpha_weights(1.0, &mu, &beta).unwrap();
            let p: f64 = a.iter().zip(ds.values()).map(|(ai, v)| ai * v.abs()).sum();
            penalties.push(p);
        }
        let rel = (penalties[0] - penalties[1]).abs() / penalties[1];
        assert!(rel < 0.05, "penalties {penalties:?} differ by {rel}");
    }
}
