//! Electrical impedance tomography on the unit disk with partial boundary data.
//!
//! This crate simulates Neumann-to-Dirichlet (current-to-voltage) boundary
//! measurements for the 2D conductivity equation and reconstructs interior
//! conductivity perturbations from them. The reconstruction minimizes a
//! least-squares boundary discrepancy plus a weighted l1 penalty on the nodal
//! values of a P1 finite-element expansion, solved by a generalized
//! conditional gradient loop: Sobolev (H1) gradients, Barzilai-Borwein step
//! sizes with a nonmonotone acceptance rule, soft thresholding, and projection
//! onto the admissible set. Spatial prior knowledge about the perturbation
//! support enters through a distributed regularization weight per node. A
//! smoothed total-variation penalty driven by the same descent machinery is
//! included as a baseline for comparison.
//!
//! The crate is `no_std` (with `alloc`) and purely computational: meshing,
//! assembly, factorization, simulation, and reconstruction. File formats and
//! the command-line front end live in the companion `eit-cli` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod field;
pub mod fem;
pub mod forward;
pub mod geom;
pub mod mesh;
pub mod phantom;
pub mod prior;
pub mod recon;
pub mod sparse;
pub mod tv;

pub use error::Error;
pub use field::Field;
pub use mesh::{BoundaryArc, Mesh};

/// Result alias used throughout the crate.
pub type Result<T> = core::result::Result<T, Error>;
