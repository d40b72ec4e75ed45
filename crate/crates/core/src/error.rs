//! Error type shared by all modules.

use alloc::string::String;
use core::fmt;

/// Errors produced by meshing, assembly, simulation, and reconstruction.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A caller-supplied parameter is out of its documented range.
    InvalidParameter(String),
    /// A mesh failed a structural invariant (orientation, conformity, boundary).
    MeshInvariant(String),
    /// Conductivity values left the admissible interval `[c, 1/c]`;
    /// inside the reconstruction loop this signals a projection bug.
    AdmissibilityViolation { node: usize, value: f64 },
    /// Neumann data whose boundary integral is too far from zero.
    IncompatibleNeumannData { mean: f64, norm: f64 },
    /// A linear system that should be regular could not be factorized,
    /// e.g. a measurement arc containing no boundary nodes.
    SingularSystem(&'static str),
    /// Boundary data and mesh disagree (sample count, arc, node match).
    MeshDataMismatch(String),
    /// Simulation and reconstruction on the same mesh without the override.
    InverseCrime,
    /// A NaN or infinity showed up where a finite value is required.
    NonFinite(&'static str),
}

impl Error {
    /// True for errors caused by bad configuration rather than numerics.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter(_) | Error::MeshDataMismatch(_) | Error::InverseCrime
        )
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::MeshInvariant(msg) => write!(f, "mesh invariant violated: {msg}"),
            Error::AdmissibilityViolation { node, value } => {
                write!(f, "conductivity out of bounds at node {node}: {value}")
            }
            Error::IncompatibleNeumannData { mean, norm } => {
                write!(f, "Neumann data not mean-free: integral {mean:e} vs norm {norm:e}")
            }
            Error::SingularSystem(what) => write!(f, "singular system: {what}"),
            Error::MeshDataMismatch(msg) => write!(f, "mesh/data mismatch: {msg}"),
            Error::InverseCrime => write!(
                f,
                "simulation and reconstruction meshes are identical; pass the explicit override to allow this"
            ),
            Error::NonFinite(what) => write!(f, "non-finite value in {what}"),
        }
    }
}
