//! Lambda-polyharmonic functions for the simple random walk on the
//! homogeneous tree `T_q`.
//!
//! The crate computes the spectral constants of the walk, spherical and
//! polyspherical functions, Poisson–Martin transforms of boundary data and
//! the normalized boundary limits of those transforms.

pub mod boundary;
pub mod error;
pub mod extended;
pub mod operators;
pub mod oracle;
pub mod scaled;
pub mod solvers;
pub mod spectral;
pub mod spherical;
pub mod suite;
pub mod table;
pub mod tree;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use scaled::Scaled;
pub use spectral::{ComplexScalar, Regime, SpectralContext, TreeParams};
pub use tree::{Cone, End, Vertex};
