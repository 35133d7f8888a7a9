//! Linear and nonlinear random projections, with Monte Carlo verifiers for
//! the distortion guarantees each construction comes with.
//!
//! Data matrices are `d × n`: one column per sample.

pub mod data;
pub mod ensemble;
pub mod error;
pub mod linalg;
pub mod hypercube;
pub mod io;
pub mod layers;
pub mod linear;
pub mod lowrank;
pub mod random;
pub mod rff;
pub mod rks;

pub use error::{Error, Result};
pub use linalg::{BitVector, RealMatrix, SvdResult};
pub use random::{DistributionSpec, ProjectionMatrix, SignVector, Stream};
