//! Dense matrices, norms, SVD and bit vectors.

mod bits;
mod matrix;
mod norms;
mod solve;
mod svd;

pub use bits::{hamming_distance, BitVector};
pub(crate) use bits::hamming_unchecked;
pub use matrix::{dot, frobenius_norm, norm2, squared_distance, RealMatrix};
pub use norms::{interpolation_norm, lp_norm};
pub use solve::Cholesky;
pub use svd::{orthonormalize_columns, svd, SvdResult};
