//! Tensor algebra for features that transform under rotations.
//!
//! Features are stored as flat arrays partitioned into irreducible blocks by
//! an [`IrrepsSignature`]. Everything here works in the *real* spherical
//! harmonic basis with a single fixed component ordering, documented on
//! [`IrrepsSignature`]: blocks sorted by (degree, parity), channels outer,
//! orders m = -l..l inner. Clebsch-Gordan tables use the orthonormal coupling
//! convention (see [`cg`]) and are built once for degrees l <= 4, then shared.
//!
//! All operations are pure functions of their inputs and safe to call
//! concurrently.

mod array;
pub mod cg;
mod error;
mod linear;
mod norm;
mod rotation;
pub mod sh;
mod tensor;
pub mod wigner;

pub use array::{Irrep, IrrepsArray, IrrepsSignature, Parity};
pub use cg::{cg_coefficient, cg_table, CgTable, ELL_MAX};
pub use error::IrrepsError;
pub use linear::{equivariant_linear, LinearWeights};
pub use norm::{norm_eps, separable_layer_norm, LayerNormParams, NormParams};
pub use rotation::Rotation;
pub use sh::spherical_harmonics;
pub use tensor::{tensor_product, tensor_product_block};
pub use wigner::wigner_d;
