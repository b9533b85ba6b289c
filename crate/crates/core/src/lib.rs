//! Finite-level pseudo-differential calculus on `Z_p^d` and compact
//! Vilenkin groups.

pub mod calculus;
pub mod error;
pub mod group;
pub mod persist;
mod linalg;
pub mod spectral;
pub mod symbol;
pub mod transform;

pub use error::{Error, ErrorCode, Result};
pub use num_complex::Complex64;
