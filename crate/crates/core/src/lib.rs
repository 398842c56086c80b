//! Bracketed pressure, entropy, and dimension estimates for affine iterated
//! function systems that share a single contracting linear part.

pub mod error;
pub mod grid;
pub mod ifs;
pub mod linalg;
pub mod measures;
pub mod pressure;
pub mod scalar;

pub use error::{FpError, Result};
