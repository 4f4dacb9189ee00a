//! Conditional relative entropies, quasi-factorization bounds and heat-bath
//! log-Sobolev estimates for small quantum systems, computed with dense
//! linear algebra (total dimension at most 64).

pub mod calculus;
pub mod campaign;
pub mod entropy;
pub mod error;
pub mod heatbath;
pub mod quadrature;
pub mod quasi;
pub mod states;
pub mod tensor;

pub use error::{Error, Result};
pub use states::{DensityMatrix, Seed};
pub use tensor::{ComplexMatrix, HilbertLayout, Region};
