//! Exact and ball-arithmetic machinery for the `S_γ + α S_δ` family of
//! divergent series: combinatorics, special functions, Borel sums, Stokes
//! constants, Gumbel moments and the order-`n` generalization.

pub mod acceptance;
pub mod borel;
pub mod error;
pub mod exact;
pub mod generalized;
pub mod gumbel;
pub mod linear_form;
pub mod quadrature;
pub mod real;
pub mod series;
pub mod special;

pub use error::{LabError, Result};
pub use exact::RationalInterval;
pub use linear_form::{Alpha, LinearFormCoefficient};
pub use quadrature::QuadratureConfig;
pub use real::{Mag, PrecisionConfig, PrecisionReal};
pub use series::{PartialSumTrace, Verdict};
