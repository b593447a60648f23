//! warpgeom: chart-based tensor calculus for warped products carrying a
//! semi-symmetric non-metric connection, with numerical certification of the
//! curvature, Ricci, and scalar decomposition identities and the
//! quasi-Einstein bookkeeping built on top of them.
//!
//! Everything is generic over the floating-point scalar through
//! [`scalar::Real`]; the `*64` aliases at the crate root fix `f64`, which is
//! what the CLI and the verification suites use.

pub mod einstein;
pub mod expr;
pub mod geometry;
pub mod sample;
pub mod scalar;
pub mod ssnm;
pub mod tensor;
pub mod warped;

pub use expr::{parse, Expression, Jet2, ParseError};
pub use geometry::{ChartManifold, GeomError, VectorField};
pub use scalar::Real;

/// f64 concretions of the core types.
pub type Expr64 = expr::Expression<f64>;
pub type Jet64 = expr::Jet2<f64>;
pub type Chart64 = geometry::ChartManifold<f64>;
pub type Field64 = geometry::VectorField<f64>;
pub type Matrix64 = tensor::Matrix<f64>;
pub type Connection64 = ssnm::ConnectionSpec<f64>;
pub type Warped64 = warped::WarpedProduct<f64>;
