//! Conformal tractor calculus on closed-form model geometries.
//!
//! Everything is pointwise: metrics come from analytic charts, derivatives
//! come from truncated Taylor jets, and identities are checked as residuals.

// Index loops mirror the abstract-index formulas; `!(x > 0.0)` style
// guards deliberately reject NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod almost_einstein;
pub mod curvature;
pub mod error;
pub mod hypersurface;
pub mod jet;
pub mod metric;
pub mod sphere_model;
pub mod tensor;
pub mod tractor;
pub mod verifier;

pub use error::{Error, Result};
pub use jet::{Jet, Scalar};
pub use metric::{MetricChart, ScalarField};
pub use tensor::{Slot, Tensor, TensorValue};
