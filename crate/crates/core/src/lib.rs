//! Matrix weights, convex-set valued functions and their maximal operators
//! on dyadic grids.
//!
//! The numerical core is `f64`.  The matrix and norm kernel are generic over
//! [`Real`] so single precision can be used for cross-checks.
// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ap;
pub mod convex;
pub mod error;
pub mod extrapolation;
pub mod grid;
pub mod io;
pub mod linalg;
pub mod maximal;
pub mod norm_kernel;
pub mod rdf;
pub mod scalar;
pub mod suite;

pub use convex::{john_ellipsoid, ConvexBody, DirectionGrid, JohnResult, SupportBody, SymPolygon};
pub use error::{Error, Result};
pub use scalar::{conjugate, Real};

/// Square matrix in double precision.
pub type Matrix = linalg::Mat<f64>;
/// Symmetric positive-definite matrix in double precision.
pub type SpdMatrix = norm_kernel::Spd<f64>;

/// Caps the global worker pool at `n` threads.
///
/// Returns `false` when the pool was already initialized.
pub fn limit_threads(n: usize) -> bool {
    rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global().is_ok()
}
