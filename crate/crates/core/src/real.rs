//! Scalar abstraction for the geometry kernels: `f32` or `f64`.

use std::fmt;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssignOps};

/// Floating-point scalar the geometry modules are generic over.
///
/// The contracts (tolerances, convergence thresholds) are stated for the
/// `f64` instantiation, which is what the crate-root aliases fix; `f32` is
/// provided for callers that trade accuracy for footprint.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + NumAssignOps
    + fmt::Debug
    + fmt::Display
    + fmt::LowerExp
    + 'static
{
    /// Conversion from an `f64` constant (tolerances, literals).
    #[inline]
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 constant")
    }
}

impl Real for f32 {}
impl Real for f64 {}
