//! Floating point abstraction for the whole crate.
//!
//! Every numeric routine is generic over [`Real`] so the same code runs in
//! f32 and f64. The shipped binaries and the stated tolerances assume f64;
//! the f64 aliases at the crate root are the supported configuration.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, NumCast};

/// Scalar type for kernel evaluations, expansion coefficients and statistics.
pub trait Real:
    Float
    + FromPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Converts an f64 constant. Panics on values a `Real` cannot hold,
    /// which for f32/f64 and the constants used here does not happen.
    fn cast(value: f64) -> Self {
        <Self as NumCast>::from(value).expect("constant not representable in scalar type")
    }

    /// Lossless enough for counters and sizes at desk scale.
    fn from_count(value: usize) -> Self {
        Self::cast(value as f64)
    }
}

impl Real for f32 {}
impl Real for f64 {}
