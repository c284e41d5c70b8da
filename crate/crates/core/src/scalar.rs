//! Scalar abstraction for the numeric kernels.
//!
//! All signal-processing and model code is generic over [`Real`] so the same
//! kernels run in `f32` or `f64`. The pipeline crates pin `f64` through the
//! type aliases exported from the crate root; persisted artifacts are always
//! written as 64-bit floats regardless of the in-memory scalar.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};

pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Lifts an `f64` constant into the scalar type.
    fn c(v: f64) -> Self {
        Self::from_f64(v).expect("constant not representable in scalar type")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("scalar convertible to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}
