//! Scalar abstraction for the numeric kernels.
//!
//! All floating-point math in this crate is generic over [`Real`] so the same
//! code runs at f32 or f64 precision. Concrete aliases for the main types live
//! at the crate root.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar: f32 or f64.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum<Self> + Debug + Display + Send + Sync + 'static
{
    /// Convert an `f64` constant into this scalar type.
    fn scalar(v: f64) -> Self {
        Self::from_f64(v).expect("f64 constant must convert into the scalar type")
    }

    /// Widen to `f64` (used where thresholds are defined in f64).
    fn widen(self) -> f64 {
        self.to_f64().expect("scalar must convert to f64")
    }
}

impl<T> Real for T where
    T: Float
        + FromPrimitive
        + ToPrimitive
        + NumAssign
        + Sum<Self>
        + Debug
        + Display
        + Send
        + Sync
        + 'static
{
}
