//! Floating point abstraction shared by the geometry, mechanism and metric code.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Scalar type the core math is generic over: `f32` or `f64`.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Allowed deviation of a probability vector's sum from one.
    const MASS_TOLERANCE: Self;
    /// Densities and masses at or below this value are treated as exact zeros
    /// when compared in log space.
    const ZERO_FLOOR: Self;

    /// Converts an `f64` literal. Panics only on values the type cannot
    /// represent at all, which never happens for the constants used here.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar convertible to f64")
    }
}

impl Scalar for f64 {
    const MASS_TOLERANCE: Self = 1e-9;
    const ZERO_FLOOR: Self = 1e-300;
}

impl Scalar for f32 {
    const MASS_TOLERANCE: Self = 1e-5;
    const ZERO_FLOOR: Self = 1e-37;
}
