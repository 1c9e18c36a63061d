//! Scalar abstraction shared by every numerical module.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point scalar the solver is generic over (`f32` or `f64`).
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + rustfft::FftNum
    + Sum
    + Default
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Machine epsilon scaled to a tolerance suitable for root finding.
    fn root_tol() -> Self;

    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {
    fn root_tol() -> Self {
        2e-6
    }
}

impl Real for f64 {
    fn root_tol() -> Self {
        1e-13
    }
}

/// Shorthand for building a scalar from an `f64` literal.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::lit(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literals_round_trip() {
        assert_eq!(lit::<f64>(0.25), 0.25);
        assert_eq!(lit::<f32>(0.5), 0.5f32);
        assert_eq!(<f64 as Real>::of_usize(7), 7.0);
    }
}
