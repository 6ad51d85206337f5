//! Scalar abstraction shared by every numeric routine in the crate.

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};
use std::fmt::{Debug, Display};

/// Floating-point type usable by the analysis routines.
///
/// Implemented for `f32` and `f64`. Tolerances requested in `f64` are
/// clamped from below by a multiple of the machine epsilon of `Self`, so
/// single precision degrades gracefully instead of failing every check.
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + Display + Debug + Send + Sync + 'static
{
    const EPSILON: Self;

    /// Converts an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 value representable")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::lit(n as f64)
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// `requested`, but never below `64 * EPSILON`.
    #[inline]
    fn tol(requested: f64) -> Self {
        let floor = Self::EPSILON * Self::lit(64.0);
        let t = Self::lit(requested);
        if t > floor {
            t
        } else {
            floor
        }
    }

    #[inline]
    fn infinity() -> Self {
        Self::lit(f64::INFINITY)
    }
}

macro_rules! impl_real {
    ($($t:ty),*) => {$(
        impl Real for $t {
            const EPSILON: Self = <$t>::EPSILON;
        }
    )*};
}

impl_real!(f32, f64);
