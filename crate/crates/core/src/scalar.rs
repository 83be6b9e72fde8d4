//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display, LowerExp};
use std::str::FromStr;

use num_traits::{Float, FloatConst, FromPrimitive};

/// Floating point scalar: `f32` or `f64`.
///
/// All computations are written against this trait. Tolerances that the
/// routines use are expressed in `f64` and converted with [`Real::lit`], so
/// they degrade gracefully to the precision floor of narrower types through
/// [`Real::mass_tolerance`].
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + Debug
    + Display
    + LowerExp
    + FromStr
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal into this scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    /// Widens to `f64`; used where a routine is only available in double precision.
    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Tolerance for "sums to one" checks: 1e-9, or a few thousand ulps for
    /// types that cannot resolve 1e-9.
    #[inline]
    fn mass_tolerance() -> Self {
        Self::lit(1e-9).max(Self::epsilon() * Self::lit(1024.0))
    }
}

impl Real for f32 {}
impl Real for f64 {}
