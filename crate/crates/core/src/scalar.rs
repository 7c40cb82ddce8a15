//! Scalar abstraction: every numerical routine in this crate is generic
//! over [`Real`], implemented for `f32` and `f64`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssignOps};

/// Floating-point scalar type.
///
/// `f64` is the precision used by the command-line tools and the reference
/// tolerances; `f32` is supported for callers that want the core math at
/// reduced precision.
pub trait Real:
    Float + FloatConst + FromPrimitive + NumAssignOps + Sum + Debug + Display + Send + Sync + 'static
{
    /// Converts an `f64` literal into the scalar type.
    ///
    /// Panics if the value is not representable; only used for compile-time
    /// constants and configuration values that always are.
    fn lit(value: f64) -> Self {
        Self::from_f64(value).expect("literal not representable in scalar type")
    }

    /// A strict tolerance: `base` as given at `f64` precision, widened to a
    /// small multiple of machine epsilon for narrower scalar types.
    fn tol(base: f64) -> Self {
        let floor = Self::epsilon() * Self::lit(64.0);
        let t = Self::lit(base);
        if t < floor {
            floor
        } else {
            t
        }
    }
}

impl Real for f32 {}
impl Real for f64 {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tol_widens_for_f32() {
        assert_eq!(f64::tol(1e-12), 1e-12);
        assert!(f32::tol(1e-12) > 1e-6 * 1e-2);
        assert!(f32::tol(0.5) == 0.5);
    }

    #[test]
    fn lit_round_trips() {
        assert_eq!(f64::lit(6.62607015e-34), 6.62607015e-34);
    }
}
