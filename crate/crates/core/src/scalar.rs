use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Real scalar the simulator is generic over: `f32` or `f64`.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Absolute tolerance used by iterative solvers at this precision.
    fn solver_tolerance() -> Self;
}

impl Scalar for f32 {
    fn solver_tolerance() -> Self {
        1e-5
    }
}

impl Scalar for f64 {
    fn solver_tolerance() -> Self {
        1e-10
    }
}

/// Converts an `f64` literal into `S`.
#[inline]
pub fn lit<S: Scalar>(x: f64) -> S {
    S::from_f64(x).expect("f64 literal representable in scalar type")
}

#[inline]
pub fn from_usize<S: Scalar>(x: usize) -> S {
    S::from_usize(x).expect("usize representable in scalar type")
}

#[inline]
pub fn to_f64<S: Scalar>(x: S) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}
