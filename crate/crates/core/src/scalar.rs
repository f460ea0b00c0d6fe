//! Scalar abstraction shared by the numerical modules.
//!
//! Everything that touches samples or coefficients is generic over [`Real`],
//! which is implemented for `f32` and `f64`. Integer and log-scale spectrum
//! bookkeeping stays in `f64` (see [`crate::spectrum`]).

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst};
use rustfft::FftNum;
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating point scalar usable by the transforms and solvers.
pub trait Real:
    Float
    + FloatConst
    + FftNum
    + Sum
    + Default
    + Debug
    + Display
    + LowerExp
    + Serialize
    + DeserializeOwned
{
    /// Unit roundoff of the type.
    fn eps() -> Self {
        <Self as Float>::epsilon()
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Converts an `f64` literal into the working scalar.
#[inline]
pub fn real<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 literal representable in scalar type")
}

/// Converts a working scalar back to `f64`.
#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().expect("scalar converts to f64")
}

/// `e^{2πi·turns}` for a phase measured in full turns.
#[inline]
pub fn cis_turns<T: Real>(turns: T) -> Complex<T> {
    let theta = T::TAU() * turns;
    Complex::new(theta.cos(), theta.sin())
}

/// Reduces `x` into `[0, 1)`.
#[inline]
pub fn frac<T: Real>(x: T) -> T {
    let r = x - x.floor();
    if r >= T::one() {
        T::zero()
    } else {
        r
    }
}
