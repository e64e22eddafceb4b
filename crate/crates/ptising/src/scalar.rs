//! Scalar abstraction: the whole crate is generic over the real floating type.

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use std::fmt::{Debug, Display};

/// Real floating-point scalar (f32 or f64).
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
}

impl<T> Real for T where
    T: Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
}

/// Lossy view of a scalar, for diagnostics.
#[inline]
pub fn as_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Complex number over the crate scalar.
pub type C<T> = Complex<T>;

/// Convert an f64 constant into the working scalar.
#[inline]
pub fn re<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("constant not representable in scalar type")
}

/// Complex constant from f64 parts.
#[inline]
pub fn cx<T: Real>(re_: f64, im_: f64) -> C<T> {
    Complex::new(re(re_), re(im_))
}

/// Purely real complex value.
#[inline]
pub fn creal<T: Real>(x: T) -> C<T> {
    Complex::new(x, T::zero())
}

/// e^{i theta}
#[inline]
pub fn cis<T: Real>(theta: T) -> C<T> {
    Complex::new(theta.cos(), theta.sin())
}
