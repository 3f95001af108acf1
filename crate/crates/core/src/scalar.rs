//! Scalar abstraction for the numerical kernels.
//!
//! All covariance kernels, partitions and variation sums are generic over a
//! floating-point scalar; the crate-root aliases pin `f64` as the default
//! used by the experiment front end.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};
use rand::Rng;
use rand_distr::StandardNormal;

/// Floating-point scalar the kernels and variation sums operate on.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Conversion from an `f64` constant.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 constant not representable in scalar type")
    }

    /// Conversion from an index or count.
    #[inline]
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("count not representable in scalar type")
    }

    /// `f64` view of the value, for error reports and serialization.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Scalar for T where
    T: Float
        + FromPrimitive
        + ToPrimitive
        + NumAssign
        + Sum
        + Debug
        + Display
        + LowerExp
        + Send
        + Sync
        + 'static
{
}

/// Scalars the samplers can run on: FFT-capable with a standard normal draw.
pub trait SampleScalar: Scalar + rustfft::FftNum {
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;
}

impl SampleScalar for f32 {
    #[inline]
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }
}

impl SampleScalar for f64 {
    #[inline]
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }
}

/// `|x|^e`, guarded so that a zero base never goes through `powf` (which
/// would return 1 for an accidental `0^0`).
#[inline]
pub fn abs_pow<F: Scalar>(x: F, e: F) -> F {
    let a = x.abs();
    if a < F::of(1e-300) {
        F::zero()
    } else {
        a.powf(e)
    }
}
