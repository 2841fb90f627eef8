//! Scalar abstraction shared by every engine.

use std::fmt::{Debug, Display};

use nalgebra::{Complex, RealField};
use num_traits::{FromPrimitive, ToPrimitive};

/// Real floating point type the engines are generic over: `f32` or `f64`.
///
/// Tolerances are written as `f64` literals throughout the crate and passed
/// through [`Real::tol`], which clamps them to what the type can resolve.
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + Display + Debug + Default + Send + Sync + 'static
{
    /// Smallest tolerance that is meaningful for this type.
    const TOL_FLOOR: f64;

    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    fn tol(x: f64) -> Self {
        Self::lit(x.max(Self::TOL_FLOOR))
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {
    const TOL_FLOOR: f64 = 1e-5;
}

impl Real for f64 {
    const TOL_FLOOR: f64 = 0.0;
}

/// Complex number over a [`Real`] scalar.
pub type C<T> = Complex<T>;

pub fn c<T: Real>(re: f64, im: f64) -> C<T> {
    Complex::new(T::lit(re), T::lit(im))
}

pub fn cr<T: Real>(re: T) -> C<T> {
    Complex::new(re, T::zero())
}
