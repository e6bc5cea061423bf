//! Scalar abstraction: the whole simulator is generic over the floating-point
//! type carrying amplitudes, so the same code runs in `f32` or `f64`.
//! Concrete `f64` aliases for every public type live at the crate root.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Floating-point scalar: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + NumAssign + Sum<Self> + Debug + Display + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 converts to any Real")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex amplitude over the generic scalar.
pub type C<R> = Complex<R>;

/// `e^{i theta}` as a unit complex number.
pub fn phase<R: Real>(theta: R) -> C<R> {
    C::from_polar(R::one(), theta)
}

/// Squared two-norm of a complex slice.
pub fn norm_sqr<R: Real>(amps: &[C<R>]) -> R {
    amps.iter().map(|z| z.norm_sqr()).sum()
}
