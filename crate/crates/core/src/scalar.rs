//! Scalar abstraction shared by the state-level code.
//!
//! The quantum primitives and the ideal protocol are written once against
//! [`Real`] and instantiated for `f32` and `f64`. Tolerances follow the
//! scalar: the defaults are the double-precision values, floored at a small
//! multiple of machine epsilon so single precision remains usable.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive};

/// Real floating-point scalar: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
    /// Converts an `f64` literal into this scalar.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex number over a [`Real`] scalar.
pub type Cplx<T> = Complex<T>;

pub(crate) fn c<T: Real>(re: f64, im: f64) -> Complex<T> {
    Complex::new(T::lit(re), T::lit(im))
}

pub(crate) fn re<T: Real>(x: T) -> Complex<T> {
    Complex::new(x, T::zero())
}

/// Numerical tolerances used by validating constructors and checks.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances<T> {
    /// Unit-norm check for kets.
    pub norm: T,
    /// Hermiticity check (max-abs of `A - A†`).
    pub hermitian: T,
    /// Smallest eigenvalue accepted for a physical density operator.
    pub psd: T,
    /// Trace check (1 for physical, 0 for deviation operators).
    pub trace: T,
    /// Unitarity check (max-abs of `U†U - I`).
    pub unitary: T,
    /// Post-selection probabilities below this value are failures.
    pub post_selection_floor: T,
}

impl<T: Real> Tolerances<T> {
    fn floored(x: f64) -> T {
        T::lit(x).max(T::epsilon() * T::lit(64.0))
    }
}

impl<T: Real> Default for Tolerances<T> {
    fn default() -> Self {
        Self {
            norm: Self::floored(1e-12),
            hermitian: Self::floored(1e-12),
            psd: Self::floored(1e-10),
            trace: Self::floored(1e-10),
            unitary: Self::floored(1e-10),
            post_selection_floor: T::lit(1e-12),
        }
    }
}
