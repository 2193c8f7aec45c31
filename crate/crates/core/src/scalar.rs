//! Scalar abstraction for the solver core.
//!
//! All of the analytic machinery (polynomials, Laplace exponents, averaging
//! recursion, value functions) is generic over a floating-point scalar.
//! Concrete aliases for `f64`/`f32` live at the crate root; the Monte Carlo
//! engine is `f64`-only because its reproducibility contract is tied to a
//! specific bit layout.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign};

/// Floating-point scalar used by the solver core.
///
/// Implemented for `f32` and `f64`.
pub trait Real:
    Float + FromPrimitive + NumAssign + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Convert an `f64` constant into this scalar type.
    fn real(x: f64) -> Self {
        Self::from_f64(x).expect("f64 constant not representable in scalar type")
    }

    /// Convert a small non-negative integer into this scalar type.
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count not representable in scalar type")
    }
}

impl Real for f32 {}
impl Real for f64 {}
