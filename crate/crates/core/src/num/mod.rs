//! Exact numeric kernel: rational coordinates, quadratic surds, and the
//! module Q + Q*q that all flow times and heights live in.

pub mod linq;
pub mod quad;
pub mod qvalue;
pub mod real;

pub use linq::QLin;
pub use quad::Quad;
pub use qvalue::QValue;
pub use real::HighPrec;

use num_bigint::BigInt;
use num_rational::BigRational;

/// Exact coordinate on the base interval, in units where the non-spacer base
/// is `[0, 1)`.
pub type Coord = BigRational;

/// Convenience constructor for small rational coordinates.
pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Integer as a rational.
pub fn int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}
