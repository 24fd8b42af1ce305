//! High-precision real fallback for roof values that are not quadratic surds.
//!
//! A value is an exact rational midpoint plus a radius. Comparisons succeed
//! only when the interval separates the operands; otherwise the caller gets
//! [`CoreError::AmbiguousComparison`] with the offending width, so precision
//! loss is always visible instead of silently resolved.

use crate::error::{CoreError, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::cmp::Ordering;

/// Midpoint/radius interval holding a real number to at least 64 fractional bits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HighPrec {
    pub mid: BigRational,
    pub rad: BigRational,
}

impl HighPrec {
    /// Wraps a rational approximation with an explicit error radius.
    pub fn new(mid: BigRational, rad: BigRational) -> Self {
        HighPrec { mid, rad }
    }

    /// Treats a rational as exact (radius zero). Used for test doubles.
    pub fn exact(mid: BigRational) -> Self {
        HighPrec::new(mid, BigRational::zero())
    }

    /// Default radius 2^-80, comfortably past the 64 fractional bits floor.
    pub fn with_default_radius(mid: BigRational) -> Self {
        let rad = BigRational::new(BigInt::one(), BigInt::from(2u8).pow(80));
        HighPrec::new(mid, rad)
    }

    /// Sign of `u + v * self`, when the interval allows deciding it.
    pub fn sign_lin(&self, u: &BigRational, v: &BigRational) -> Result<Ordering> {
        let center = u + v * &self.mid;
        let spread = v.abs() * &self.rad;
        if center > spread {
            Ok(Ordering::Greater)
        } else if center < -spread.clone() {
            Ok(Ordering::Less)
        } else if spread.is_zero() {
            Ok(Ordering::Equal)
        } else {
            Err(CoreError::AmbiguousComparison {
                width: format!("{:.3e}", (spread * BigRational::from_integer(BigInt::from(2))).to_f64().unwrap_or(f64::NAN)),
            })
        }
    }

    /// Floor of `u + v * self`, when unambiguous.
    pub fn floor_lin(&self, u: &BigRational, v: &BigRational) -> Result<BigInt> {
        let center = u + v * &self.mid;
        let spread = v.abs() * &self.rad;
        let lo = (&center - &spread).floor();
        let hi = (&center + &spread).floor();
        if lo == hi {
            Ok(lo.to_integer())
        } else {
            Err(CoreError::AmbiguousComparison {
                width: format!("floor straddles an integer near {}", center.to_f64().unwrap_or(f64::NAN)),
            })
        }
    }

    /// Floor of `1 / (u + v * self)`, when the interval stays away from zero.
    pub fn floor_inv_lin(&self, u: &BigRational, v: &BigRational) -> Result<BigInt> {
        let center = u + v * &self.mid;
        let spread = v.abs() * &self.rad;
        let lo = &center - &spread;
        let hi = &center + &spread;
        if (lo.is_positive()) != (hi.is_positive()) || lo.is_zero() || hi.is_zero() {
            return Err(CoreError::AmbiguousComparison {
                width: "inverse interval straddles zero".to_string(),
            });
        }
        let inv_lo = hi.recip();
        let inv_hi = lo.recip();
        let fl = inv_lo.floor();
        let fh = inv_hi.floor();
        if fl == fh {
            Ok(fl.to_integer())
        } else {
            Err(CoreError::AmbiguousComparison {
                width: "inverse floor straddles an integer".to_string(),
            })
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.mid.to_f64().unwrap_or(f64::NAN)
    }

    /// Continued-fraction heuristic: an early huge partial quotient means the
    /// midpoint is (to working precision) rational, which breaks every
    /// irrationality assumption downstream.
    pub fn rationality_suspicion(&self, max_terms: usize, threshold: u64) -> Option<(usize, BigInt)> {
        let mut x = self.mid.clone();
        for term in 0..max_terms {
            let fl = x.floor();
            let frac = &x - &fl;
            if term > 0 {
                let quot = fl.to_integer();
                if quot.abs() > BigInt::from(threshold) {
                    return Some((term, quot));
                }
            }
            if frac.is_zero() {
                return Some((term, BigInt::from(u64::MAX)));
            }
            x = frac.recip();
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn decidable_signs() {
        let q = HighPrec::with_default_radius(rat(7071067811865475, 10000000000000000));
        // 1 - q > 0
        assert_eq!(q.sign_lin(&rat(1, 1), &rat(-1, 1)).unwrap(), Ordering::Greater);
        // 2q - 1 > 0
        assert_eq!(q.sign_lin(&rat(-1, 1), &rat(2, 1)).unwrap(), Ordering::Greater);
    }

    #[test]
    fn ambiguity_is_reported() {
        // radius larger than the margin being tested
        let q = HighPrec::new(rat(1, 2), rat(1, 4));
        assert!(q.sign_lin(&rat(-1, 2), &rat(1, 1)).is_err());
    }

    #[test]
    fn rational_input_is_flagged() {
        let q = HighPrec::with_default_radius(rat(1, 3));
        assert!(q.rationality_suspicion(40, 1_000_000).is_some());
        let irr = HighPrec::with_default_radius(rat(7071067811865475, 10000000000000000));
        assert!(irr.rationality_suspicion(15, 1_000_000_000).is_none());
    }
}
