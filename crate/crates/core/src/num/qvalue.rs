//! The roof value `q` and the comparison oracle for numbers `u + v*q`.
//!
//! Exact mode stores `q` as a quadratic surd `(alpha + beta*sqrt(d))/gamma`
//! and decides every comparison exactly. Real mode stores a high-precision
//! interval and surfaces an error whenever the interval is too wide to
//! decide, so nothing is ever silently rounded.

use crate::error::{CoreError, Result};
use crate::num::quad::{is_perfect_square, Quad};
use crate::num::real::HighPrec;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use std::cmp::Ordering;
use std::fmt;

/// The second roof value `q` in `(0, 1)`; the first roof value is pinned to 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum QValue {
    /// Exact quadratic surd `(alpha + beta*sqrt(d)) / gamma`.
    Quad(Quad),
    /// High-precision real with a tracked error radius.
    Real(HighPrec),
}

impl QValue {
    /// Exact quadratic `q = (alpha + beta*sqrt(d)) / gamma`.
    pub fn quadratic(alpha: i64, beta: i64, gamma: i64, d: u64) -> Result<Self> {
        if gamma == 0 {
            return Err(CoreError::InvalidQ("gamma must be nonzero".into()));
        }
        if beta == 0 {
            return Err(CoreError::InvalidQ(
                "beta = 0 makes q rational; rational q breaks every irrationality argument".into(),
            ));
        }
        if d < 2 || is_perfect_square(d) {
            return Err(CoreError::InvalidQ(format!(
                "d = {d} must be a non-square integer >= 2"
            )));
        }
        let gamma_rat = BigRational::from_integer(BigInt::from(gamma));
        let q = Quad::new(
            BigRational::from_integer(BigInt::from(alpha)) / &gamma_rat,
            BigRational::from_integer(BigInt::from(beta)) / &gamma_rat,
            d,
        );
        let v = QValue::Quad(q);
        v.check_unit_interval()?;
        Ok(v)
    }

    /// The default roof value `1/sqrt(2)`.
    pub fn inv_sqrt2() -> Self {
        QValue::quadratic(0, 1, 2, 2).expect("1/sqrt(2) is a valid q")
    }

    /// High-precision real mode. Flags inputs whose continued fraction looks
    /// rational at working precision.
    pub fn real(mid: BigRational) -> Result<Self> {
        let hp = HighPrec::with_default_radius(mid);
        if let Some((term, quotient)) = hp.rationality_suspicion(40, 1_000_000_000) {
            return Err(CoreError::SuspectRational {
                value: format!("{}", hp.to_f64()),
                quotient: quotient.to_string(),
                term,
            });
        }
        let v = QValue::Real(hp);
        v.check_unit_interval()?;
        Ok(v)
    }

    /// Rational test double (radius zero, no irrationality check). Only for
    /// exercising arithmetic edge cases; real experiments reject rational q.
    pub fn rational_for_tests(num: i64, den: i64) -> Self {
        QValue::Real(HighPrec::exact(BigRational::new(
            BigInt::from(num),
            BigInt::from(den),
        )))
    }

    fn check_unit_interval(&self) -> Result<()> {
        let pos = self.sign_lin(&BigRational::zero(), &BigRational::from_integer(BigInt::from(1)))?;
        let below_one = self.sign_lin(
            &BigRational::from_integer(BigInt::from(-1)),
            &BigRational::from_integer(BigInt::from(1)),
        )?;
        if pos != Ordering::Greater || below_one != Ordering::Less {
            return Err(CoreError::InvalidQ(format!(
                "q = {} must lie strictly inside (0, 1)",
                self.to_f64()
            )));
        }
        Ok(())
    }

    /// Sign of `u + v*q`.
    pub fn sign_lin(&self, u: &BigRational, v: &BigRational) -> Result<Ordering> {
        match self {
            QValue::Quad(q) => {
                let val = Quad::new(u + v * &q.a, v * &q.b, q.d);
                Ok(val.signum())
            }
            QValue::Real(hp) => hp.sign_lin(u, v),
        }
    }

    /// Floor of `u + v*q`.
    pub fn floor_lin(&self, u: &BigRational, v: &BigRational) -> Result<BigInt> {
        match self {
            QValue::Quad(q) => {
                let val = Quad::new(u + v * &q.a, v * &q.b, q.d);
                Ok(val.floor())
            }
            QValue::Real(hp) => hp.floor_lin(u, v),
        }
    }

    /// Floor of `1 / (u + v*q)`; the inverse leaves the module Q + Q*q, so it
    /// is computed in the ambient field (or interval) instead.
    pub fn floor_inv_lin(&self, u: &BigRational, v: &BigRational) -> Result<BigInt> {
        match self {
            QValue::Quad(q) => {
                let val = Quad::new(u + v * &q.a, v * &q.b, q.d);
                if val.is_zero() {
                    return Err(CoreError::InvalidQ("inverse of zero".into()));
                }
                Ok(val.inv().floor())
            }
            QValue::Real(hp) => hp.floor_inv_lin(u, v),
        }
    }

    pub fn lin_to_f64(&self, u: &BigRational, v: &BigRational) -> f64 {
        match self {
            QValue::Quad(q) => Quad::new(u + v * &q.a, v * &q.b, q.d).to_f64(),
            QValue::Real(hp) => {
                use num_traits::ToPrimitive;
                u.to_f64().unwrap_or(f64::NAN) + v.to_f64().unwrap_or(f64::NAN) * hp.to_f64()
            }
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            QValue::Quad(q) => q.to_f64(),
            QValue::Real(hp) => hp.to_f64(),
        }
    }
}

impl fmt::Display for QValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QValue::Quad(q) => write!(f, "{q}"),
            QValue::Real(hp) => write!(f, "~{}", hp.to_f64()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_quadratics() {
        assert!(QValue::quadratic(0, 1, 2, 4).is_err()); // square d
        assert!(QValue::quadratic(0, 0, 2, 2).is_err()); // rational
        assert!(QValue::quadratic(3, 1, 2, 2).is_err()); // > 1
        assert!(QValue::quadratic(0, -1, 2, 2).is_err()); // < 0
    }

    #[test]
    fn accepts_inv_sqrt2() {
        let q = QValue::inv_sqrt2();
        assert!((q.to_f64() - 0.7071067811865476).abs() < 1e-15);
    }

    #[test]
    fn rejects_rational_real_input() {
        let r = BigRational::new(BigInt::from(22), BigInt::from(7));
        assert!(QValue::real(r).is_err());
    }
}
