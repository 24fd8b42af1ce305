//! Numbers of the form `u + v*q` with exact rational `u`, `v`.
//!
//! Every flow time, roof crossing cost and ledger height in this crate lives
//! in the module Q + Q*q, so a symbolic pair is a complete representation:
//! equality is structural (rational independence of 1 and q), and order is
//! delegated to the [`QValue`] comparison oracle.

use crate::error::Result;
use crate::num::qvalue::QValue;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Neg, Sub};

/// `rat + coef * q`, exact.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QLin {
    pub rat: BigRational,
    pub coef: BigRational,
}

impl QLin {
    pub fn new(rat: BigRational, coef: BigRational) -> Self {
        QLin { rat, coef }
    }

    pub fn zero() -> Self {
        QLin::new(BigRational::zero(), BigRational::zero())
    }

    pub fn one() -> Self {
        QLin::new(BigRational::one(), BigRational::zero())
    }

    /// The value `q` itself.
    pub fn q() -> Self {
        QLin::new(BigRational::zero(), BigRational::one())
    }

    /// `k * q` for an integer `k`.
    pub fn q_times(k: i64) -> Self {
        QLin::new(BigRational::zero(), BigRational::from_integer(BigInt::from(k)))
    }

    pub fn from_rational(r: BigRational) -> Self {
        QLin::new(r, BigRational::zero())
    }

    pub fn from_int(n: i64) -> Self {
        QLin::from_rational(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn is_zero(&self) -> bool {
        self.rat.is_zero() && self.coef.is_zero()
    }

    pub fn scale(&self, r: &BigRational) -> Self {
        QLin::new(&self.rat * r, &self.coef * r)
    }

    pub fn sign(&self, q: &QValue) -> Result<Ordering> {
        q.sign_lin(&self.rat, &self.coef)
    }

    pub fn cmp_q(&self, other: &QLin, q: &QValue) -> Result<Ordering> {
        let diff = self - other;
        diff.sign(q)
    }

    pub fn is_nonneg(&self, q: &QValue) -> Result<bool> {
        Ok(self.sign(q)? != Ordering::Less)
    }

    pub fn floor(&self, q: &QValue) -> Result<BigInt> {
        q.floor_lin(&self.rat, &self.coef)
    }

    /// Fractional part `self - floor(self)`, still in Q + Q*q.
    pub fn frac(&self, q: &QValue) -> Result<QLin> {
        let fl = self.floor(q)?;
        Ok(QLin::new(&self.rat - BigRational::from_integer(fl), self.coef.clone()))
    }

    pub fn to_f64(&self, q: &QValue) -> f64 {
        q.lin_to_f64(&self.rat, &self.coef)
    }

    /// Renders both exact components, e.g. `"3/2 + 5*q"`.
    pub fn exact_string(&self) -> String {
        format!("{}", self)
    }
}

impl Add for &QLin {
    type Output = QLin;
    fn add(self, rhs: &QLin) -> QLin {
        QLin::new(&self.rat + &rhs.rat, &self.coef + &rhs.coef)
    }
}

impl Sub for &QLin {
    type Output = QLin;
    fn sub(self, rhs: &QLin) -> QLin {
        QLin::new(&self.rat - &rhs.rat, &self.coef - &rhs.coef)
    }
}

impl Add for QLin {
    type Output = QLin;
    fn add(self, rhs: QLin) -> QLin {
        &self + &rhs
    }
}

impl Sub for QLin {
    type Output = QLin;
    fn sub(self, rhs: QLin) -> QLin {
        &self - &rhs
    }
}

impl Neg for &QLin {
    type Output = QLin;
    fn neg(self) -> QLin {
        QLin::new(-self.rat.clone(), -self.coef.clone())
    }
}

impl fmt::Display for QLin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coef.is_zero() {
            write!(f, "{}", self.rat)
        } else if self.rat.is_zero() {
            write!(f, "{}*q", self.coef)
        } else if self.coef.is_negative() {
            write!(f, "{} - {}*q", self.rat, -self.coef.clone())
        } else {
            write!(f, "{} + {}*q", self.rat, self.coef)
        }
    }
}
