//! Exact arithmetic in the real quadratic field Q(sqrt(d)).
//!
//! Every value is `a + b*sqrt(d)` with rational `a`, `b` and a fixed
//! positive non-square `d`. Ordering is decided exactly by sign analysis:
//! comparing `a` against `b*sqrt(d)` reduces to comparing `a^2` against
//! `b^2*d`, which is pure rational arithmetic. Nothing here ever rounds.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::cmp::Ordering;
use std::fmt;

/// Returns true when `d` is a perfect square (so `sqrt(d)` would be rational).
pub fn is_perfect_square(d: u64) -> bool {
    let r = (d as f64).sqrt().round() as u64;
    for c in r.saturating_sub(1)..=r + 1 {
        if c.checked_mul(c) == Some(d) {
            return true;
        }
    }
    false
}

/// An element `a + b*sqrt(d)` of Q(sqrt(d)).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Quad {
    pub a: BigRational,
    pub b: BigRational,
    pub d: u64,
}

impl Quad {
    pub fn new(a: BigRational, b: BigRational, d: u64) -> Self {
        Quad { a, b, d }
    }

    pub fn from_rational(a: BigRational, d: u64) -> Self {
        Quad::new(a, BigRational::zero(), d)
    }

    pub fn from_int(n: i64, d: u64) -> Self {
        Quad::from_rational(BigRational::from_integer(BigInt::from(n)), d)
    }

    pub fn is_rational(&self) -> bool {
        self.b.is_zero()
    }

    /// Exact sign: -1, 0, +1.
    pub fn signum(&self) -> Ordering {
        let sa = rational_sign(&self.a);
        let sb = rational_sign(&self.b);
        match (sa, sb) {
            (Ordering::Equal, s) | (s, Ordering::Equal) => s,
            (x, y) if x == y => x,
            // opposite nonzero signs: |a| vs |b| sqrt(d), i.e. a^2 vs b^2 d
            (sa, _) => {
                let a2 = &self.a * &self.a;
                let b2d = &self.b * &self.b * BigRational::from_integer(BigInt::from(self.d));
                match a2.cmp(&b2d) {
                    Ordering::Greater => sa,
                    Ordering::Less => sa.reverse(),
                    // equality would make sqrt(d) rational
                    Ordering::Equal => unreachable!("non-square d admits no rational square root"),
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn neg(&self) -> Self {
        Quad::new(-self.a.clone(), -self.b.clone(), self.d)
    }

    pub fn add(&self, other: &Quad) -> Self {
        debug_assert_eq!(self.d, other.d);
        Quad::new(&self.a + &other.a, &self.b + &other.b, self.d)
    }

    pub fn sub(&self, other: &Quad) -> Self {
        debug_assert_eq!(self.d, other.d);
        Quad::new(&self.a - &other.a, &self.b - &other.b, self.d)
    }

    pub fn mul(&self, other: &Quad) -> Self {
        debug_assert_eq!(self.d, other.d);
        let d = BigRational::from_integer(BigInt::from(self.d));
        Quad::new(
            &self.a * &other.a + (&self.b * &other.b) * &d,
            &self.a * &other.b + &self.b * &other.a,
            self.d,
        )
    }

    pub fn scale(&self, r: &BigRational) -> Self {
        Quad::new(&self.a * r, &self.b * r, self.d)
    }

    /// Multiplicative inverse via the conjugate; panics on zero.
    pub fn inv(&self) -> Self {
        assert!(!self.is_zero(), "inverse of zero");
        let d = BigRational::from_integer(BigInt::from(self.d));
        let norm = &self.a * &self.a - (&self.b * &self.b) * &d;
        Quad::new(&self.a / &norm, -(&self.b / &norm), self.d)
    }

    pub fn cmp(&self, other: &Quad) -> Ordering {
        self.sub(other).signum()
    }

    /// Exact floor. A float guess seeds the search; the answer is verified
    /// with exact comparisons and nudged until `n <= self < n + 1`.
    pub fn floor(&self) -> BigInt {
        let guess = self.to_f64();
        let mut n = BigInt::from(guess.floor() as i128);
        loop {
            let lo = Quad::from_rational(BigRational::from_integer(n.clone()), self.d);
            if self.cmp(&lo) == Ordering::Less {
                n -= 1;
                continue;
            }
            let hi = Quad::from_rational(BigRational::from_integer(&n + 1), self.d);
            if self.cmp(&hi) != Ordering::Less {
                n += 1;
                continue;
            }
            return n;
        }
    }

    pub fn to_f64(&self) -> f64 {
        let a = self.a.to_f64().unwrap_or(f64::NAN);
        let b = self.b.to_f64().unwrap_or(f64::NAN);
        a + b * (self.d as f64).sqrt()
    }
}

fn rational_sign(r: &BigRational) -> Ordering {
    if r.is_zero() {
        Ordering::Equal
    } else if r.is_positive() {
        Ordering::Greater
    } else {
        Ordering::Less
    }
}

impl fmt::Display for Quad {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.b.is_zero() {
            write!(f, "{}", self.a)
        } else if self.a.is_zero() {
            write!(f, "{}*sqrt({})", self.b, self.d)
        } else {
            write!(f, "{} + {}*sqrt({})", self.a, self.b, self.d)
        }
    }
}

impl One for Quad {
    fn one() -> Self {
        unimplemented!("Quad requires an explicit d; use Quad::from_int(1, d)")
    }
}

impl std::ops::Mul for Quad {
    type Output = Quad;
    fn mul(self, rhs: Quad) -> Quad {
        Quad::mul(&self, &rhs)
    }
}
