//! Return-map machinery for the rotation by `q`.
//!
//! The `phi_q` discretization of the flow walks the orbit `{n q mod 1}`;
//! everything quantitative about spacer heights reduces to how that orbit
//! revisits `[0, q)`. This module computes the under-`q` index sequence, the
//! recursive `(m_i, k_i)` sequences, and the exact first-return rotation,
//! each decided with exact comparisons.

use crate::error::{CoreError, Result};
use crate::num::{QLin, QValue};
use crate::rank_one::{height, RankOneSpec};
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use std::cmp::Ordering;

/// Smallest `N` with `(N-1) q < 1 <= N q`; equivalently the number of roof-1
/// crossings a `phi_q` orbit needs before its height wraps.
pub fn n0(q: &QValue) -> Result<u64> {
    // floor(1/q), then adjust for the (impossible for irrational q) exact case
    let fl = q.floor_inv_lin(&BigRational::zero(), &BigRational::one())?;
    let fl_u = fl
        .to_u64()
        .ok_or(CoreError::Overflow("N0 does not fit in u64"))?;
    // N0 = floor(1/q) + 1 unless floor(1/q) * q >= 1 already (rational q)
    let hits = q.sign_lin(
        &BigRational::from_integer(BigInt::from(-1)),
        &BigRational::from_integer(fl.clone()),
    )?;
    Ok(if hits == Ordering::Less { fl_u + 1 } else { fl_u })
}

/// Smallest `m` with `h_m >= 4 r_1 N0(q)`: past this stage, sublevels of one
/// level are too far apart in the tower for their projections to collide.
pub fn m0(spec: &dyn RankOneSpec, q: &QValue) -> Result<u32> {
    let target = BigUint::from(4u8) * BigUint::from(spec.cutting(1)) * BigUint::from(n0(q)?);
    for m in 1..=64u32 {
        if height(spec, m)? >= target {
            return Ok(m);
        }
    }
    Err(CoreError::NoConvergence { depth: 64 })
}

/// First `count` positive integers `n` with `n q mod 1 < q` (strict).
pub fn under_q_sequence(q: &QValue, count: usize) -> Result<Vec<u64>> {
    let mut out = Vec::with_capacity(count);
    let mut n: u64 = 0;
    while out.len() < count {
        n = n
            .checked_add(1)
            .ok_or(CoreError::Overflow("under-q index"))?;
        let frac = QLin::q_times(n as i64).frac(q)?;
        // frac < q  <=>  frac - q < 0
        let diff = &frac - &QLin::q();
        if diff.sign(q)? == Ordering::Less {
            out.push(n);
        }
    }
    Ok(out)
}

/// The recursive first/second-return index sequences.
///
/// `m_1` is minimal with `(m_1 - 1) q < 1 < m_1 q`; then alternately
/// `k_i' = min { k : k (m_i q mod 1) > 1 }`, `k_i = k_i' m_i`, and
/// `m_{i+1}' = min { m : m (k_i q mod 1) > 1 }`, `m_{i+1} = m_{i+1}' k_i`.
/// Indices are exact big integers; they grow double-exponentially, so useful
/// depths are small.
#[derive(Clone, Debug)]
pub struct ReturnSequences {
    pub m_idx: Vec<BigUint>,
    pub k_idx: Vec<BigUint>,
    /// `m_i q mod 1`, exact.
    pub m_frac: Vec<QLin>,
    /// `k_i q mod 1`, exact.
    pub k_frac: Vec<QLin>,
}

fn frac_of_index(idx: &BigUint, q: &QValue) -> Result<QLin> {
    let coef = BigRational::from_integer(BigInt::from(idx.clone()));
    QLin::new(BigRational::zero(), coef).frac(q)
}

/// Smallest integer `m >= 1` with `m * f > 1`, for `f` in `(0, 1)`.
fn min_multiplier_over_one(f: &QLin, q: &QValue) -> Result<BigUint> {
    let fl = q.floor_inv_lin(&f.rat, &f.coef)?;
    let fl: BigUint = fl
        .to_biguint()
        .ok_or_else(|| CoreError::InvalidSpec("negative fraction in return recursion".into()))?;
    // candidate floor(1/f) + 1; verify strictness on both sides
    let m = &fl + BigUint::one();
    let m_rat = BigRational::from_integer(BigInt::from(m.clone()));
    let over = f.scale(&m_rat);
    debug_assert_eq!(
        (&over - &QLin::one()).sign(q)?,
        Ordering::Greater,
        "m*f must exceed 1"
    );
    Ok(m)
}

pub fn return_sequences(q: &QValue, depth: usize) -> Result<ReturnSequences> {
    let mut seq = ReturnSequences {
        m_idx: Vec::new(),
        k_idx: Vec::new(),
        m_frac: Vec::new(),
        k_frac: Vec::new(),
    };
    if depth == 0 {
        return Ok(seq);
    }
    // m_1: minimal with m q > 1
    let m1 = min_multiplier_over_one(&QLin::q(), q)?;
    let mut m = m1;
    for _ in 0..depth {
        let mf = frac_of_index(&m, q)?;
        seq.m_idx.push(m.clone());
        seq.m_frac.push(mf.clone());
        let k_prime = min_multiplier_over_one(&mf, q)?;
        let k = k_prime * &m;
        let kf = frac_of_index(&k, q)?;
        seq.k_idx.push(k.clone());
        seq.k_frac.push(kf.clone());
        if seq.m_idx.len() == depth {
            break;
        }
        let m_prime = min_multiplier_over_one(&kf, q)?;
        m = m_prime * &k;
    }
    Ok(seq)
}

/// The first-return map of the rotation by `q` to `[0, q)`: a two-interval
/// exchange, equal to the rotation by `N0 q - 1` modulo `q`.
#[derive(Clone, Debug)]
pub struct FirstReturnMap {
    /// Right endpoint of the domain `[0, q)`.
    pub interval_end: QLin,
    /// Exchange point `x* = 1 - (N0 - 1) q`.
    pub cut: QLin,
    /// Rotation amount `c = N0 q - 1`; `g(x) = x + c mod q`.
    pub rotation: QLin,
    /// Return time on `[0, x*)`.
    pub time_low: u64,
    /// Return time on `[x*, q)`.
    pub time_high: u64,
}

impl FirstReturnMap {
    /// Applies `g` by the two-piece formula.
    pub fn apply(&self, x: &QLin, q: &QValue) -> Result<QLin> {
        match x.cmp_q(&self.cut, q)? {
            Ordering::Less => Ok(x + &self.rotation),
            _ => Ok(&(x + &self.rotation) - &self.interval_end),
        }
    }

    pub fn return_time(&self, x: &QLin, q: &QValue) -> Result<u64> {
        Ok(match x.cmp_q(&self.cut, q)? {
            Ordering::Less => self.time_low,
            _ => self.time_high,
        })
    }
}

pub fn first_return_rotation(q: &QValue) -> Result<FirstReturnMap> {
    let n0 = n0(q)?;
    // c = N0 q - 1 in (0, q); cut = q - c = 1 - (N0 - 1) q
    let rotation = QLin::new(
        BigRational::from_integer(BigInt::from(-1)),
        BigRational::from_integer(BigInt::from(n0)),
    );
    let cut = &QLin::q() - &rotation;
    Ok(FirstReturnMap {
        interval_end: QLin::q(),
        cut,
        rotation,
        time_low: n0,
        time_high: n0 - 1,
    })
}

/// Exact orbit of the rotation `x -> x + q mod 1` started at `x0`, recording
/// each visit to `[0, q)` as `(step, value)`. The simulation oracle for
/// [`first_return_rotation`].
pub fn first_return_orbit(q: &QValue, x0: &QLin, visits: usize) -> Result<Vec<(u64, QLin)>> {
    let mut out = Vec::with_capacity(visits);
    let mut x = x0.clone();
    let mut step: u64 = 0;
    while out.len() < visits {
        step += 1;
        x = (&x + &QLin::q()).frac(q)?;
        let below_q = (&x - &QLin::q()).sign(q)? == Ordering::Less;
        if below_q {
            out.push((step, x.clone()));
        }
        if step > (visits as u64 + 2) * (n0(q)? + 1) {
            return Err(CoreError::NoConvergence {
                depth: visits as u32,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn n0_examples() {
        assert_eq!(n0(&QValue::inv_sqrt2()).unwrap(), 2);
        assert_eq!(n0(&QValue::rational_for_tests(51, 100)).unwrap(), 2);
        assert_eq!(n0(&QValue::rational_for_tests(99, 100)).unwrap(), 2);
        // exact divisor case: q = 1/4 gives N0 q = 1 exactly
        assert_eq!(n0(&QValue::rational_for_tests(1, 4)).unwrap(), 4);
    }

    #[test]
    fn m0_examples() {
        let classical = crate::staircase::Staircase::classical();
        let q = QValue::inv_sqrt2();
        assert_eq!(m0(&classical, &q).unwrap(), 3); // h_3 = 12 >= 8
        // q with N0 = 14 needs h_m >= 56, so m = 5 (h_4 = 54 falls short)
        let small_q = QValue::rational_for_tests(1, 14);
        assert_eq!(n0(&small_q).unwrap(), 14);
        assert_eq!(m0(&classical, &small_q).unwrap(), 5);
        // r_1 = 1 spec with h_1 >= 4 N0 is immediate
        let heavy = crate::rank_one::UniformSpec { r: 1, s: 10 };
        assert_eq!(m0(&heavy, &QValue::rational_for_tests(99, 100)).unwrap(), 1);
    }

    #[test]
    fn under_q_first_terms() {
        let q = QValue::inv_sqrt2();
        assert_eq!(under_q_sequence(&q, 5).unwrap(), vec![2, 3, 5, 6, 8]);
        // q = sqrt(2) - 1: n = 1 is excluded by strictness (q mod 1 = q), and
        // 2q < 1 makes n = 2 fail too; direct enumeration gives 3, 5, 8, ...
        let q2 = QValue::quadratic(-1, 1, 1, 2).unwrap();
        assert_eq!(under_q_sequence(&q2, 3).unwrap(), vec![3, 5, 8]);
    }

    #[test]
    fn return_sequence_examples() {
        let q = QValue::inv_sqrt2();
        let seq = return_sequences(&q, 4).unwrap();
        assert_eq!(seq.m_idx[0], BigUint::from(2u8));
        assert_eq!(seq.k_idx[0], BigUint::from(6u8)); // k_1' = 3, k_1 = 3 * 2
        assert_eq!(seq.m_idx[1], BigUint::from(30u8)); // m_2' = 5, m_2 = 5 * 6
        assert_eq!(seq.k_idx[1], BigUint::from(150u16));
        // every k_i q mod 1 < q, and every m_i q mod 1 < q
        for f in seq.k_frac.iter().chain(seq.m_frac.iter()) {
            assert_eq!((f - &QLin::q()).sign(&q).unwrap(), Ordering::Less);
            assert!(f.is_nonneg(&q).unwrap());
        }
    }

    #[test]
    fn first_return_structure() {
        let q = QValue::inv_sqrt2();
        let g = first_return_rotation(&q).unwrap();
        // two-interval exchange: cut + rotation = q
        assert_eq!(&g.cut + &g.rotation, g.interval_end);
        assert_eq!((g.time_low, g.time_high), (2, 1));
        // bijection onto [0, q): the two pieces land on [c, q) and [0, c)
        assert!(g.rotation.is_nonneg(&q).unwrap());
    }

    #[test]
    fn first_return_matches_orbit_oracle() {
        let q = QValue::inv_sqrt2();
        let g = first_return_rotation(&q).unwrap();
        let oracle = first_return_orbit(&q, &QLin::zero(), 400).unwrap();
        // iterating g from 0 must reproduce the oracle point-by-point, with
        // matching return times (gaps between visit steps)
        let mut x = QLin::zero();
        let mut prev_step = 0u64;
        for (step, value) in &oracle {
            let predicted_time = g.return_time(&x, &q).unwrap();
            assert_eq!(step - prev_step, predicted_time, "return time from {x}");
            x = g.apply(&x, &q).unwrap();
            assert_eq!(&x, value, "orbit value at step {step}");
            prev_step = *step;
        }
    }

    #[test]
    fn under_q_indices_are_the_return_times() {
        // the n-th under-q index is the step of the n-th return of the orbit
        // of 0, so frac(a_n q) walks the g-orbit of 0
        let q = QValue::inv_sqrt2();
        let a = under_q_sequence(&q, 60).unwrap();
        let orbit = first_return_orbit(&q, &QLin::zero(), 60).unwrap();
        for (an, (step, _)) in a.iter().zip(orbit.iter()) {
            assert_eq!(an, step);
        }
    }

    #[test]
    fn g_squared_orbit_has_no_large_gap() {
        // minimality statistic: 1000 points of the g^2-orbit of 0 leave no
        // gap in [0, q) larger than 3 * (q / 1000)
        let q = QValue::inv_sqrt2();
        let g = first_return_rotation(&q).unwrap();
        let n_points = 1000usize;
        let mut points = Vec::with_capacity(n_points);
        let mut x = QLin::zero();
        for _ in 0..n_points {
            points.push(x.to_f64(&q));
            x = g.apply(&g.apply(&x, &q).unwrap(), &q).unwrap();
        }
        points.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let qv = q.to_f64();
        let mut max_gap: f64 = qv - points[n_points - 1] + points[0];
        for w in points.windows(2) {
            max_gap = max_gap.max(w[1] - w[0]);
        }
        assert!(
            max_gap <= 3.0 * qv / n_points as f64,
            "max gap {max_gap} too large"
        );
    }

    #[test]
    fn k_i_versus_a_2i_is_a_reported_mismatch() {
        // the advertised identity k_i = a_{2i} fails at i = 1 for q = 1/sqrt2
        // (k_1 = 6 is a_4, not a_2 = 3); verify the verdict machinery sees it
        let q = QValue::inv_sqrt2();
        let seq = return_sequences(&q, 3).unwrap();
        let a = under_q_sequence(&q, 10).unwrap();
        let verdict = k_vs_a2i_verdict(&seq, &a);
        assert_eq!(verdict, Some(1));
        // and k_1 really is somewhere in the under-q sequence
        let set: BTreeSet<u64> = a.into_iter().collect();
        assert!(set.contains(&6));
    }

    #[test]
    fn orbit_error_budget_fires_eventually() {
        // a tiny rational q revisits [0, q) so rarely that the step guard in
        // first_return_orbit must be generous; check it does not misfire
        let q = QValue::rational_for_tests(1, 5);
        let orbit = first_return_orbit(&q, &QLin::zero(), 3);
        assert!(orbit.is_ok());
    }
}

/// Index of the first `i` (1-based) where `k_i != a_{2i}`, or `None` if the
/// identity holds over the computed range.
pub fn k_vs_a2i_verdict(seq: &ReturnSequences, a: &[u64]) -> Option<usize> {
    for (i, k) in seq.k_idx.iter().enumerate() {
        let want_index = 2 * (i + 1);
        match a.get(want_index - 1) {
            Some(&a_val) => {
                if BigUint::from(a_val) != *k {
                    return Some(i + 1);
                }
            }
            None => return None,
        }
    }
    None
}
