//! Discrepancy and height-set equidistribution statistics.
//!
//! Heights are always compared as exact `Q + Q*q` pairs, never as floats, so
//! "distinct heights" has no rounding ambiguity. Only the final ratios and
//! discrepancies are reported as floats.

use crate::error::{CoreError, Result};
use crate::flow::{SegmentEnsemble, Segment};
use crate::num::{Coord, QLin, QValue};
use crate::rank_one::LevelKind;
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use std::cmp::Ordering;
use std::collections::BTreeSet;

/// Which part of the base a height-set query ranges over.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BaseSelector {
    /// All segments over the non-spacer region `[0, 1)`.
    NonSpacer,
    /// All segments over the spacer region `[1, b)`.
    Spacer,
    /// Segments whose x-interval meets `[x_lo, x_hi)`; with level-aligned
    /// cylinders this is exactly containment.
    Cylinder { x_lo: Coord, x_hi: Coord },
}

impl BaseSelector {
    fn admits(&self, ens: &SegmentEnsemble, seg: &Segment) -> bool {
        match self {
            BaseSelector::NonSpacer => ens.stage().kind(seg.level) == LevelKind::NonSpacer,
            BaseSelector::Spacer => ens.stage().kind(seg.level) == LevelKind::Spacer,
            BaseSelector::Cylinder { x_lo, x_hi } => seg.x_lo < *x_hi && *x_lo < seg.x_hi,
        }
    }

    /// Roof value over this base (the full vertical range of its cylinder).
    fn roof(&self, q: &QValue) -> Result<QLin> {
        Ok(match self {
            BaseSelector::NonSpacer => QLin::one(),
            BaseSelector::Spacer => QLin::q(),
            BaseSelector::Cylinder { x_lo, .. } => {
                if q
                    .sign_lin(
                        &(x_lo - BigRational::from_integer(BigInt::from(1))),
                        &BigRational::from_integer(BigInt::from(0)),
                    )?
                    == Ordering::Less
                {
                    QLin::one()
                } else {
                    QLin::q()
                }
            }
        })
    }
}

/// The distinct exact heights attained by an ensemble over a base, clipped to
/// a closed vertical window.
#[derive(Clone, Debug)]
pub struct HeightSet {
    pub base: BaseSelector,
    pub window: (QLin, QLin),
    pub heights: BTreeSet<QLin>,
}

impl HeightSet {
    pub fn card(&self) -> usize {
        self.heights.len()
    }
}

/// Distinct heights `z` in the closed window attained by segments whose
/// x-position lies in the base.
pub fn height_set(
    ens: &SegmentEnsemble,
    base: BaseSelector,
    window: (QLin, QLin),
) -> Result<HeightSet> {
    let q = ens.q();
    let mut heights = BTreeSet::new();
    for seg in ens.segments() {
        if !base.admits(ens, seg) {
            continue;
        }
        let y = ens.height_of(seg);
        if y.cmp_q(&window.0, q)? != Ordering::Less && y.cmp_q(&window.1, q)? != Ordering::Greater {
            heights.insert(y);
        }
    }
    Ok(HeightSet {
        base,
        window,
        heights,
    })
}

/// A height-count ratio against its equidistribution target.
#[derive(Clone, Debug)]
pub struct RatioReport {
    pub count_window: usize,
    pub count_full: usize,
    pub ratio: f64,
    /// `(b - a) / roof` for the base's cylinder.
    pub target: f64,
}

impl RatioReport {
    pub fn error(&self) -> f64 {
        (self.ratio - self.target).abs()
    }
}

/// Ratio of distinct heights in the window to distinct heights over the whole
/// cylinder range of the base.
pub fn h_ratio(
    ens: &SegmentEnsemble,
    base: BaseSelector,
    window: (QLin, QLin),
) -> Result<RatioReport> {
    let q = ens.q();
    let roof = base.roof(q)?;
    let in_window = height_set(ens, base.clone(), window.clone())?;
    let full = height_set(ens, base, (QLin::zero(), roof.clone()))?;
    if full.card() == 0 {
        return Err(CoreError::NoHeights);
    }
    let width = (&window.1 - &window.0).to_f64(q);
    Ok(RatioReport {
        count_window: in_window.card(),
        count_full: full.card(),
        ratio: in_window.card() as f64 / full.card() as f64,
        target: width / roof.to_f64(q),
    })
}

/// [`h_ratio`] restricted to a single level cylinder.
pub fn hbar_ratio(
    ens: &SegmentEnsemble,
    cylinder: (Coord, Coord),
    window: (QLin, QLin),
) -> Result<RatioReport> {
    h_ratio(
        ens,
        BaseSelector::Cylinder {
            x_lo: cylinder.0,
            x_hi: cylinder.1,
        },
        window,
    )
}

/// Frequency of `idx * q mod 1` landing in the half-open window, over a
/// strictly increasing index sequence.
pub fn subsequence_equidist(
    q: &QValue,
    indices: &[BigUint],
    window: (QLin, QLin),
) -> Result<RatioReport> {
    if indices.is_empty() {
        return Err(CoreError::NoHeights);
    }
    for w in indices.windows(2) {
        if w[1] <= w[0] {
            return Err(CoreError::InvalidSpec("indices must be strictly increasing".into()));
        }
    }
    let mut hits = 0usize;
    for idx in indices {
        let frac = QLin::new(
            BigRational::from_integer(BigInt::from(0)),
            BigRational::from_integer(BigInt::from(idx.clone())),
        )
        .frac(q)?;
        if frac.cmp_q(&window.0, q)? != Ordering::Less && frac.cmp_q(&window.1, q)? == Ordering::Less
        {
            hits += 1;
        }
    }
    let width = (&window.1 - &window.0).to_f64(q);
    Ok(RatioReport {
        count_window: hits,
        count_full: indices.len(),
        ratio: hits as f64 / indices.len() as f64,
        // the subsequence values live in [0, q)
        target: width / q.to_f64(),
    })
}

/// Sorts exact values, using a float pre-pass and verifying (or repairing)
/// the order with exact comparisons.
fn sort_exact(mut points: Vec<QLin>, q: &QValue) -> Result<Vec<QLin>> {
    let mut keyed: Vec<(f64, QLin)> = points.drain(..).map(|p| (p.to_f64(q), p)).collect();
    keyed.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal));
    let mut out: Vec<QLin> = keyed.into_iter().map(|(_, p)| p).collect();
    // insertion repair: floats can only confuse near-ties
    for i in 1..out.len() {
        let mut j = i;
        while j > 0 && out[j - 1].cmp_q(&out[j], q)? == Ordering::Greater {
            out.swap(j - 1, j);
            j -= 1;
        }
    }
    Ok(out)
}

/// Exact star discrepancy of points in `[0, 1)` by the sorted-points formula.
pub fn star_discrepancy(points: &[QLin], q: &QValue) -> Result<f64> {
    let n = points.len();
    if n == 0 {
        return Err(CoreError::InvalidSpec("star discrepancy of an empty set".into()));
    }
    let sorted = sort_exact(points.to_vec(), q)?;
    let mut best = QLin::zero();
    for (i, x) in sorted.iter().enumerate() {
        let hi = &QLin::from_rational(BigRational::new(
            BigInt::from(i as u64 + 1),
            BigInt::from(n as u64),
        )) - x;
        let lo = x - &QLin::from_rational(BigRational::new(BigInt::from(i as u64), BigInt::from(n as u64)));
        for cand in [hi, lo] {
            if cand.cmp_q(&best, q)? == Ordering::Greater {
                best = cand;
            }
        }
    }
    Ok(best.to_f64(q))
}

/// Exact fractional parts `k q mod 1` for `k = 1..=n`.
pub fn rotation_points(q: &QValue, n: usize) -> Result<Vec<QLin>> {
    let mut out = Vec::with_capacity(n);
    let mut x = QLin::zero();
    for _ in 0..n {
        x = (&x + &QLin::q()).frac(q)?;
        out.push(x.clone());
    }
    Ok(out)
}

/// Magnitude of the normalized exponential sum `(1/N) sum_k e(h k q)`.
pub fn weyl_sum(q: &QValue, n: usize, harmonic: u32) -> Result<f64> {
    if n == 0 {
        return Err(CoreError::InvalidSpec("weyl sum over an empty range".into()));
    }
    let mut re = 0.0f64;
    let mut im = 0.0f64;
    let mut x = QLin::zero();
    for _ in 0..n {
        x = (&x + &QLin::q()).frac(q)?;
        let angle = std::f64::consts::TAU * harmonic as f64 * x.to_f64(q);
        re += angle.cos();
        im += angle.sin();
    }
    Ok((re * re + im * im).sqrt() / n as f64)
}

/// Summary statistics for the orbit `{k q mod 1}`.
#[derive(Clone, Debug)]
pub struct DiscrepancyReport {
    pub n: usize,
    pub d_star: f64,
    /// `(harmonic, magnitude)` pairs.
    pub weyl: Vec<(u32, f64)>,
}

pub fn discrepancy_report(q: &QValue, n: usize, harmonics: u32) -> Result<DiscrepancyReport> {
    let points = rotation_points(q, n)?;
    let d_star = star_discrepancy(&points, q)?;
    let mut weyl = Vec::new();
    for h in 1..=harmonics {
        weyl.push((h, weyl_sum(q, n, h)?));
    }
    Ok(DiscrepancyReport { n, d_star, weyl })
}
