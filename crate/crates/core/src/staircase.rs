//! Staircase specializations and spacer-block combinatorics.
//!
//! A staircase puts `i - 1` spacers over subcolumn `i` at every step, so the
//! spacer levels of a stage organize into maximal runs ("blocks") whose sizes
//! follow a rigid self-similar pattern: the stage-(n+1) catalog is `r_{n+1}`
//! copies of the stage-n catalog with the trailing block of copy `k` enlarged
//! by `k - 1`. Everything here is either a direct enumeration over a built
//! stage or a closed-form prediction checked against that enumeration.

use crate::error::{CoreError, Result};
use crate::rank_one::{build_stage, LevelKind, RankOneSpec};
use crate::Budgets;
use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::One;
use std::collections::BTreeMap;

/// Cutting sequences the staircase models support.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cutting {
    /// `r_n = n` (the classical staircase).
    Classical,
    /// `r_n = slope * n + offset`.
    Linear { slope: u64, offset: u64 },
    /// `r_n = value`.
    Constant { value: u64 },
}

impl Cutting {
    pub fn value(&self, n: u32) -> u64 {
        match *self {
            Cutting::Classical => n as u64,
            Cutting::Linear { slope, offset } => slope * n as u64 + offset,
            Cutting::Constant { value } => value,
        }
    }
}

/// A staircase transformation: cutting sequence plus the implied spacer
/// assignment `s_{n,i} = i - 1`.
#[derive(Clone, Copy, Debug)]
pub struct Staircase {
    pub cutting: Cutting,
}

impl Staircase {
    /// The classical staircase, `r_n = n`.
    pub fn classical() -> Self {
        Staircase {
            cutting: Cutting::Classical,
        }
    }

    pub fn linear(slope: u64, offset: u64) -> Self {
        Staircase {
            cutting: Cutting::Linear { slope, offset },
        }
    }

    pub fn r(&self, n: u32) -> u64 {
        self.cutting.value(n)
    }
}

impl RankOneSpec for Staircase {
    fn cutting(&self, n: u32) -> u64 {
        self.cutting.value(n)
    }

    fn spacers(&self, _n: u32, i: u64) -> u64 {
        i - 1
    }

    fn spacer_total(&self, n: u32) -> BigUint {
        let r = BigUint::from(self.cutting(n));
        (&r * (&r - 1u8)) / 2u8
    }
}

/// Ordered sizes of the maximal spacer runs of one stage, bottom to top.
/// Catalog positions are 1-based throughout.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockCatalog {
    pub stage_n: u32,
    pub blocks: Vec<u64>,
}

impl BlockCatalog {
    pub fn total_spacers(&self) -> u64 {
        self.blocks.iter().sum()
    }
}

/// Scans a built stage for maximal spacer runs. This is the materialized
/// route; [`for_each_block`] streams the same sequence without building the
/// stage and the two are cross-checked in tests.
pub fn enumerate_spacer_blocks(
    spec: &Staircase,
    stage_n: u32,
    budgets: &Budgets,
) -> Result<BlockCatalog> {
    let stage = build_stage(spec, stage_n, budgets)?;
    let mut blocks = Vec::new();
    let mut run = 0u64;
    for level in 0..stage.h() {
        if stage.kind(level) == LevelKind::Spacer {
            run += 1;
        } else if run > 0 {
            blocks.push(run);
            run = 0;
        }
    }
    if run > 0 {
        blocks.push(run);
    }
    Ok(BlockCatalog { stage_n, blocks })
}

/// First stage whose catalog is non-empty (first `n` with `r_n >= 2`), if any
/// up to `stage_n`.
fn base_stage(spec: &Staircase, stage_n: u32) -> Option<u32> {
    (1..=stage_n).find(|&n| spec.r(n) >= 2)
}

/// Streams the stage-`stage_n` block catalog in order without materializing
/// any stage, using the copy-and-enlarge self-similarity. The base case is
/// the first stage with spacers, whose catalog is `[1, 2, .., r - 1]`.
pub fn for_each_block(spec: &Staircase, stage_n: u32, f: &mut impl FnMut(u64)) {
    let Some(n0) = base_stage(spec, stage_n) else {
        return; // no spacers at all by this stage
    };
    emit(spec, stage_n, n0, 0, f);
}

fn emit(spec: &Staircase, n: u32, n0: u32, extra: u64, f: &mut impl FnMut(u64)) {
    if n == n0 {
        let r = spec.r(n0);
        for size in 1..r - 1 {
            f(size);
        }
        f(r - 1 + extra);
        return;
    }
    let r = spec.r(n);
    for k in 1..=r {
        let bump = k - 1 + if k == r { extra } else { 0 };
        emit(spec, n - 1, n0, bump, f);
    }
}

/// Catalog length of each stage `n0..=depth` under the copy recurrence.
fn catalog_lengths(spec: &Staircase, depth: u32) -> Vec<(u32, u128)> {
    let Some(n0) = base_stage(spec, depth) else {
        return Vec::new();
    };
    let mut out = Vec::new();
    let mut len: u128 = (spec.r(n0) - 1) as u128;
    out.push((n0, len));
    for n in n0 + 1..=depth {
        len *= spec.r(n) as u128;
        out.push((n, len));
    }
    out
}

/// Closed-form description of where blocks of one size sit in the catalog.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockFormula {
    /// Block size.
    pub n: u64,
    /// First stage where the size occurs.
    pub m_of_n: u32,
    /// 1-based catalog index of the first occurrence.
    pub f_of_n: u128,
    /// Catalog-index stride between consecutive occurrences.
    pub stride: u128,
    /// Whether the size was the largest newcomer at its birth stage (which
    /// delays the stride by one stage).
    pub is_last_new: bool,
}

/// Derives `(m(n), F(n), stride)` for a block size from the self-similar
/// growth of the catalog. New sizes at stage `m` are exactly the enlarged
/// trailing blocks `L + 1 .. L + r_m - 1` (with `L` the previous maximum),
/// first occurring at indices `k * B_{m-1}`; the stride is the catalog length
/// of the birth stage, or of the next stage for the largest newcomer.
///
/// Also returns the predicted 1-based occurrence list up to the stage-`depth`
/// catalog length.
pub fn block_positions(
    spec: &Staircase,
    size: u64,
    depth: u32,
    _budgets: &Budgets,
) -> Result<(BlockFormula, Vec<u128>)> {
    if size == 0 {
        return Err(CoreError::InvalidSpec("block size must be positive".into()));
    }
    let lengths = catalog_lengths(spec, depth);
    if lengths.is_empty() {
        return Err(CoreError::SizeNotFound { size, depth });
    }
    let (n0, b0) = lengths[0];
    let mut formula: Option<BlockFormula> = None;
    // base stage: sizes 1..r-1, size s first occurs at index s; the largest is last-new
    let r0 = spec.r(n0);
    if size <= r0 - 1 {
        formula = Some(BlockFormula {
            n: size,
            m_of_n: n0,
            f_of_n: size as u128,
            stride: 0, // filled below
            is_last_new: size == r0 - 1,
        });
    }
    let mut last_size = (r0 - 1) as u64;
    let mut prev_len = b0;
    for &(n, len) in &lengths[1..] {
        let r = spec.r(n);
        if formula.is_none() {
            for k in 2..=r {
                let newcomer = last_size + (k - 1);
                if newcomer == size {
                    formula = Some(BlockFormula {
                        n: size,
                        m_of_n: n,
                        f_of_n: k as u128 * prev_len,
                        stride: 0,
                        is_last_new: k == r,
                    });
                    break;
                }
            }
        }
        last_size += r - 1;
        prev_len = len;
    }
    let mut formula = formula.ok_or(CoreError::SizeNotFound { size, depth })?;
    let len_at = |m: u32| -> Option<u128> { lengths.iter().find(|&&(n, _)| n == m).map(|&(_, l)| l) };
    let stride_stage = if formula.is_last_new {
        formula.m_of_n + 1
    } else {
        formula.m_of_n
    };
    formula.stride = match len_at(stride_stage) {
        Some(l) => l,
        // last-new size born exactly at `depth`: its stride stage is one past
        // the horizon, so extend the length recurrence by one step
        None => lengths.last().unwrap().1 * spec.r(stride_stage) as u128,
    };
    let total = lengths.last().unwrap().1;
    let mut positions = Vec::new();
    let mut p = formula.f_of_n;
    while p <= total {
        positions.push(p);
        p += formula.stride;
    }
    Ok((formula, positions))
}

/// `g(n) = prod_{i=2..n} r_i`, exact.
pub fn g_product(spec: &Staircase, n: u32) -> Result<BigUint> {
    if n < 2 {
        return Err(CoreError::InvalidSpec("g(n) needs n >= 2".into()));
    }
    let mut g = BigUint::one();
    for i in 2..=n {
        let r = spec.r(i);
        if r == 0 {
            return Err(CoreError::InvalidSpec(format!("r_{i} = 0")));
        }
        g *= r;
    }
    Ok(g)
}

/// Empirical block-size frequencies `P_n` over the stage catalog; exact
/// rationals summing to 1.
pub fn block_size_distribution(
    spec: &Staircase,
    stage_n: u32,
    budgets: &Budgets,
) -> Result<BTreeMap<u64, BigRational>> {
    let catalog = enumerate_spacer_blocks(spec, stage_n, budgets)?;
    if catalog.blocks.is_empty() {
        return Err(CoreError::EmptyCatalog { stage: stage_n });
    }
    let total = catalog.blocks.len() as u64;
    let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
    for &b in &catalog.blocks {
        *counts.entry(b).or_insert(0) += 1;
    }
    Ok(counts
        .into_iter()
        .map(|(size, c)| (size, BigRational::new(c.into(), total.into())))
        .collect())
}
