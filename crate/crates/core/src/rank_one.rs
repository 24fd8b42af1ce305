//! Cutting-and-stacking towers for rank-one interval transformations.
//!
//! A stage is a Rokhlin tower of `h_n` levels, each an exact interval of
//! width `1/(r_1...r_n)` in units where the non-spacer base is `[0, 1)`.
//! With that normalization every level endpoint sits on the grid
//! `k/(r_1...r_n)`, so levels are stored as integer grid indices and all
//! tower arithmetic stays in machine integers; callers see exact rationals.
//!
//! Stages are immutable after construction. `refine` returns a new value and
//! never touches its input, so stages can be shared freely across threads.

use crate::error::{CoreError, Result};
use crate::num::Coord;
use crate::Budgets;
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::json;
use std::sync::Arc;

/// Generators for a rank-one construction: the cutting sequence `r_n` and the
/// spacer assignment `s_{n,i}` (spacers stacked over subcolumn `i` at step `n`,
/// `1 <= i <= r_n`).
///
/// Implementations must be deterministic: repeated queries with the same
/// arguments return identical values.
pub trait RankOneSpec: Send + Sync {
    /// `r_n` for `n >= 1`; must be positive.
    fn cutting(&self, n: u32) -> u64;

    /// `s_{n,i}` for `1 <= i <= r_n`; non-negative.
    fn spacers(&self, n: u32, i: u64) -> u64;

    /// Total spacer count at step `n`. Override when a closed form exists;
    /// the default sums `r_n` queries.
    fn spacer_total(&self, n: u32) -> BigUint {
        let r = self.cutting(n);
        let mut total = BigUint::zero();
        for i in 1..=r {
            total += self.spacers(n, i);
        }
        total
    }
}

/// Constant cutting and spacer counts; covers the identity tower
/// (`r = 1, s = 0`) and the plain doubling map (`r = 2, s = 0`).
#[derive(Clone, Copy, Debug)]
pub struct UniformSpec {
    pub r: u64,
    pub s: u64,
}

impl RankOneSpec for UniformSpec {
    fn cutting(&self, _n: u32) -> u64 {
        self.r
    }
    fn spacers(&self, _n: u32, _i: u64) -> u64 {
        self.s
    }
    fn spacer_total(&self, _n: u32) -> BigUint {
        BigUint::from(self.r) * BigUint::from(self.s)
    }
}

/// Tower height `h_n` by the recurrence `h_n = r_n h_{n-1} + sum_i s_{n,i}`
/// with `h_0 = 1`. Arbitrary precision: heights outgrow `u64` around stage 20
/// for the classical staircase.
pub fn height(spec: &dyn RankOneSpec, n: u32) -> Result<BigUint> {
    let mut h = BigUint::one();
    for step in 1..=n {
        let r = spec.cutting(step);
        if r == 0 {
            return Err(CoreError::InvalidSpec(format!("r_{step} = 0; cutting values must be positive")));
        }
        h = h * r + spec.spacer_total(step);
    }
    Ok(h)
}

/// Level kind: spacer mass sits above the unit base.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LevelKind {
    NonSpacer,
    Spacer,
}

/// Read-only view of one level of a stage.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Level {
    pub index: u64,
    pub x_left: Coord,
    pub width: Coord,
    pub kind: LevelKind,
    /// Step at which this level's spacer mass was introduced; 0 for non-spacer.
    pub birth_step: u32,
}

/// The stage-`n` Rokhlin tower.
#[derive(Clone, Debug)]
pub struct Stage {
    n: u32,
    /// Common denominator `r_1...r_n`; every level is `[c/denom, (c+1)/denom)`.
    denom: u64,
    /// Grid index of each level's left endpoint, bottom to top.
    x_nums: Vec<u64>,
    kinds: Vec<LevelKind>,
    births: Vec<u32>,
    /// Inverse map: grid cell -> level index. Grid cells are exactly `0..h`.
    level_of: Vec<u32>,
}

impl Stage {
    /// Stage 0: the bare base interval `[0, 1)`, one non-spacer level.
    fn seed() -> Stage {
        Stage {
            n: 0,
            denom: 1,
            x_nums: vec![0],
            kinds: vec![LevelKind::NonSpacer],
            births: vec![0],
            level_of: vec![0],
        }
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// Level count `h_n`.
    pub fn h(&self) -> u64 {
        self.x_nums.len() as u64
    }

    /// Grid denominator `r_1...r_n`.
    pub fn denom(&self) -> u64 {
        self.denom
    }

    /// Count of non-spacer levels (they tile `[0, 1)`, so this equals `denom`).
    pub fn non_spacer_count(&self) -> u64 {
        self.denom
    }

    pub fn kind(&self, level: u64) -> LevelKind {
        self.kinds[level as usize]
    }

    pub fn birth_step(&self, level: u64) -> u32 {
        self.births[level as usize]
    }

    pub fn x_num(&self, level: u64) -> u64 {
        self.x_nums[level as usize]
    }

    pub fn width(&self) -> Coord {
        BigRational::new(BigInt::one(), BigInt::from(self.denom))
    }

    pub fn x_left(&self, level: u64) -> Coord {
        BigRational::new(BigInt::from(self.x_nums[level as usize]), BigInt::from(self.denom))
    }

    /// Closed-open interval of a level.
    pub fn interval(&self, level: u64) -> (Coord, Coord) {
        let lo = self.x_left(level);
        let hi = &lo + self.width();
        (lo, hi)
    }

    pub fn level(&self, level: u64) -> Level {
        Level {
            index: level,
            x_left: self.x_left(level),
            width: self.width(),
            kind: self.kind(level),
            birth_step: self.birth_step(level),
        }
    }

    pub fn levels(&self) -> impl Iterator<Item = Level> + '_ {
        (0..self.h()).map(move |k| self.level(k))
    }

    pub fn is_top(&self, level: u64) -> bool {
        level + 1 == self.h()
    }

    /// Total support length `h_n / (r_1...r_n)`; also the leftmost unallocated
    /// spacer coordinate.
    pub fn support_end(&self) -> Coord {
        BigRational::new(BigInt::from(self.h()), BigInt::from(self.denom))
    }

    /// Leftmost coordinate not yet covered by a spacer; spacers always tile
    /// `[1, support_end)` densely in allocation order.
    pub fn spacer_frontier(&self) -> Coord {
        self.support_end()
    }

    /// Level containing `x`, with the closed-open convention. `None` outside
    /// the support.
    pub fn locate(&self, x: &Coord) -> Option<u64> {
        if x.is_negative() {
            return None;
        }
        let cell = (x * BigRational::from_integer(BigInt::from(self.denom))).floor().to_integer();
        let cell = cell.to_u64()?;
        if cell >= self.h() {
            return None;
        }
        Some(self.level_of[cell as usize] as u64)
    }

    /// True when `x` is exactly a grid point of this stage (a level endpoint).
    pub fn on_grid(&self, x: &Coord) -> bool {
        let scaled = x * BigRational::from_integer(BigInt::from(self.denom));
        scaled.is_integer()
    }

    /// Translation carrying level `k` onto level `k+1`.
    pub fn translation(&self, level: u64) -> Coord {
        assert!(!self.is_top(level), "top level has no successor at this stage");
        let from = BigInt::from(self.x_nums[level as usize]);
        let to = BigInt::from(self.x_nums[level as usize + 1]);
        BigRational::new(to - from, BigInt::from(self.denom))
    }

    /// Debug serialization: exact endpoints as `p/q` strings.
    pub fn to_json(&self) -> serde_json::Value {
        let levels: Vec<_> = self
            .levels()
            .map(|lv| {
                json!({
                    "x_left": lv.x_left.to_string(),
                    "width": lv.width.to_string(),
                    "kind": match lv.kind { LevelKind::NonSpacer => "non-spacer", LevelKind::Spacer => "spacer" },
                    "birth_step": lv.birth_step,
                })
            })
            .collect();
        json!({ "n": self.n, "h": self.h(), "levels": levels })
    }
}

/// Refines a stage by one step: cut into `r_{n+1}` subcolumns, add spacers,
/// restack. Returns a new stage; the input is untouched.
pub fn refine(stage: &Stage, spec: &dyn RankOneSpec, budgets: &Budgets) -> Result<Stage> {
    let step = stage.n + 1;
    let r = spec.cutting(step);
    if r == 0 {
        return Err(CoreError::InvalidSpec(format!("r_{step} = 0; cutting values must be positive")));
    }
    let h_old = stage.h();
    let mut spacer_total: u128 = 0;
    for i in 1..=r {
        spacer_total += spec.spacers(step, i) as u128;
    }
    let new_h = (h_old as u128) * (r as u128) + spacer_total;
    if new_h > budgets.max_levels as u128 {
        return Err(CoreError::LevelBudget {
            requested: step,
            needed: new_h,
            budget: budgets.max_levels,
        });
    }
    let new_denom = (stage.denom as u128) * (r as u128);
    if new_denom > u64::MAX as u128 {
        return Err(CoreError::Overflow("stage grid denominator"));
    }
    let new_h = new_h as u64;
    let new_denom = new_denom as u64;

    let mut x_nums = Vec::with_capacity(new_h as usize);
    let mut kinds = Vec::with_capacity(new_h as usize);
    let mut births = Vec::with_capacity(new_h as usize);
    // Spacers allocate left to right from the frontier, ordered by
    // (subcolumn index, stacking position).
    let mut frontier = h_old
        .checked_mul(r)
        .ok_or(CoreError::Overflow("spacer frontier"))?;
    for i in 0..r {
        for k in 0..h_old as usize {
            x_nums.push(stage.x_nums[k] * r + i);
            kinds.push(stage.kinds[k]);
            births.push(stage.births[k]);
        }
        for _ in 0..spec.spacers(step, i + 1) {
            x_nums.push(frontier);
            kinds.push(LevelKind::Spacer);
            births.push(step);
            frontier += 1;
        }
    }
    debug_assert_eq!(x_nums.len() as u64, new_h);
    debug_assert_eq!(frontier, new_h);

    let mut level_of = vec![0u32; new_h as usize];
    for (lvl, &c) in x_nums.iter().enumerate() {
        level_of[c as usize] = lvl as u32;
    }
    Ok(Stage {
        n: step,
        denom: new_denom,
        x_nums,
        kinds,
        births,
        level_of,
    })
}

/// Builds the stage-`n` tower from scratch.
pub fn build_stage(spec: &dyn RankOneSpec, n: u32, budgets: &Budgets) -> Result<Stage> {
    let mut stage = Stage::seed();
    for _ in 0..n {
        stage = refine(&stage, spec, budgets)?;
    }
    Ok(stage)
}

/// Result of one application of `T` to a point, carrying the (possibly
/// refined) stage it was computed in.
#[derive(Clone, Debug)]
pub struct TStep {
    pub x: Coord,
    pub stage: Arc<Stage>,
    /// The point sat exactly on a level endpoint when the translation was
    /// applied: it is a discontinuity of the limit transformation, resolved
    /// by the closed-open convention and reported rather than perturbed.
    pub singular: bool,
}

/// Applies `T` once to `x`, refining lazily (and reusing `stage`) while `x`
/// sits in a top level. Exact translation; fails with `DepthExhausted` when
/// `budgets.max_stage` is reached with `x` still on top.
pub fn apply_t_in(
    stage: Arc<Stage>,
    spec: &dyn RankOneSpec,
    x: &Coord,
    budgets: &Budgets,
) -> Result<TStep> {
    if x.is_negative() {
        return Err(CoreError::InvalidSpec(format!("x = {x} is negative")));
    }
    let mut stage = stage;
    loop {
        // spacer territory appears only at deeper stages, so "not located"
        // and "in the top level" both mean: refine and retry
        if let Some(level) = stage.locate(x) {
            if !stage.is_top(level) {
                let singular = !x.is_zero() && stage.on_grid(x);
                let x_next = x + stage.translation(level);
                return Ok(TStep {
                    x: x_next,
                    stage,
                    singular,
                });
            }
        }
        if stage.n() >= budgets.max_stage {
            return Err(CoreError::DepthExhausted {
                max_stage: budgets.max_stage,
            });
        }
        stage = Arc::new(refine(&stage, spec, budgets)?);
    }
}

/// Locates `x`, refining the stage as needed until the growing support
/// reaches it.
pub fn locate_or_refine(
    stage: Arc<Stage>,
    spec: &dyn RankOneSpec,
    x: &Coord,
    budgets: &Budgets,
) -> Result<(Arc<Stage>, u64)> {
    if x.is_negative() {
        return Err(CoreError::InvalidSpec(format!("x = {x} is negative")));
    }
    let mut stage = stage;
    loop {
        if let Some(level) = stage.locate(x) {
            return Ok((stage, level));
        }
        if stage.n() >= budgets.max_stage {
            return Err(CoreError::DepthExhausted {
                max_stage: budgets.max_stage,
            });
        }
        stage = Arc::new(refine(&stage, spec, budgets)?);
    }
}

/// Applies `T` once to `x`, building refinement state on demand up to
/// `max_stage`.
pub fn apply_t(spec: &dyn RankOneSpec, x: &Coord, max_stage: u32, budgets: &Budgets) -> Result<Coord> {
    let local = Budgets {
        max_stage,
        ..budgets.clone()
    };
    let stage = Arc::new(build_stage(spec, 1, &local)?);
    Ok(apply_t_in(stage, spec, x, &local)?.x)
}

/// Exact partial support length `h_n / (r_1...r_n)`; arbitrary precision, so
/// it works far past the explicit-stage budgets.
pub fn partial_total_length(spec: &dyn RankOneSpec, n: u32) -> Result<Coord> {
    let h = height(spec, n)?;
    let mut denom = BigUint::one();
    for step in 1..=n {
        denom *= spec.cutting(step);
    }
    Ok(BigRational::new(h.into(), denom.into()))
}

/// Report of the base-length normalization `A = 1/b`.
#[derive(Clone, Debug)]
pub struct NormalizeReport {
    /// `A = 1/b`, the physical length of the unit base.
    pub a: f64,
    /// Exact partial `b_n` at the stopping stage.
    pub b_partial: Coord,
    /// Stage at which `|b_{n+1} - b_n| < tol` fired.
    pub stages_used: u32,
}

/// Detects the support limit `b = lim h_n/(r_1...r_n)` with the
/// successive-difference stopping rule and returns `A = 1/b`.
pub fn normalize_a(spec: &dyn RankOneSpec, tol: f64, max_depth: u32) -> Result<NormalizeReport> {
    if tol <= 0.0 {
        return Err(CoreError::InvalidSpec("tolerance must be positive".into()));
    }
    let mut prev = partial_total_length(spec, 1)?;
    for n in 2..=max_depth {
        let cur = partial_total_length(spec, n)?;
        let diff = (&cur - &prev).abs();
        if diff.to_f64().unwrap_or(f64::INFINITY) < tol {
            return Ok(NormalizeReport {
                a: 1.0 / cur.to_f64().unwrap_or(f64::NAN),
                b_partial: cur,
                stages_used: n,
            });
        }
        prev = cur;
    }
    Err(CoreError::NoConvergence { depth: max_depth })
}

/// `r_n^2 / h_n` for `n = 1..=n_max`; restricted growth means this tends to 0.
pub fn restricted_growth_profile(spec: &dyn RankOneSpec, n_max: u32) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(n_max as usize);
    let mut h = BigUint::one();
    for n in 1..=n_max {
        let r = spec.cutting(n);
        if r == 0 {
            return Err(CoreError::InvalidSpec(format!("r_{n} = 0")));
        }
        h = h * r + spec.spacer_total(n);
        let ratio = BigRational::new(BigInt::from(r) * BigInt::from(r), BigInt::from(h.clone()));
        out.push(ratio.to_f64().unwrap_or(f64::NAN));
    }
    Ok(out)
}

/// Canonical (stage, level, offset) address of a point in a stage's support.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TowerPoint {
    pub stage_n: u32,
    pub level: u64,
    pub offset: Coord,
}

impl TowerPoint {
    pub fn from_coord(stage: &Stage, x: &Coord) -> Option<TowerPoint> {
        let level = stage.locate(x)?;
        Some(TowerPoint {
            stage_n: stage.n(),
            level,
            offset: x - stage.x_left(level),
        })
    }

    pub fn to_coord(&self, stage: &Stage) -> Coord {
        assert_eq!(stage.n(), self.stage_n);
        stage.x_left(self.level) + &self.offset
    }
}
