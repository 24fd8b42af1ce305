//! Mixing diagnostics: partial partitions, projection overlaps, rectangle
//! correlations, the partial-partition mixing criterion, correlation decay
//! curves and a triple-correlation estimator.
//!
//! Overlaps are computed forward: flow the base interval, clip the flowed
//! segments against the target set, and sum exact lengths. Measure
//! preservation makes that equal to the pullback overlap, so no backward
//! engine exists (a Monte Carlo backward point flow cross-checks the
//! identity instead).
//!
//! Two normalizations are reported everywhere. `raw` divides by plain
//! two-dimensional Lebesgue measure of the target; `norm` divides by the
//! flow-invariant probability measure (Lebesgue over the surface area
//! `1 + (b-1) q`), which is the one with limit 1 for a mixing flow.

use crate::error::{CoreError, Result};
use crate::flow::{flow_point_backward, FlowContext, SegmentEnsemble};
use crate::num::{Coord, QLin, QValue};
use crate::rank_one::{build_stage, partial_total_length, Stage};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::cmp::Ordering;
use std::sync::Arc;

/// Which side of the spacer boundary `x = 1` a rectangle occupies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Region {
    NonSpacer,
    Spacer,
    Straddling,
}

/// An axis-aligned rectangle under the roof: base `[x_lo, x_hi)` times
/// vertical window `[y_lo, y_hi]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rectangle {
    pub x_lo: Coord,
    pub x_hi: Coord,
    pub y_lo: QLin,
    pub y_hi: QLin,
}

impl Rectangle {
    pub fn new(x_lo: Coord, x_hi: Coord, y_lo: QLin, y_hi: QLin) -> Self {
        Rectangle {
            x_lo,
            x_hi,
            y_lo,
            y_hi,
        }
    }

    /// Rectangle over a whole level of a stage.
    pub fn over_level(stage: &Stage, level: u64, y_lo: QLin, y_hi: QLin) -> Self {
        let (x_lo, x_hi) = stage.interval(level);
        Rectangle::new(x_lo, x_hi, y_lo, y_hi)
    }

    pub fn region(&self) -> Region {
        let one = BigRational::one();
        if self.x_hi <= one {
            Region::NonSpacer
        } else if self.x_lo >= one {
            Region::Spacer
        } else {
            Region::Straddling
        }
    }

    /// Checks base orientation and that the window fits under the roof of
    /// the region (a straddling rectangle must fit under `q`).
    pub fn validate(&self, q: &QValue) -> Result<()> {
        if self.x_hi <= self.x_lo || self.x_lo.is_negative() {
            return Err(CoreError::InvalidSpec("rectangle base is empty or negative".into()));
        }
        if self.y_lo.sign(q)? == Ordering::Less {
            return Err(CoreError::InvalidSpec("rectangle window starts below 0".into()));
        }
        if self.y_hi.cmp_q(&self.y_lo, q)? != Ordering::Greater {
            return Err(CoreError::InvalidSpec("rectangle window is empty".into()));
        }
        let cap = match self.region() {
            Region::NonSpacer => QLin::one(),
            _ => QLin::q(),
        };
        if self.y_hi.cmp_q(&cap, q)? == Ordering::Greater {
            return Err(CoreError::InvalidSpec(
                "rectangle window pokes above the roof of its region".into(),
            ));
        }
        Ok(())
    }

    /// Splits a straddling rectangle at `x = 1` into its non-spacer and
    /// spacer parts (windows unchanged).
    pub fn split(&self) -> (Option<Rectangle>, Option<Rectangle>) {
        let one = BigRational::one();
        match self.region() {
            Region::NonSpacer => (Some(self.clone()), None),
            Region::Spacer => (None, Some(self.clone())),
            Region::Straddling => (
                Some(Rectangle::new(
                    self.x_lo.clone(),
                    one.clone(),
                    self.y_lo.clone(),
                    self.y_hi.clone(),
                )),
                Some(Rectangle::new(
                    one,
                    self.x_hi.clone(),
                    self.y_lo.clone(),
                    self.y_hi.clone(),
                )),
            ),
        }
    }

    pub fn base_len(&self) -> Coord {
        &self.x_hi - &self.x_lo
    }

    pub fn height_len(&self) -> QLin {
        &self.y_hi - &self.y_lo
    }

    /// Plain 2-D Lebesgue measure, exact.
    pub fn mu(&self) -> QLin {
        self.height_len().scale(&self.base_len())
    }
}

/// A finite union of rectangles (assumed pairwise disjoint).
#[derive(Clone, Debug)]
pub struct SurfaceSet {
    pub rects: Vec<Rectangle>,
}

impl SurfaceSet {
    pub fn new(rects: Vec<Rectangle>) -> Self {
        SurfaceSet { rects }
    }

    /// The whole surface (up to the partial support end `b`).
    pub fn full_surface(b_partial: &Coord) -> Self {
        SurfaceSet::new(vec![
            Rectangle::new(BigRational::zero(), BigRational::one(), QLin::zero(), QLin::one()),
            Rectangle::new(BigRational::one(), b_partial.clone(), QLin::zero(), QLin::q()),
        ])
    }

    pub fn mu(&self) -> QLin {
        let mut total = QLin::zero();
        for r in &self.rects {
            total = &total + &r.mu();
        }
        total
    }
}

/// Invariant total area `1 * 1 + (b - 1) * q`; dividing Lebesgue measure by
/// this gives the flow-invariant probability measure.
pub fn invariant_area(b_partial: &Coord) -> QLin {
    QLin::new(
        BigRational::one(),
        b_partial - BigRational::one(),
    )
}

/// Exact length of `{x in segment bases : position in rect}`: clips each
/// segment against the base and keeps those whose height falls in the closed
/// window.
pub fn rect_overlap(ens: &SegmentEnsemble, rect: &Rectangle) -> Result<Coord> {
    let q = ens.q();
    let mut total = BigRational::zero();
    for seg in ens.segments() {
        let lo = seg.x_lo.clone().max(rect.x_lo.clone());
        let hi = seg.x_hi.clone().min(rect.x_hi.clone());
        if hi <= lo {
            continue;
        }
        let y = ens.height_of(seg);
        if y.cmp_q(&rect.y_lo, q)? != Ordering::Less && y.cmp_q(&rect.y_hi, q)? != Ordering::Greater
        {
            total += hi - lo;
        }
    }
    Ok(total)
}

/// [`rect_overlap`] summed over a union of disjoint rectangles.
pub fn set_overlap(ens: &SegmentEnsemble, set: &SurfaceSet) -> Result<Coord> {
    let mut total = BigRational::zero();
    for r in &set.rects {
        total += rect_overlap(ens, r)?;
    }
    Ok(total)
}

/// Flows one level to time `t` and measures the mass of the flowed set over
/// the vertical strip on `[base_lo, base_hi)`, ignoring heights.
pub fn projection_overlap(
    ctx: &FlowContext,
    stage: Arc<Stage>,
    level: u64,
    base: (&Coord, &Coord),
    t: &QLin,
) -> Result<Coord> {
    let ens = SegmentEnsemble::from_level(ctx.clone(), stage, level).flowed(t)?;
    Ok(ens.projection_overlap(base.0, base.1))
}

/// Flows one level to time `t` and measures `λ(I ∩ φ_{-t} R)` forward.
pub fn rect_correlation(
    ctx: &FlowContext,
    stage: Arc<Stage>,
    level: u64,
    rect: &Rectangle,
    t: &QLin,
) -> Result<Coord> {
    rect.validate(&ctx.q)?;
    let ens = SegmentEnsemble::from_level(ctx.clone(), stage, level).flowed(t)?;
    rect_overlap(&ens, rect)
}

// ---------------------------------------------------------------------------
// partial partitions

/// The stage-`m` levels as a partial partition of the base: mesh below delta,
/// total mass above `1 - delta`, in units where the base has length 1.
#[derive(Clone, Debug)]
pub struct PartialPartition {
    pub m: u32,
    pub stage: Arc<Stage>,
    /// All level indices of the stage (every level is a member).
    pub members: Vec<u64>,
    /// Common member length, normalized by the base length `b`.
    pub mesh: Coord,
    /// Total member mass `b_m / b`, normalized.
    pub mass: Coord,
}

/// Finds the smallest `m >= m0(q)` whose stage satisfies both partial
/// partition requirements, using `b_ref` as the support length.
pub fn partial_partition(
    ctx: &FlowContext,
    delta: f64,
    b_ref: &Coord,
) -> Result<PartialPartition> {
    if !(0.0 < delta && delta < 1.0) {
        return Err(CoreError::InvalidSpec("delta must be in (0, 1)".into()));
    }
    let delta_rat = BigRational::from_float(delta)
        .ok_or_else(|| CoreError::InvalidSpec("delta is not finite".into()))?;
    let m_lo = crate::flow::rotation::m0(ctx.spec.as_ref(), &ctx.q)?;
    for m in m_lo..=ctx.budgets.max_stage {
        let b_m = partial_total_length(ctx.spec.as_ref(), m)?;
        let mut denom = BigRational::one();
        for step in 1..=m {
            denom *= BigRational::from_integer(BigInt::from(ctx.spec.cutting(step)));
        }
        let mesh = denom.recip() / b_ref;
        let mass = &b_m / b_ref;
        if mesh < delta_rat && mass > BigRational::one() - &delta_rat {
            let stage = Arc::new(build_stage(ctx.spec.as_ref(), m, &ctx.budgets)?);
            let members = (0..stage.h()).collect();
            return Ok(PartialPartition {
                m,
                stage,
                members,
                mesh,
                mass,
            });
        }
    }
    Err(CoreError::NoConvergence {
        depth: ctx.budgets.max_stage,
    })
}

// ---------------------------------------------------------------------------
// swept (two-dimensional) correlations

/// One flowing copy of the base interval plus the set it is tested against.
struct SweepArm<'a> {
    ens: SegmentEnsemble,
    set: &'a SurfaceSet,
}

/// Marked pre-image intervals of one arm: the parts of the base currently
/// positioned inside the arm's set (window taken half-open for the sweep).
fn marked_src_intervals(arm: &SweepArm<'_>) -> Result<Vec<(Coord, Coord)>> {
    let q = arm.ens.q();
    let mut marked: Vec<(Coord, Coord)> = Vec::new();
    for seg in arm.ens.segments() {
        let y = arm.ens.height_of(seg);
        for rect in &arm.set.rects {
            let lo = seg.x_lo.clone().max(rect.x_lo.clone());
            let hi = seg.x_hi.clone().min(rect.x_hi.clone());
            if hi <= lo {
                continue;
            }
            if y.cmp_q(&rect.y_lo, q)? == Ordering::Less
                || y.cmp_q(&rect.y_hi, q)? != Ordering::Less
            {
                continue;
            }
            let s_lo = &seg.src_lo + (&lo - &seg.x_lo);
            let s_hi = &seg.src_lo + (&hi - &seg.x_lo);
            marked.push((s_lo, s_hi));
        }
    }
    marked.sort();
    // merge overlaps so unions are honest lengths
    let mut merged: Vec<(Coord, Coord)> = Vec::with_capacity(marked.len());
    for (lo, hi) in marked {
        match merged.last_mut() {
            Some((_, last_hi)) if lo <= *last_hi => {
                if hi > *last_hi {
                    *last_hi = hi;
                }
            }
            _ => merged.push((lo, hi)),
        }
    }
    Ok(merged)
}

/// Length of the intersection of per-arm marked unions.
fn joint_length(arms: &[SweepArm<'_>]) -> Result<Coord> {
    let mut current: Option<Vec<(Coord, Coord)>> = None;
    for arm in arms {
        let marked = marked_src_intervals(arm)?;
        current = Some(match current {
            None => marked,
            Some(prev) => intersect_intervals(&prev, &marked),
        });
    }
    let mut total = BigRational::zero();
    if let Some(list) = current {
        for (lo, hi) in list {
            total += hi - lo;
        }
    }
    Ok(total)
}

fn intersect_intervals(a: &[(Coord, Coord)], b: &[(Coord, Coord)]) -> Vec<(Coord, Coord)> {
    let mut out = Vec::new();
    let (mut i, mut j) = (0usize, 0usize);
    while i < a.len() && j < b.len() {
        let lo = a[i].0.clone().max(b[j].0.clone());
        let hi = a[i].1.clone().min(b[j].1.clone());
        if hi > lo {
            out.push((lo, hi));
        }
        if a[i].1 <= b[j].1 {
            i += 1;
        } else {
            j += 1;
        }
    }
    out
}

/// Smallest strictly positive time until some arm segment hits its roof or
/// crosses a window boundary of its set, capped by `cap`.
fn next_event(arms: &[SweepArm<'_>], cap: &QLin, q: &QValue) -> Result<QLin> {
    let mut best = cap.clone();
    for arm in arms {
        let stage = arm.ens.stage();
        for seg in arm.ens.segments() {
            let y = arm.ens.height_of(seg);
            let roof = crate::flow::Roof::from_kind(stage.kind(seg.level)).qlin();
            let to_roof = &roof - &y;
            if to_roof.sign(q)? == Ordering::Greater && to_roof.cmp_q(&best, q)? == Ordering::Less {
                best = to_roof;
            }
            for rect in &arm.set.rects {
                let lo = seg.x_lo.clone().max(rect.x_lo.clone());
                let hi = seg.x_hi.clone().min(rect.x_hi.clone());
                if hi <= lo {
                    continue;
                }
                for bound in [&rect.y_lo, &rect.y_hi] {
                    let dt = bound - &y;
                    if dt.sign(q)? == Ordering::Greater && dt.cmp_q(&best, q)? == Ordering::Less {
                        best = dt;
                    }
                }
            }
        }
    }
    Ok(best)
}

/// Exact integral over `s in [0, sweep)` of the joint pre-image length
/// `λ{σ : arm_c position at extra time s lies in set_c for every c}`.
///
/// Each arm starts as the base interval flowed by its own offset; the sweep
/// advances all arms together, event by event, and the integrand is constant
/// between events.
pub fn swept_joint_overlap(
    ctx: &FlowContext,
    stage: Arc<Stage>,
    base: (&Coord, &Coord),
    arms_spec: &[(QLin, &SurfaceSet)],
    sweep: &QLin,
) -> Result<QLin> {
    if sweep.sign(&ctx.q)? != Ordering::Greater {
        return Ok(QLin::zero());
    }
    let mut arms = Vec::with_capacity(arms_spec.len());
    for (offset, set) in arms_spec {
        let ens = SegmentEnsemble::from_interval(ctx.clone(), stage.clone(), base.0, base.1)?
            .flowed(offset)?;
        arms.push(SweepArm { ens, set });
    }
    let mut acc = QLin::zero();
    let mut remaining = sweep.clone();
    while remaining.sign(&ctx.q)? == Ordering::Greater {
        let dt = next_event(&arms, &remaining, &ctx.q)?;
        let g = joint_length(&arms)?;
        acc = &acc + &dt.scale(&g);
        for arm in &mut arms {
            arm.ens.flow_assign(&dt)?;
        }
        remaining = &remaining - &dt;
    }
    Ok(acc)
}

/// Exact `μ(φ_{-t}(A) ∩ B)` via the layer-cake over `B`'s windows.
pub fn set_correlation(
    ctx: &FlowContext,
    stage: Arc<Stage>,
    a: &SurfaceSet,
    b: &SurfaceSet,
    t: &QLin,
) -> Result<QLin> {
    let mut total = QLin::zero();
    for rect in &b.rects {
        rect.validate(&ctx.q)?;
        let offset = t + &rect.y_lo;
        let contribution = swept_joint_overlap(
            ctx,
            stage.clone(),
            (&rect.x_lo, &rect.x_hi),
            &[(offset, a)],
            &rect.height_len(),
        )?;
        total = &total + &contribution;
    }
    Ok(total)
}

/// Exact `μ(A1 ∩ φ_{-t1}(A2) ∩ φ_{-t1-t2}(A3))`.
pub fn triple_overlap(
    ctx: &FlowContext,
    stage: Arc<Stage>,
    a1: &SurfaceSet,
    a2: &SurfaceSet,
    a3: &SurfaceSet,
    t1: &QLin,
    t2: &QLin,
) -> Result<QLin> {
    let mut total = QLin::zero();
    for rect in &a1.rects {
        rect.validate(&ctx.q)?;
        let first = t1 + &rect.y_lo;
        let second = &(t1 + t2) + &rect.y_lo;
        let contribution = swept_joint_overlap(
            ctx,
            stage.clone(),
            (&rect.x_lo, &rect.x_hi),
            &[(first, a2), (second, a3)],
            &rect.height_len(),
        )?;
        total = &total + &contribution;
    }
    Ok(total)
}

// ---------------------------------------------------------------------------
// criterion checker and curves

/// Per-time summary of the criterion margins over all partition members.
#[derive(Clone, Debug)]
pub struct CriterionRow {
    pub t: QLin,
    /// Worst member's `overlap / (λ(I) μ̂(R))` with the invariant-probability
    /// normalization.
    pub min_margin_norm: f64,
    /// Worst member's `overlap / (λ(I) μ(R))` with plain Lebesgue measure.
    pub min_margin_raw: f64,
    pub mean_margin_norm: f64,
    pub worst_member: u64,
}

/// Verdict of the partial-partition mixing criterion on a time grid.
#[derive(Clone, Debug)]
pub struct CriterionVerdict {
    pub m: u32,
    pub epsilon: f64,
    pub delta: f64,
    /// First grid time from which every later grid time passes, if any.
    pub t0: Option<QLin>,
    pub rows: Vec<CriterionRow>,
}

impl CriterionVerdict {
    /// Converts a missing `t0` into the criterion error, naming the worst
    /// offending member and time.
    pub fn require_pass(&self) -> Result<()> {
        if self.t0.is_some() {
            return Ok(());
        }
        let worst = self
            .rows
            .iter()
            .min_by(|a, b| a.min_margin_norm.partial_cmp(&b.min_margin_norm).unwrap())
            .expect("verdict has rows");
        Err(CoreError::CriterionNotMet {
            member: format!("I({})[{}]", self.m, worst.worst_member),
            t: format!("{}", worst.t),
            margin: worst.min_margin_norm,
            threshold: 1.0 - self.epsilon,
        })
    }
}

/// Runs the partial-partition criterion: builds the stage-`m` partition for
/// `delta`, flows every member over the grid, and tests
/// `λ(I ∩ φ_{-t} R) >= (1 - ε) μ̂(R) λ(I)` (normalized measure; the raw
/// variant is reported alongside).
pub fn ulcigrai_check(
    ctx: &FlowContext,
    rect: &Rectangle,
    epsilon: f64,
    delta: f64,
    t_grid: &[QLin],
    b_ref: &Coord,
) -> Result<CriterionVerdict> {
    if !(0.0 < epsilon && epsilon <= 1.0) {
        return Err(CoreError::InvalidSpec("epsilon must be in (0, 1]".into()));
    }
    rect.validate(&ctx.q)?;
    let partition = partial_partition(ctx, delta, b_ref)?;
    let area = invariant_area(b_ref).to_f64(&ctx.q);
    let mu_raw = rect.mu().to_f64(&ctx.q);
    let mu_norm = mu_raw / area;
    let mut rows: Vec<CriterionRow> = Vec::with_capacity(t_grid.len());
    // flow every member incrementally along the (sorted) grid
    let mut members: Vec<SegmentEnsemble> = partition
        .members
        .iter()
        .map(|&lvl| SegmentEnsemble::from_level(ctx.clone(), partition.stage.clone(), lvl))
        .collect();
    let mut reached = QLin::zero();
    for t in t_grid {
        let advance = t - &reached;
        if advance.sign(&ctx.q)? == Ordering::Less {
            return Err(CoreError::InvalidSpec("t grid must be nondecreasing".into()));
        }
        let mut min_norm = f64::INFINITY;
        let mut min_raw = f64::INFINITY;
        let mut sum_norm = 0.0;
        let mut worst = 0u64;
        for (idx, ens) in members.iter_mut().enumerate() {
            ens.flow_assign(&advance)?;
            let overlap = rect_overlap(ens, rect)?.to_f64().unwrap_or(f64::NAN);
            let len = partition.stage.width().to_f64().unwrap_or(f64::NAN);
            let margin_norm = overlap / (len * mu_norm);
            let margin_raw = overlap / (len * mu_raw);
            sum_norm += margin_norm;
            if margin_norm < min_norm {
                min_norm = margin_norm;
                min_raw = margin_raw;
                worst = partition.members[idx];
            }
        }
        rows.push(CriterionRow {
            t: t.clone(),
            min_margin_norm: min_norm,
            min_margin_raw: min_raw,
            mean_margin_norm: sum_norm / members.len() as f64,
            worst_member: worst,
        });
        reached = t.clone();
    }
    let t0 = passing_tail_start(&rows, epsilon);
    Ok(CriterionVerdict {
        m: partition.m,
        epsilon,
        delta,
        t0,
        rows,
    })
}

/// First grid time from which all later rows satisfy the margin threshold.
pub fn passing_tail_start(rows: &[CriterionRow], epsilon: f64) -> Option<QLin> {
    let threshold = 1.0 - epsilon;
    let mut start: Option<QLin> = None;
    for row in rows {
        if row.min_margin_norm >= threshold {
            if start.is_none() {
                start = Some(row.t.clone());
            }
        } else {
            start = None;
        }
    }
    start
}

/// One point of a correlation-decay curve.
#[derive(Clone, Debug)]
pub struct CurvePoint {
    pub t: QLin,
    /// Exact overlap `μ(φ_{-t} A ∩ B)`.
    pub overlap: QLin,
    /// Overlap divided by `μ(A) μ(B)` (plain Lebesgue).
    pub ratio_raw: f64,
    /// Overlap times area divided by `μ(A) μ(B)`: the normalized ratio with
    /// mixing limit 1.
    pub ratio_norm: f64,
}

#[derive(Clone, Debug)]
pub struct CorrelationCurve {
    pub points: Vec<CurvePoint>,
    pub mu_a: QLin,
    pub mu_b: QLin,
    pub area: f64,
}

pub fn correlation_curve(
    ctx: &FlowContext,
    stage: Arc<Stage>,
    a: &SurfaceSet,
    b: &SurfaceSet,
    t_grid: &[QLin],
    b_ref: &Coord,
) -> Result<CorrelationCurve> {
    let mu_a = a.mu();
    let mu_b = b.mu();
    let area = invariant_area(b_ref).to_f64(&ctx.q);
    let denom = mu_a.to_f64(&ctx.q) * mu_b.to_f64(&ctx.q);
    let mut points = Vec::with_capacity(t_grid.len());
    for t in t_grid {
        let overlap = set_correlation(ctx, stage.clone(), a, b, t)?;
        let raw = overlap.to_f64(&ctx.q);
        points.push(CurvePoint {
            t: t.clone(),
            overlap,
            ratio_raw: raw / denom,
            ratio_norm: raw * area / denom,
        });
    }
    Ok(CorrelationCurve {
        points,
        mu_a,
        mu_b,
        area,
    })
}

/// Triple correlation ratio at `(t1, t2)`, normalized by the invariant
/// probability measure.
#[derive(Clone, Debug)]
pub struct TripleReport {
    pub overlap: QLin,
    pub ratio_norm: f64,
}

pub fn triple_correlation(
    ctx: &FlowContext,
    stage: Arc<Stage>,
    a1: &SurfaceSet,
    a2: &SurfaceSet,
    a3: &SurfaceSet,
    t1: &QLin,
    t2: &QLin,
    b_ref: &Coord,
) -> Result<TripleReport> {
    let overlap = triple_overlap(ctx, stage, a1, a2, a3, t1, t2)?;
    let area = invariant_area(b_ref).to_f64(&ctx.q);
    let denom = a1.mu().to_f64(&ctx.q) * a2.mu().to_f64(&ctx.q) * a3.mu().to_f64(&ctx.q);
    let ratio_norm = overlap.to_f64(&ctx.q) * area * area / denom;
    Ok(TripleReport {
        overlap,
        ratio_norm,
    })
}

/// Monte Carlo backward estimate of `μ(target ∩ φ_{-t}(from))`: sample points
/// of `from`, flow them backward by `t`, count hits in `target`. Returns
/// `(estimate, standard_error)`.
pub fn mc_backward_overlap(
    ctx: &FlowContext,
    stage: Arc<Stage>,
    target: &Rectangle,
    from: &Rectangle,
    t: &QLin,
    samples: u32,
    seed: u64,
) -> Result<(f64, f64)> {
    target.validate(&ctx.q)?;
    from.validate(&ctx.q)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0u32;
    let base_len = from.base_len();
    let window = from.height_len();
    for _ in 0..samples {
        let ux = BigRational::new(BigInt::from(rng.gen_range(0..u32::MAX)), BigInt::from(u32::MAX));
        let uy = BigRational::new(BigInt::from(rng.gen_range(0..u32::MAX)), BigInt::from(u32::MAX));
        let x = &from.x_lo + &base_len * ux;
        let y = &from.y_lo + &window.scale(&uy);
        let (bx, by, _) = flow_point_backward(ctx, stage.clone(), &x, &y, t)?;
        let in_base = bx >= target.x_lo && bx < target.x_hi;
        let in_window = by.cmp_q(&target.y_lo, &ctx.q)? != Ordering::Less
            && by.cmp_q(&target.y_hi, &ctx.q)? != Ordering::Greater;
        if in_base && in_window {
            hits += 1;
        }
    }
    let mu_from = from.mu().to_f64(&ctx.q);
    let p = hits as f64 / samples as f64;
    let sigma = mu_from * (p * (1.0 - p) / samples as f64).sqrt();
    Ok((mu_from * p, sigma))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::{int, rat};
    use crate::staircase::Staircase;
    use crate::Budgets;

    fn ctx() -> FlowContext {
        FlowContext::new(
            Arc::new(Staircase::classical()),
            QValue::inv_sqrt2(),
            Budgets::default(),
        )
    }

    fn b_ref(ctx: &FlowContext) -> Coord {
        crate::rank_one::normalize_a(ctx.spec.as_ref(), 1e-10, 40)
            .unwrap()
            .b_partial
    }

    fn stage(ctx: &FlowContext, n: u32) -> Arc<Stage> {
        Arc::new(build_stage(ctx.spec.as_ref(), n, &ctx.budgets).unwrap())
    }

    #[test]
    fn rectangle_regions_and_split() {
        let r = Rectangle::new(rat(1, 2), rat(3, 2), QLin::zero(), QLin::new(rat(0, 1), rat(1, 2)));
        assert_eq!(r.region(), Region::Straddling);
        let (ns, sp) = r.split();
        let (ns, sp) = (ns.unwrap(), sp.unwrap());
        assert_eq!(ns.region(), Region::NonSpacer);
        assert_eq!(sp.region(), Region::Spacer);
        assert_eq!(&ns.base_len() + &sp.base_len(), r.base_len());
        assert_eq!(ns.height_len(), r.height_len());
        // window above q is rejected for straddling rectangles
        let bad = Rectangle::new(rat(1, 2), rat(3, 2), QLin::zero(), QLin::one());
        assert!(bad.validate(&QValue::inv_sqrt2()).is_err());
    }

    #[test]
    fn partition_examples() {
        let c = ctx();
        let b = b_ref(&c);
        // delta = 0.9: the width/mass constraints are slack, m0 = 3 dominates
        let p = partial_partition(&c, 0.9, &b).unwrap();
        assert_eq!(p.m, 3);
        assert_eq!(p.members.len(), 12);
        // delta = 0.1 forces stage 4 (mass of stage 3 is ~0.848)
        let p = partial_partition(&c, 0.1, &b).unwrap();
        assert_eq!(p.m, 4);
        // delta = 0.01 forces stage 6
        let p = partial_partition(&c, 0.01, &b).unwrap();
        assert_eq!(p.m, 6);
        // mass grows with m
        let masses: Vec<f64> = [0.9, 0.1, 0.01]
            .iter()
            .map(|&d| partial_partition(&c, d, &b).unwrap().mass.to_f64().unwrap())
            .collect();
        assert!(masses.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn projection_overlap_trivial_cases() {
        let c = ctx();
        let st = stage(&c, 3);
        let (lo, hi) = st.interval(4);
        // base containing the level sees its full length at t = 0
        let full = projection_overlap(&c, st.clone(), 4, (&int(0), &int(2)), &QLin::zero()).unwrap();
        assert_eq!(full, rat(1, 6));
        // the exact level base too
        let own = projection_overlap(&c, st.clone(), 4, (&lo, &hi), &QLin::zero()).unwrap();
        assert_eq!(own, rat(1, 6));
        // a disjoint base sees nothing
        let none = projection_overlap(&c, st, 4, (&rat(7, 4), &int(2)), &QLin::zero()).unwrap();
        assert_eq!(none, int(0));
    }

    #[test]
    fn rect_correlation_at_time_zero() {
        let c = ctx();
        let st = stage(&c, 3);
        let (lo, hi) = st.interval(0);
        let covering = Rectangle::new(lo.clone(), hi.clone(), QLin::zero(), QLin::new(rat(1, 2), rat(0, 1)));
        let v = rect_correlation(&c, st.clone(), 0, &covering, &QLin::zero()).unwrap();
        assert_eq!(v, rat(1, 6));
        // window missing height 0 sees nothing
        let above = Rectangle::new(lo, hi, QLin::new(rat(1, 4), rat(0, 1)), QLin::new(rat(1, 2), rat(0, 1)));
        let v = rect_correlation(&c, st, 0, &above, &QLin::zero()).unwrap();
        assert_eq!(v, int(0));
    }

    #[test]
    fn straddling_split_is_exactly_additive() {
        let c = ctx();
        let st = stage(&c, 3);
        let r = Rectangle::new(rat(3, 4), rat(3, 2), QLin::new(rat(1, 10), rat(0, 1)), QLin::new(rat(0, 1), rat(1, 2)));
        let (r1, r2) = r.split();
        let (r1, r2) = (r1.unwrap(), r2.unwrap());
        for t in [QLin::zero(), QLin::new(int(3), int(1)), QLin::new(int(11), int(4))] {
            let ens = SegmentEnsemble::from_level(c.clone(), st.clone(), 5).flowed(&t).unwrap();
            let whole = rect_overlap(&ens, &r).unwrap();
            let parts = rect_overlap(&ens, &r1).unwrap() + rect_overlap(&ens, &r2).unwrap();
            assert_eq!(whole, parts);
        }
    }

    #[test]
    fn full_surface_conserves_everything() {
        let c = ctx();
        let st = stage(&c, 3);
        let full = SurfaceSet::full_surface(&int(3));
        for t in [QLin::zero(), QLin::new(int(7), int(2)), QLin::new(int(20), int(0))] {
            let ens = SegmentEnsemble::from_level(c.clone(), st.clone(), 3).flowed(&t).unwrap();
            assert_eq!(set_overlap(&ens, &full).unwrap(), rat(1, 6));
        }
    }

    #[test]
    fn conservation_across_a_rect_partition_of_the_surface() {
        // overlaps over a partition of the surface into rectangles sum to
        // λ(I) exactly at every t
        let c = ctx();
        let st = stage(&c, 3);
        let mut rects = Vec::new();
        for k in 0..4i64 {
            rects.push(Rectangle::new(
                rat(k, 4),
                rat(k + 1, 4),
                QLin::zero(),
                QLin::new(rat(1, 3), rat(0, 1)),
            ));
            rects.push(Rectangle::new(
                rat(k, 4),
                rat(k + 1, 4),
                QLin::new(rat(1, 3), rat(0, 1)),
                QLin::one(),
            ));
        }
        // spacer region up to a generous bound
        rects.push(Rectangle::new(int(1), int(3), QLin::zero(), QLin::q()));
        // drop the non-spacer rects that that spacer rect duplicates: the
        // non-spacer ones above x >= 1
        let rects: Vec<Rectangle> = rects
            .into_iter()
            .filter(|r| r.x_hi <= int(1) || r.x_lo >= int(1))
            .collect();
        let ens = SegmentEnsemble::from_level(c.clone(), st, 9)
            .flowed(&QLin::new(int(13), int(3)))
            .unwrap();
        let mut sum = BigRational::zero();
        for r in &rects {
            sum += rect_overlap(&ens, r).unwrap();
        }
        assert_eq!(sum, rat(1, 6));
    }

    #[test]
    fn criterion_trivial_cases() {
        let c = ctx();
        let b = b_ref(&c);
        let grid = [QLin::new(int(2), int(0)), QLin::new(int(4), int(0))];
        // epsilon = 1: threshold 0, passes immediately
        let r = Rectangle::new(rat(0, 1), rat(1, 2), QLin::new(rat(1, 5), rat(0, 1)), QLin::new(rat(7, 10), rat(0, 1)));
        let verdict = ulcigrai_check(&c, &r, 1.0, 0.9, &grid, &b).unwrap();
        assert!(verdict.t0.is_some());
        verdict.require_pass().unwrap();
        // monotone in epsilon: anything passing at eps also passes at larger eps
        let verdict_small = ulcigrai_check(&c, &r, 0.4, 0.9, &grid, &b).unwrap();
        if verdict_small.t0.is_some() {
            let verdict_big = ulcigrai_check(&c, &r, 0.7, 0.9, &grid, &b).unwrap();
            assert!(verdict_big.t0.is_some());
            assert!(passing_tail_start(&verdict_small.rows, 0.7).is_some());
        }
    }

    #[test]
    fn correlation_with_full_sets_is_flat_one() {
        let c = ctx();
        let b = b_ref(&c);
        let st = stage(&c, 3);
        let full = SurfaceSet::full_surface(&b);
        let grid = [QLin::zero(), QLin::new(int(5), int(0))];
        let curve = correlation_curve(&c, st, &full, &full, &grid, &b).unwrap();
        for p in &curve.points {
            assert!((p.ratio_norm - 1.0).abs() < 1e-9, "ratio {}", p.ratio_norm);
        }
    }

    #[test]
    fn disjoint_sets_at_time_zero() {
        let c = ctx();
        let b = b_ref(&c);
        let st = stage(&c, 2);
        let a = SurfaceSet::new(vec![Rectangle::new(rat(0, 1), rat(1, 4), QLin::zero(), QLin::new(rat(1, 2), rat(0, 1)))]);
        let bset = SurfaceSet::new(vec![Rectangle::new(rat(1, 2), rat(3, 4), QLin::zero(), QLin::new(rat(1, 2), rat(0, 1)))]);
        let curve = correlation_curve(&c, st, &a, &bset, &[QLin::zero()], &b).unwrap();
        assert!(curve.points[0].overlap.is_zero());
    }

    #[test]
    fn triple_reduces_to_pairwise_with_full_third_set() {
        let c = ctx();
        let b = b_ref(&c);
        let st = stage(&c, 3);
        let a1 = SurfaceSet::new(vec![Rectangle::new(rat(0, 1), rat(1, 2), QLin::zero(), QLin::new(rat(1, 2), rat(0, 1)))]);
        let a2 = SurfaceSet::new(vec![Rectangle::new(rat(1, 4), rat(5, 6), QLin::new(rat(1, 5), rat(0, 1)), QLin::new(rat(4, 5), rat(0, 1)))]);
        let full = SurfaceSet::full_surface(&int(3));
        let t1 = QLin::new(int(3), int(1));
        let t2 = QLin::new(int(2), int(0));
        let triple = triple_overlap(&c, st.clone(), &a1, &a2, &full, &t1, &t2).unwrap();
        // with A3 = everything, the triple overlap is mu(A1 ∩ phi_{-t1} A2),
        // which equals the pairwise correlation with B = A1
        let pair = set_correlation(&c, st, &a2, &a1, &t1).unwrap();
        assert_eq!(triple, pair);
    }

    #[test]
    fn triple_at_zero_times_on_nested_sets() {
        let c = ctx();
        let st = stage(&c, 2);
        let inner = SurfaceSet::new(vec![Rectangle::new(rat(1, 8), rat(1, 4), QLin::zero(), QLin::new(rat(1, 4), rat(0, 1)))]);
        let mid = SurfaceSet::new(vec![Rectangle::new(rat(0, 1), rat(1, 2), QLin::zero(), QLin::new(rat(1, 2), rat(0, 1)))]);
        let outer = SurfaceSet::new(vec![Rectangle::new(rat(0, 1), rat(1, 1), QLin::zero(), QLin::one())]);
        let v = triple_overlap(&c, st, &inner, &mid, &outer, &QLin::zero(), &QLin::zero()).unwrap();
        assert_eq!(v, inner.mu());
    }

    #[test]
    fn forward_overlap_matches_backward_monte_carlo() {
        let c = ctx();
        let st = stage(&c, 3);
        let b = b_ref(&c);
        let target = Rectangle::new(rat(1, 3), rat(1, 2), QLin::zero(), QLin::new(rat(2, 5), rat(0, 1)));
        let from = Rectangle::new(rat(1, 2), rat(5, 6), QLin::new(rat(1, 10), rat(0, 1)), QLin::new(rat(3, 5), rat(0, 1)));
        let t = QLin::new(int(6), int(2));
        // forward route: mu(phi_{-t}(from) ∩ target), computed by sweeping
        // target's window and flowing its base forward
        let exact = set_correlation(
            &c,
            st.clone(),
            &SurfaceSet::new(vec![from.clone()]),
            &SurfaceSet::new(vec![target.clone()]),
            &t,
        )
        .unwrap()
        .to_f64(&c.q);
        // backward route: sample `from`, flow each point by -t, count hits in
        // `target`; measure preservation makes the two routes equal
        let (mc, sigma) = mc_backward_overlap(&c, st, &target, &from, &t, 4000, 42).unwrap();
        assert!(
            (exact - mc).abs() <= 3.0 * sigma.max(1e-6),
            "exact {exact} vs mc {mc} (sigma {sigma})"
        );
        let _ = b;
    }
}
