//! Exact-arithmetic engines for staircase transformations, the suspension
//! flow over their two-value roof, and the quantitative mixing diagnostics
//! built on top of them.
//!
//! Layout:
//! - [`num`]: rational coordinates, quadratic surds, and the module `Q + Q*q`
//!   that all flow times and heights live in;
//! - [`rank_one`]: cutting-and-stacking towers with lazy exact refinement;
//! - [`staircase`]: staircase cutting/spacer models and spacer-block
//!   combinatorics;
//! - [`flow`]: the event-driven segment-ensemble flow under the roof
//!   `1 / q`, rotation return maps, and the L-shaped polygon charts;
//! - [`equidist`]: discrepancy, Weyl sums, and height-set equidistribution
//!   ratios;
//! - [`mixing`]: partial partitions, projection overlaps, rectangle
//!   correlations, the partial-partition mixing criterion, and correlation
//!   decay curves.

pub mod equidist;
pub mod error;
pub mod flow;
pub mod mixing;
pub mod num;
pub mod rank_one;
pub mod staircase;

pub use error::{CoreError, Result};
pub use num::{Coord, QLin, QValue};
pub use rank_one::{
    apply_t, build_stage, height, normalize_a, partial_total_length, refine,
    restricted_growth_profile, Level, LevelKind, RankOneSpec, Stage, TowerPoint, UniformSpec,
};
pub use staircase::{BlockCatalog, BlockFormula, Cutting, Staircase};

/// Resource guards for the lazy constructions.
///
/// These are deliberate budgets, not implementation limits: tower level
/// counts and ensemble segment counts grow super-exponentially with depth,
/// and hitting a budget produces a typed error instead of an allocation
/// stall.
#[derive(Clone, Debug)]
pub struct Budgets {
    /// Maximum levels a single stage may hold.
    pub max_levels: u64,
    /// Maximum refinement stage for lazy `T` evaluation and flows.
    pub max_stage: u32,
    /// Maximum segments per ensemble.
    pub max_segments: usize,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets {
            max_levels: 10_000_000,
            max_stage: 16,
            max_segments: 1_000_000,
        }
    }
}
