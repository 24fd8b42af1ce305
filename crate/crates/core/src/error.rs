//! Error type shared by every engine in the crate.

use thiserror::Error;

/// Crate-wide error enum.
///
/// Budget and depth failures are resource guards, not math errors: they say
/// "the construction would need more refinement than you allowed", which a
/// caller can fix by raising the relevant [`crate::Budgets`] field.
#[derive(Debug, Clone, Error)]
pub enum CoreError {
    #[error("arithmetic overflow in {0}")]
    Overflow(&'static str),

    #[error("stage {requested} needs {needed} levels, over the budget of {budget}")]
    LevelBudget {
        requested: u32,
        needed: u128,
        budget: u64,
    },

    #[error("refinement depth exhausted at stage {max_stage}; the point is still in a top level")]
    DepthExhausted { max_stage: u32 },

    #[error("segment budget exceeded: ensemble would grow past {budget} segments")]
    SegmentBudget { budget: usize },

    #[error("no convergence within depth budget {depth}")]
    NoConvergence { depth: u32 },

    #[error("block size {size} never appears within stage {depth}")]
    SizeNotFound { size: u64, depth: u32 },

    #[error("stage {stage} has an empty block catalog")]
    EmptyCatalog { stage: u32 },

    #[error("no heights recorded for the requested base")]
    NoHeights,

    #[error("comparison ambiguous at interval width {width}; q needs more precision")]
    AmbiguousComparison { width: String },

    #[error("q = {value} looks rational: partial quotient {quotient} at term {term}")]
    SuspectRational {
        value: String,
        quotient: String,
        term: usize,
    },

    #[error("invalid q: {0}")]
    InvalidQ(String),

    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    #[error("criterion not met on grid: member {member} at t={t} has margin {margin:.6} < {threshold:.6}")]
    CriterionNotMet {
        member: String,
        t: String,
        margin: f64,
        threshold: f64,
    },
}

pub type Result<T> = std::result::Result<T, CoreError>;
