//! Structured signaling games over a color-chip universe: pragmatic-reasoning
//! recursions, efficiency metrics, optimality frontiers, and policy-gradient
//! agents that learn meaning functions by playing the game.
//!
//! Data-parallel sections use a worker pool when the `parallel` feature is on
//! (the default) and plain loops otherwise; results are identical either way.

pub mod color;
pub mod error;
pub mod exec;
pub mod frontier;
pub mod game;
pub mod metrics;
pub mod recursion;
pub mod rl;
pub mod synth;
pub mod wcs;

pub use error::{Error, Result};
pub use game::{
    ConditionalDistribution, ConvergenceStatus, Depth, DistKind, Endpoint, MeaningId,
    RecursionConfig, RecursionOutcome, Start, StructuredGame, Variant,
};
