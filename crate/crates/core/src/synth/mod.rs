//! Rule-based synthesis of labelled single-lead traces from a segment pool.

mod compose;
mod config;
mod rules;

use rand::Rng;

pub use compose::{
    compose_record, Composer, CycleLog, CycleOutput, ExtraKind, ExtraLog, FlatEdge, Provenance,
    SegmentLog, SyntheticRecord, Synthesizer, Wander,
};
pub use config::{GenerationConfig, Range};
pub use rules::{sample_cycle_rules, sample_global_rules, CycleRules, GlobalRules};

/// Uniform draw on `[lo, hi)`; a degenerate range returns `lo`.
pub(crate) fn uniform<R: Rng + ?Sized>(rng: &mut R, (lo, hi): Range) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

#[cfg(test)]
mod tests;
