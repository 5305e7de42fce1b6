//! Decision-log analytics for human-AI teams.
//!
//! `coact` measures whether a human-AI team actually beats its strongest
//! member, and if so, where the improvement comes from. It decomposes the
//! ceiling a pairing could reach (complementarity potential) and the gain it
//! realizes (complementarity effect) into inherent and collaborative parts,
//! and ships the supporting toolkit: decision-log ingestion, significance
//! tests, power analysis, synthetic experiment generation, and report
//! rendering. A CLI fronts the whole pipeline.

pub mod cli;
pub mod domain;
pub mod ingest;
pub mod metrics;
pub mod report;
pub mod simulate;
pub mod stats;

// Compile and run every code block in the guide as a doctest, one module per
// chapter so a failure names the chapter. `cli.md` only holds console
// transcripts, so it has nothing to compile and is left out.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/decision-setting.md")]
    pub mod decision_setting {}
    #[doc = include_str!("../../../book/src/potential-and-effect.md")]
    pub mod potential_and_effect {}
    #[doc = include_str!("../../../book/src/statistics.md")]
    pub mod statistics {}
    #[doc = include_str!("../../../book/src/ingestion.md")]
    pub mod ingestion {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    pub mod simulation {}
    #[doc = include_str!("../../../book/src/reporting.md")]
    pub mod reporting {}
}
