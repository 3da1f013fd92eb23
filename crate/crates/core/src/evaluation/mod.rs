//! Offline evaluation: curated workspace pairs, targeted-refinement and semantic-fidelity
//! metrics, and a harness that scores refinement against full regeneration.

mod case;
mod harness;
mod metrics;
pub mod suite;

pub use case::{load_cases, CaseError, EvaluationCase, CASE_SCHEMA};
pub use harness::{run_case, run_harness, CaseOutcome, HarnessReport, Mode, RESULTS_SCHEMA};
pub use metrics::{
    f1, marker_matches, ratio, semantic_fidelity_counts, targeted_refinement_counts, MetricCounts, MetricResult, Prf,
};
pub use suite::{build_suite, write_suite};

#[cfg(feature = "testkit")]
pub mod oracles;
