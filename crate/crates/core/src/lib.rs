//! Turn spatial sensemaking interactions into targeted revisions of a structured report.
//!
//! The pipeline has four stages. A [`workspace`] snapshot is edited by the analyst;
//! [`perception`] diffs two snapshots into typed semantic interactions; the [`agents`]
//! infer intent from those interactions and refine only the report paragraphs they
//! concern; [`narrative`] holds the report model and the sentence-level diff that shows
//! what changed. [`evaluation`] scores refinements for targeting and fidelity.

pub mod agents;
pub mod evaluation;
pub mod narrative;
pub mod perception;
pub mod workspace;

#[cfg(feature = "testkit")]
pub mod testkit;
