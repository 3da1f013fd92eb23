//! The structured report: components anchored one-to-one to main frames, the context
//! rendering agents read, sentence segmentation and the sentence-level revision diff.

mod anchoring;
mod context;
mod diff;
mod report;
mod segment;

pub use anchoring::{check_anchoring, check_anchoring_context, check_anchoring_ids, check_layout, AnchoringViolation};
pub use context::*;
pub use diff::{diff_reports, word_overlap, words, ChangeKind, RevisionDiff, SentenceChange, HEADING_INDEX, MODIFIED_OVERLAP};
pub use report::*;
pub use segment::{normalize_whitespace, segment_sentences, ABBREVIATIONS};
