//! Perceive stage: typed semantic interactions between two workspace snapshots.

mod apply;
mod diff;
mod types;

pub use apply::{apply, semantically_equal, ApplyError};
pub use diff::{perceive, perceive_prompt, PerceiveError, MOVE_THRESHOLD};
pub use types::*;
