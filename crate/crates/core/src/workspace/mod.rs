//! Spatial workspace data model: frames, document cards, highlights, notes and
//! versioned snapshots, plus the geometric rules that decide which frame owns what.

pub mod builders;
mod layout;
mod model;
mod validate;

pub use layout::{
    anchor_of, children, main_frames, owner_at, resolve_membership, root_frame, subtree,
    Membership,
};
pub use model::*;
pub use validate::{validate, Violation, ViolationKind};
