use std::fmt;

use serde::{Deserialize, Serialize};

use crate::workspace::{ComponentSpec, Frame, Highlight, Id, ModelConfig, Note, Point, Polarity, Size};

pub const DELTA_SCHEMA: u32 = 1;

/// The closed taxonomy of perceived semantic interactions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum InteractionKind {
    FrameAdded,
    FrameRemoved,
    FrameRenamed,
    FrameMoved,
    FrameReparented,
    DocumentReassigned,
    DocumentMoved,
    NoteAdded,
    NoteRemoved,
    NoteEdited,
    NoteReassigned,
    HighlightAdded,
    HighlightRemoved,
    HighlightCountEdited,
    HighlightPolarityToggled,
}

/// Coarse grouping used for delta ordering and conflict precedence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KindClass {
    Remove,
    Reassign,
    Edit,
    Add,
}

impl InteractionKind {
    pub const ALL: [InteractionKind; 15] = [
        InteractionKind::FrameAdded,
        InteractionKind::FrameRemoved,
        InteractionKind::FrameRenamed,
        InteractionKind::FrameMoved,
        InteractionKind::FrameReparented,
        InteractionKind::DocumentReassigned,
        InteractionKind::DocumentMoved,
        InteractionKind::NoteAdded,
        InteractionKind::NoteRemoved,
        InteractionKind::NoteEdited,
        InteractionKind::NoteReassigned,
        InteractionKind::HighlightAdded,
        InteractionKind::HighlightRemoved,
        InteractionKind::HighlightCountEdited,
        InteractionKind::HighlightPolarityToggled,
    ];

    pub fn class(self) -> KindClass {
        use InteractionKind::*;
        match self {
            FrameRemoved | NoteRemoved | HighlightRemoved => KindClass::Remove,
            FrameReparented | DocumentReassigned | NoteReassigned => KindClass::Reassign,
            FrameRenamed | FrameMoved | DocumentMoved | NoteEdited | HighlightCountEdited
            | HighlightPolarityToggled => KindClass::Edit,
            FrameAdded | NoteAdded | HighlightAdded => KindClass::Add,
        }
    }

    /// Which payload sides the kind carries: `(before, after)`.
    pub fn payload_sides(self) -> (bool, bool) {
        match self.class() {
            KindClass::Add => (false, true),
            KindClass::Remove => (true, false),
            _ => (true, true),
        }
    }

    pub fn as_str(self) -> &'static str {
        use InteractionKind::*;
        match self {
            FrameAdded => "FRAME_ADDED",
            FrameRemoved => "FRAME_REMOVED",
            FrameRenamed => "FRAME_RENAMED",
            FrameMoved => "FRAME_MOVED",
            FrameReparented => "FRAME_REPARENTED",
            DocumentReassigned => "DOCUMENT_REASSIGNED",
            DocumentMoved => "DOCUMENT_MOVED",
            NoteAdded => "NOTE_ADDED",
            NoteRemoved => "NOTE_REMOVED",
            NoteEdited => "NOTE_EDITED",
            NoteReassigned => "NOTE_REASSIGNED",
            HighlightAdded => "HIGHLIGHT_ADDED",
            HighlightRemoved => "HIGHLIGHT_REMOVED",
            HighlightCountEdited => "HIGHLIGHT_COUNT_EDITED",
            HighlightPolarityToggled => "HIGHLIGHT_POLARITY_TOGGLED",
        }
    }
}

impl fmt::Display for InteractionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Old or new value carried by an interaction. `owner` fields record the owning frame
/// of the item (or of the highlighted document) in the snapshot the payload came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Payload {
    Frame {
        frame: Frame,
    },
    FrameName {
        name: String,
    },
    FrameGeometry {
        position: Point,
        size: Size,
    },
    FrameParent {
        parent: Option<Id>,
    },
    Placement {
        position: Point,
        size: Size,
        owner: Option<Id>,
    },
    Note {
        note: Note,
        owner: Option<Id>,
    },
    Highlight {
        highlight: Highlight,
        owner: Option<Id>,
    },
    HighlightCount {
        count: u32,
    },
    HighlightPolarity {
        polarity: Polarity,
    },
}

impl Payload {
    pub fn owner(&self) -> Option<&Id> {
        match self {
            Payload::Placement { owner, .. }
            | Payload::Note { owner, .. }
            | Payload::Highlight { owner, .. } => owner.as_ref(),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemanticInteraction {
    pub order: u32,
    pub kind: InteractionKind,
    pub subject: Id,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub before: Option<Payload>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub after: Option<Payload>,
}

impl SemanticInteraction {
    /// Whether the before/after sides present match what the kind requires.
    pub fn has_complete_payload(&self) -> bool {
        let (b, a) = self.kind.payload_sides();
        self.before.is_some() == b && self.after.is_some() == a
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Change<T> {
    pub old: T,
    pub new: T,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PromptAdjustment {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task_description_changed: Option<Change<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub components_changed: Option<Change<Vec<ComponentSpec>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_config_changed: Option<Change<ModelConfig>>,
}

impl PromptAdjustment {
    pub fn is_empty(&self) -> bool {
        self.task_description_changed.is_none()
            && self.components_changed.is_none()
            && self.model_config_changed.is_none()
    }

    /// True when the change affects report content. Model-config changes only
    /// reconfigure the backend.
    pub fn affects_report(&self) -> bool {
        self.task_description_changed.is_some() || self.components_changed.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionDelta {
    pub delta_schema: u32,
    pub from_version: u64,
    pub to_version: u64,
    pub interactions: Vec<SemanticInteraction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt_adjustment: Option<PromptAdjustment>,
}

impl InteractionDelta {
    pub fn empty(from_version: u64, to_version: u64) -> Self {
        InteractionDelta {
            delta_schema: DELTA_SCHEMA,
            from_version,
            to_version,
            interactions: Vec::new(),
            prompt_adjustment: None,
        }
    }

    /// No interactions and no report-affecting prompt change.
    pub fn is_vacuous(&self) -> bool {
        self.interactions.is_empty()
            && !self
                .prompt_adjustment
                .as_ref()
                .is_some_and(PromptAdjustment::affects_report)
    }

    pub fn interaction(&self, order: u32) -> Option<&SemanticInteraction> {
        self.interactions.iter().find(|i| i.order == order)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("delta serialization is infallible")
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }
}
