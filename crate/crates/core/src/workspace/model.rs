use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

/// Schema version written into every snapshot file.
pub const SNAPSHOT_SCHEMA: u32 = 1;

/// Ids that cannot be used for entities because plan targets use them as keywords.
pub const RESERVED_IDS: [&str; 4] = ["summary", "conclusion", "structure", "__unassigned__"];

/// Opaque entity identifier. Serialized as a plain string.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Id(pub String);

impl Id {
    pub fn new(s: impl Into<String>) -> Self {
        Id(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Id {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Id {
    fn from(s: &str) -> Self {
        Id(s.to_owned())
    }
}

impl From<String> for Id {
    fn from(s: String) -> Self {
        Id(s)
    }
}

/// A point in abstract workspace units, serialized as `[x, y]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point(pub f64, pub f64);

impl Point {
    pub fn x(&self) -> f64 {
        self.0
    }

    pub fn y(&self) -> f64 {
        self.1
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.0 - other.0).hypot(self.1 - other.1)
    }

    pub fn translate(&self, dx: f64, dy: f64) -> Point {
        Point(self.0 + dx, self.1 + dy)
    }
}

/// Width and height, serialized as `[w, h]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Size(pub f64, pub f64);

impl Size {
    pub fn w(&self) -> f64 {
        self.0
    }

    pub fn h(&self) -> f64 {
        self.1
    }

    pub fn area(&self) -> f64 {
        self.0 * self.1
    }
}

/// Axis-aligned rectangle described by its center and size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub center: Point,
    pub size: Size,
}

impl Bounds {
    pub fn new(center: Point, size: Size) -> Self {
        Bounds { center, size }
    }

    pub fn min(&self) -> Point {
        Point(self.center.0 - self.size.0 / 2.0, self.center.1 - self.size.1 / 2.0)
    }

    pub fn max(&self) -> Point {
        Point(self.center.0 + self.size.0 / 2.0, self.center.1 + self.size.1 / 2.0)
    }

    /// Inclusive on all edges.
    pub fn contains_point(&self, p: Point) -> bool {
        let (lo, hi) = (self.min(), self.max());
        p.0 >= lo.0 && p.0 <= hi.0 && p.1 >= lo.1 && p.1 <= hi.1
    }

    pub fn contains(&self, other: &Bounds) -> bool {
        let (lo, hi) = (self.min(), self.max());
        let (olo, ohi) = (other.min(), other.max());
        olo.0 >= lo.0 && olo.1 >= lo.1 && ohi.0 <= hi.0 && ohi.1 <= hi.1
    }

    pub fn area(&self) -> f64 {
        self.size.area()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentCard {
    pub id: Id,
    pub title: String,
    pub body: String,
    pub position: Point,
    pub size: Size,
    #[serde(default)]
    pub highlights: Vec<Id>,
}

impl DocumentCard {
    pub fn bounds(&self) -> Bounds {
        Bounds::new(self.position, self.size)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    Emphasize,
    Reject,
}

impl Polarity {
    pub fn toggled(self) -> Polarity {
        match self {
            Polarity::Emphasize => Polarity::Reject,
            Polarity::Reject => Polarity::Emphasize,
        }
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Polarity::Emphasize => "emphasize",
            Polarity::Reject => "reject",
        })
    }
}

/// A highlighted span of a document body. Offsets count characters, not bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Highlight {
    pub id: Id,
    pub document: Id,
    pub span: (usize, usize),
    pub text: String,
    pub count: u32,
    pub polarity: Polarity,
}

impl Highlight {
    /// Builds a highlight whose text is extracted from `body` at the given char span.
    pub fn extract(
        id: impl Into<Id>,
        document: &DocumentCard,
        span: (usize, usize),
        count: u32,
        polarity: Polarity,
    ) -> Option<Highlight> {
        let text = char_slice(&document.body, span.0, span.1)?;
        Some(Highlight {
            id: id.into(),
            document: document.id.clone(),
            span,
            text,
            count,
            polarity,
        })
    }

    /// Builds a highlight on the first occurrence of `needle` in the document body.
    pub fn on_text(
        id: impl Into<Id>,
        document: &DocumentCard,
        needle: &str,
        count: u32,
        polarity: Polarity,
    ) -> Option<Highlight> {
        let byte_start = document.body.find(needle)?;
        let start = document.body[..byte_start].chars().count();
        let end = start + needle.chars().count();
        Highlight::extract(id, document, (start, end), count, polarity)
    }
}

/// Substring by character offsets; `None` when out of range or inverted.
pub fn char_slice(s: &str, start: usize, end: usize) -> Option<String> {
    if start > end {
        return None;
    }
    let len = s.chars().count();
    if end > len {
        return None;
    }
    Some(s.chars().skip(start).take(end - start).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub id: Id,
    pub name: String,
    pub position: Point,
    pub size: Size,
    #[serde(default)]
    pub parent: Option<Id>,
    pub created_seq: u64,
}

impl Frame {
    pub fn bounds(&self) -> Bounds {
        Bounds::new(self.position, self.size)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Note {
    pub id: Id,
    pub text: String,
    pub position: Point,
    pub size: Size,
}

impl Note {
    pub fn bounds(&self) -> Bounds {
        Bounds::new(self.position, self.size)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComponentKind {
    Summary,
    Body,
    Conclusion,
}

impl fmt::Display for ComponentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ComponentKind::Summary => "summary",
            ComponentKind::Body => "body",
            ComponentKind::Conclusion => "conclusion",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentSpec {
    pub name: String,
    pub kind: ComponentKind,
}

impl ComponentSpec {
    pub fn new(name: impl Into<String>, kind: ComponentKind) -> Self {
        ComponentSpec {
            name: name.into(),
            kind,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub model_name: String,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            model_name: "gpt-4o-mini".to_owned(),
            temperature: 0.2,
            max_tokens: 4096,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptSettings {
    pub task_description: String,
    pub components: Vec<ComponentSpec>,
    pub model_config: ModelConfig,
}

impl PromptSettings {
    /// Bottom-line-up-front layout: summary, one body paragraph per main frame, conclusion.
    pub fn bluf(task_description: impl Into<String>) -> Self {
        PromptSettings {
            task_description: task_description.into(),
            components: vec![
                ComponentSpec::new("Bottom Line", ComponentKind::Summary),
                ComponentSpec::new("Findings", ComponentKind::Body),
                ComponentSpec::new("Conclusion", ComponentKind::Conclusion),
            ],
            model_config: ModelConfig::default(),
        }
    }
}

impl Default for PromptSettings {
    fn default() -> Self {
        PromptSettings::bluf("Write an analytic report about the evidence in the workspace.")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkspaceSnapshot {
    pub snapshot_schema: u32,
    pub version: u64,
    pub timestamp: DateTime<Utc>,
    #[serde(default)]
    pub frames: Vec<Frame>,
    #[serde(default)]
    pub documents: Vec<DocumentCard>,
    #[serde(default)]
    pub highlights: Vec<Highlight>,
    #[serde(default)]
    pub notes: Vec<Note>,
    pub prompt_settings: PromptSettings,
}

impl WorkspaceSnapshot {
    pub fn new(version: u64, timestamp: DateTime<Utc>, prompt_settings: PromptSettings) -> Self {
        WorkspaceSnapshot {
            snapshot_schema: SNAPSHOT_SCHEMA,
            version,
            timestamp,
            frames: Vec::new(),
            documents: Vec::new(),
            highlights: Vec::new(),
            notes: Vec::new(),
            prompt_settings,
        }
    }

    pub fn frame(&self, id: &Id) -> Option<&Frame> {
        self.frames.iter().find(|f| &f.id == id)
    }

    pub fn document(&self, id: &Id) -> Option<&DocumentCard> {
        self.documents.iter().find(|d| &d.id == id)
    }

    pub fn highlight(&self, id: &Id) -> Option<&Highlight> {
        self.highlights.iter().find(|h| &h.id == id)
    }

    pub fn note(&self, id: &Id) -> Option<&Note> {
        self.notes.iter().find(|n| &n.id == id)
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("snapshot serialization is infallible")
    }

    /// Copy with entity lists and highlight references sorted by id, version and timestamp zeroed.
    /// Two snapshots with equal canonical forms describe the same workspace state.
    pub fn canonical(&self) -> WorkspaceSnapshot {
        let mut c = self.clone();
        c.version = 0;
        c.timestamp = DateTime::<Utc>::UNIX_EPOCH;
        c.frames.sort_by(|a, b| a.id.cmp(&b.id));
        c.documents.sort_by(|a, b| a.id.cmp(&b.id));
        for d in &mut c.documents {
            d.highlights.sort();
        }
        c.highlights.sort_by(|a, b| a.id.cmp(&b.id));
        c.notes.sort_by(|a, b| a.id.cmp(&b.id));
        c
    }
}
