use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::workspace::{ComponentKind, ComponentSpec, Id};

pub const REPORT_SCHEMA: u32 = 1;

/// Anchor of the single body paragraph used when the workspace has no main frames.
pub const UNASSIGNED_ANCHOR: &str = "__unassigned__";
pub const UNASSIGNED_HEADING: &str = "Unassigned";

/// Identity of a report component across versions: body paragraphs by anchor,
/// summary and conclusion by kind. Serialized as `"summary"`, `"conclusion"` or the anchor id.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ComponentKey {
    Summary,
    Conclusion,
    Body(Id),
}

impl ComponentKey {
    pub fn unassigned() -> Self {
        ComponentKey::Body(Id::from(UNASSIGNED_ANCHOR))
    }

    pub fn anchor(&self) -> Option<&Id> {
        match self {
            ComponentKey::Body(id) => Some(id),
            _ => None,
        }
    }

    pub fn is_body(&self) -> bool {
        matches!(self, ComponentKey::Body(_))
    }

    pub fn as_str(&self) -> &str {
        match self {
            ComponentKey::Summary => "summary",
            ComponentKey::Conclusion => "conclusion",
            ComponentKey::Body(id) => id.as_str(),
        }
    }
}

impl fmt::Display for ComponentKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ComponentKey {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "summary" => ComponentKey::Summary,
            "conclusion" => ComponentKey::Conclusion,
            other => ComponentKey::Body(Id::from(other)),
        })
    }
}

impl Serialize for ComponentKey {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for ComponentKey {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Ok(s.parse().unwrap())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportComponent {
    pub kind: ComponentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor: Option<Id>,
    pub heading: String,
    pub sentences: Vec<String>,
}

impl ReportComponent {
    pub fn new(kind: ComponentKind, anchor: Option<Id>, heading: impl Into<String>, sentences: Vec<String>) -> Self {
        ReportComponent {
            kind,
            anchor,
            heading: heading.into(),
            sentences,
        }
    }

    /// Summary and conclusion key by kind; bodies by anchor (an anchorless body keys
    /// as an empty anchor so it still shows up in anchoring checks).
    pub fn key(&self) -> ComponentKey {
        match self.kind {
            ComponentKind::Summary => ComponentKey::Summary,
            ComponentKind::Conclusion => ComponentKey::Conclusion,
            ComponentKind::Body => ComponentKey::Body(self.anchor.clone().unwrap_or_else(|| Id::from(""))),
        }
    }

    pub fn text(&self) -> String {
        self.sentences.join(" ")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    pub report_schema: u32,
    pub version: u64,
    pub components: Vec<ReportComponent>,
}

impl Report {
    pub fn new(version: u64, components: Vec<ReportComponent>) -> Self {
        Report {
            report_schema: REPORT_SCHEMA,
            version,
            components,
        }
    }

    pub fn keys(&self) -> Vec<ComponentKey> {
        self.components.iter().map(ReportComponent::key).collect()
    }

    pub fn component(&self, key: &ComponentKey) -> Option<&ReportComponent> {
        self.components.iter().find(|c| &c.key() == key)
    }

    pub fn position(&self, key: &ComponentKey) -> Option<usize> {
        self.components.iter().position(|c| &c.key() == key)
    }

    pub fn body_anchors(&self) -> Vec<&Id> {
        self.components.iter().filter_map(|c| c.anchor.as_ref()).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization is infallible")
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        for c in &self.components {
            out.push_str("## ");
            out.push_str(&c.heading);
            out.push_str("\n\n");
            out.push_str(&c.text());
            out.push_str("\n\n");
        }
        out
    }
}

/// One slot of the expected report layout.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayoutSlot {
    pub key: ComponentKey,
    pub kind: ComponentKind,
    pub heading: String,
}

/// Expands the prompt components into concrete slots: the body slot becomes one paragraph
/// per main frame (given as `(id, name)` in order), or a single Unassigned paragraph when
/// there are no main frames but there is unframed content.
pub fn expected_layout(
    components: &[ComponentSpec],
    main_frames: &[(Id, String)],
    has_unassigned_content: bool,
) -> Vec<LayoutSlot> {
    let mut out = Vec::new();
    for spec in components {
        match spec.kind {
            ComponentKind::Summary => out.push(LayoutSlot {
                key: ComponentKey::Summary,
                kind: spec.kind,
                heading: spec.name.clone(),
            }),
            ComponentKind::Conclusion => out.push(LayoutSlot {
                key: ComponentKey::Conclusion,
                kind: spec.kind,
                heading: spec.name.clone(),
            }),
            ComponentKind::Body => {
                if main_frames.is_empty() {
                    if has_unassigned_content {
                        out.push(LayoutSlot {
                            key: ComponentKey::unassigned(),
                            kind: spec.kind,
                            heading: UNASSIGNED_HEADING.to_owned(),
                        });
                    }
                } else {
                    for (id, name) in main_frames {
                        out.push(LayoutSlot {
                            key: ComponentKey::Body(id.clone()),
                            kind: spec.kind,
                            heading: name.clone(),
                        });
                    }
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_string_form() {
        for s in ["summary", "conclusion", "F1", UNASSIGNED_ANCHOR] {
            let k: ComponentKey = s.parse().unwrap();
            assert_eq!(k.as_str(), s);
            assert_eq!(serde_json::to_string(&k).unwrap(), format!("\"{s}\""));
        }
        assert!("F1".parse::<ComponentKey>().unwrap().is_body());
    }

    #[test]
    fn layout_expansion() {
        let specs = crate::workspace::PromptSettings::default().components;
        let mains = vec![(Id::from("A"), "Alpha".to_owned()), (Id::from("B"), "Beta".to_owned())];
        let keys: Vec<_> = expected_layout(&specs, &mains, true)
            .into_iter()
            .map(|s| s.key.to_string())
            .collect();
        assert_eq!(keys, ["summary", "A", "B", "conclusion"]);
        let keys: Vec<_> = expected_layout(&specs, &[], true)
            .into_iter()
            .map(|s| s.key.to_string())
            .collect();
        assert_eq!(keys, ["summary", UNASSIGNED_ANCHOR, "conclusion"]);
        assert_eq!(expected_layout(&specs, &[], false).len(), 2);
    }
}
