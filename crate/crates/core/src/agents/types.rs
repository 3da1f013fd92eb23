use std::fmt;
use std::str::FromStr;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::narrative::{ComponentKey, Report, RevisionDiff};
use crate::workspace::Id;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanAction {
    Insert,
    Delete,
    Modify,
    Emphasize,
    Deemphasize,
    AddParagraph,
    RemoveParagraph,
    RenameHeading,
    RelocateSection,
}

impl PlanAction {
    pub const ALL: [PlanAction; 9] = [
        PlanAction::Insert,
        PlanAction::Delete,
        PlanAction::Modify,
        PlanAction::Emphasize,
        PlanAction::Deemphasize,
        PlanAction::AddParagraph,
        PlanAction::RemoveParagraph,
        PlanAction::RenameHeading,
        PlanAction::RelocateSection,
    ];

    /// Actions allowed to change the set or order of report components.
    pub fn is_structural(self) -> bool {
        matches!(
            self,
            PlanAction::AddParagraph | PlanAction::RemoveParagraph | PlanAction::RelocateSection
        )
    }

    /// Application order within one refinement: structure first, then content,
    /// removals before additions.
    pub fn rank(self) -> u8 {
        match self {
            PlanAction::RemoveParagraph => 0,
            PlanAction::AddParagraph => 1,
            PlanAction::RelocateSection => 2,
            PlanAction::RenameHeading => 3,
            PlanAction::Delete => 4,
            PlanAction::Deemphasize => 5,
            PlanAction::Modify => 6,
            PlanAction::Emphasize => 7,
            PlanAction::Insert => 8,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PlanAction::Insert => "insert",
            PlanAction::Delete => "delete",
            PlanAction::Modify => "modify",
            PlanAction::Emphasize => "emphasize",
            PlanAction::Deemphasize => "deemphasize",
            PlanAction::AddParagraph => "add_paragraph",
            PlanAction::RemoveParagraph => "remove_paragraph",
            PlanAction::RenameHeading => "rename_heading",
            PlanAction::RelocateSection => "relocate_section",
        }
    }
}

impl fmt::Display for PlanAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// What a plan step acts on: one component, or the whole report layout.
/// Serialized as `"structure"` or a component key string.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Target {
    Structure,
    Component(ComponentKey),
}

impl Target {
    pub fn body(id: &Id) -> Self {
        Target::Component(ComponentKey::Body(id.clone()))
    }

    pub fn as_str(&self) -> &str {
        match self {
            Target::Structure => "structure",
            Target::Component(k) => k.as_str(),
        }
    }

    pub fn component(&self) -> Option<&ComponentKey> {
        match self {
            Target::Component(k) => Some(k),
            Target::Structure => None,
        }
    }

    /// Whether a step on this target may touch component `key`.
    pub fn covers(&self, key: &ComponentKey) -> bool {
        match self {
            Target::Structure => true,
            Target::Component(k) => k == key,
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Target {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "structure" => Target::Structure,
            other => Target::Component(other.parse()?),
        })
    }
}

impl Serialize for Target {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Target {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        if s.is_empty() {
            return Err(de::Error::custom("empty plan target"));
        }
        Ok(s.parse().unwrap())
    }
}

/// One edit the refining agent should make.
///
/// `focus` is the text the step is about (the sentence to add, the phrase to stress or
/// drop, the new heading). `previous` is the text a `modify` replaces. A `modify` with
/// neither means: rewrite the component from the current workspace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanStep {
    pub target: Target,
    pub action: PlanAction,
    pub instruction: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub focus: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub previous: Option<String>,
    /// Workspace item the step was derived from.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subject: Option<Id>,
}

impl PlanStep {
    pub fn new(target: Target, action: PlanAction, instruction: impl Into<String>) -> Self {
        PlanStep {
            target,
            action,
            instruction: instruction.into(),
            focus: None,
            previous: None,
            subject: None,
        }
    }

    pub fn focus(mut self, focus: impl Into<String>) -> Self {
        self.focus = Some(focus.into());
        self
    }

    pub fn previous(mut self, previous: impl Into<String>) -> Self {
        self.previous = Some(previous.into());
        self
    }

    pub fn subject(mut self, subject: &Id) -> Self {
        self.subject = Some(subject.clone());
        self
    }
}

/// Where an inference came from: an interaction order in the delta, or the prompt settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Source {
    Interaction(u32),
    Prompt,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Interaction(o) => write!(f, "{o}"),
            Source::Prompt => f.write_str("prompt"),
        }
    }
}

impl Serialize for Source {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Source::Interaction(o) => s.serialize_u32(*o),
            Source::Prompt => s.serialize_str("prompt"),
        }
    }
}

impl<'de> Deserialize<'de> for Source {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Source;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an interaction order or \"prompt\"")
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Source, E> {
                u32::try_from(v).map(Source::Interaction).map_err(E::custom)
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Source, E> {
                u32::try_from(v).map(Source::Interaction).map_err(E::custom)
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Source, E> {
                match v {
                    "prompt" => Ok(Source::Prompt),
                    other => other.parse().map(Source::Interaction).map_err(E::custom),
                }
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntentInference {
    pub source: Vec<Source>,
    pub why: String,
    pub plan: Vec<PlanStep>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RepairKind {
    /// An untargeted component was edited and has been restored.
    RestoredEdit,
    /// An untargeted component was dropped and has been put back.
    RestoredRemoval,
    /// A component was added without an `add_paragraph` step and has been dropped.
    DroppedAddition,
    /// Components were reordered without a structural step; the old order is restored.
    RestoredOrder,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScopeRepair {
    pub key: ComponentKey,
    pub repair: RepairKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementResult {
    pub new_report: Report,
    pub diff: RevisionDiff,
    pub reasoning: Vec<IntentInference>,
    /// Sources behind each entry of `diff.changes`, index-aligned.
    pub provenance: Vec<Vec<Source>>,
    #[serde(default)]
    pub scope_repairs: Vec<ScopeRepair>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn source_serde() {
        let v: Vec<Source> = serde_json::from_str(r#"[0, 3, "prompt"]"#).unwrap();
        assert_eq!(v, [Source::Interaction(0), Source::Interaction(3), Source::Prompt]);
        assert_eq!(serde_json::to_string(&v).unwrap(), r#"[0,3,"prompt"]"#);
        assert!(serde_json::from_str::<Source>(r#""system""#).is_err());
        assert!(serde_json::from_str::<Source>("-1").is_err());
    }

    #[test]
    fn plan_step_serde() {
        let s = PlanStep::new(Target::body(&Id::from("F")), PlanAction::AddParagraph, "Start a paragraph");
        let j = serde_json::to_string(&s).unwrap();
        assert_eq!(j, r#"{"target":"F","action":"add_paragraph","instruction":"Start a paragraph"}"#);
        assert_eq!(serde_json::from_str::<PlanStep>(&j).unwrap(), s);
        let bad = r#"{"target":"F","action":"rewrite","instruction":"x"}"#;
        assert!(serde_json::from_str::<PlanStep>(bad).is_err());
        let t: Target = serde_json::from_str(r#""structure""#).unwrap();
        assert_eq!(t, Target::Structure);
    }

    #[test]
    fn ranks_are_distinct() {
        let mut ranks: Vec<_> = PlanAction::ALL.iter().map(|a| a.rank()).collect();
        ranks.sort();
        ranks.dedup();
        assert_eq!(ranks.len(), 9);
    }
}
