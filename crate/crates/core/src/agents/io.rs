//! JSON payloads exchanged with backends. The user message of every request is one of
//! the `*Input` types; the reply must parse as the matching `*Output`.

use serde::{Deserialize, Serialize};

use super::types::IntentInference;
use crate::narrative::{GenerationContext, LayoutSlot, Report, ReportComponent};
use crate::perception::{PromptAdjustment, SemanticInteraction};
use crate::workspace::Frame;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationInput {
    pub context: GenerationContext,
    /// Components the report must contain, in order.
    pub layout: Vec<LayoutSlot>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemInferenceInput {
    pub adjustment: PromptAdjustment,
    pub report: Report,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionInferenceInput {
    pub interactions: Vec<SemanticInteraction>,
    pub context: GenerationContext,
    pub report: Report,
    /// Frames removed in the same delta, for resolving where their content lived.
    #[serde(default)]
    pub removed_frames: Vec<Frame>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementInput {
    pub report: Report,
    pub inferences: Vec<IntentInference>,
    pub context: GenerationContext,
    pub layout: Vec<LayoutSlot>,
}

/// Reply shape for generation and refinement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentsOutput {
    pub components: Vec<ReportComponent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InferencesOutput {
    pub inferences: Vec<IntentInference>,
}
