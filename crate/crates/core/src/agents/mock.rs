//! Deterministic offline backend.
//!
//! Generation writes templated sentences (one per document, one per emphasized highlight
//! mentioning it `min(count, 2)` times, one per note) behind a lead sentence that carries a
//! digest of the whole context, so regenerating after any content change rewrites every
//! component. Inference applies the interaction-to-plan rule table mechanically.
//! Refinement applies plan steps literally:
//!
//! * `insert` appends `focus` as a sentence
//! * `delete` and `deemphasize` drop sentences containing `focus`
//! * `modify` replaces `previous` by `focus`; with only `focus` it appends; with neither it
//!   rewrites the component from the context
//! * `emphasize` appends "<focus> is a key point."
//! * `add_paragraph`, `remove_paragraph` and `rename_heading` do what they say; any
//!   structural step re-sorts components to the layout.

use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

use super::anchors::{AnchorIndex, UNASSIGNED_LABEL};
use super::backend::{estimate_tokens, BackendError, LlmBackend, LlmRequest, LlmResponse, Role, SchemaId, Usage};
use super::io::*;
use super::types::{IntentInference, PlanAction, PlanStep, Source, Target};
use crate::narrative::{
    normalize_whitespace, ComponentKey, DocumentContext, FrameContext, GenerationContext, LayoutSlot, NoteContext,
    ReportComponent, UNASSIGNED_HEADING,
};
use crate::perception::{InteractionKind, Payload, SemanticInteraction};
use crate::workspace::{ComponentKind, ComponentSpec, Id, Polarity};

#[derive(Debug, Clone, Copy, Default)]
pub struct MockBackend;

impl LlmBackend for MockBackend {
    fn complete(&self, request: &LlmRequest) -> Result<LlmResponse, BackendError> {
        let payload = request
            .messages
            .iter()
            .find(|m| m.role == Role::User)
            .ok_or_else(|| BackendError::BadRequest("no user message".into()))?;
        let raw = match request.schema {
            SchemaId::Generation => {
                let input: GenerationInput = parse(&payload.content)?;
                to_json(&ComponentsOutput {
                    components: generate(&input.context, &input.layout),
                })
            }
            SchemaId::SystemInference => {
                let input: SystemInferenceInput = parse(&payload.content)?;
                to_json(&infer_system(&input))
            }
            SchemaId::InteractionInference => {
                let input: InteractionInferenceInput = parse(&payload.content)?;
                to_json(&InferencesOutput {
                    inferences: vec![infer_batch(&input)],
                })
            }
            SchemaId::Refinement => {
                let input: RefinementInput = parse(&payload.content)?;
                to_json(&ComponentsOutput {
                    components: refine(&input),
                })
            }
        };
        let prompt: u64 = request.messages.iter().map(|m| estimate_tokens(&m.content)).sum();
        Ok(LlmResponse {
            usage: Usage {
                prompt_tokens: prompt,
                completion_tokens: estimate_tokens(&raw),
            },
            raw,
        })
    }

    fn name(&self) -> &str {
        "mock"
    }
}

fn parse<T: DeserializeOwned>(s: &str) -> Result<T, BackendError> {
    serde_json::from_str(s).map_err(|e| BackendError::BadRequest(e.to_string()))
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("mock output serializes")
}

// ---- sentence templates -------------------------------------------------------------

/// First 8 hex digits of the SHA-256 of the context JSON.
pub fn context_digest(context: &GenerationContext) -> String {
    let hash = Sha256::digest(context.to_json().as_bytes());
    hash.iter().take(4).map(|b| format!("{b:02x}")).collect()
}

pub fn terminate(s: &str) -> String {
    let t = s.trim();
    if t.ends_with(['.', '!', '?']) {
        t.to_owned()
    } else {
        format!("{t}.")
    }
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(first) => first.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

fn join_names(names: &[&str]) -> String {
    match names {
        [] => UNASSIGNED_LABEL.to_owned(),
        [one] => (*one).to_owned(),
        [rest @ .., last] => format!("{} and {last}", rest.join(", ")),
    }
}

fn plural(n: usize, word: &str) -> String {
    if n == 1 {
        format!("1 {word}")
    } else {
        format!("{n} {word}s")
    }
}

pub fn doc_sentence(title: &str, label: &str) -> String {
    format!("{title} belongs to {label}.")
}

pub fn note_sentence(text: &str, label: &str) -> String {
    format!("Note on {label}: {}", terminate(text))
}

pub fn highlight_sentence(text: &str, count: u32, label: &str) -> String {
    if count >= 2 {
        format!("{text} stands out in {label}, and {text} recurs across sources.")
    } else {
        format!("{text} stands out in {label}.")
    }
}

pub fn emphasis_sentence(focus: &str) -> String {
    format!("{} is a key point.", capitalize(focus.trim().trim_end_matches(['.', '!', '?'])))
}

fn contains_ci(haystack: &str, needle: &str) -> bool {
    let n = normalize_whitespace(needle).to_lowercase();
    !n.is_empty() && normalize_whitespace(haystack).to_lowercase().contains(&n)
}

// ---- generation ---------------------------------------------------------------------

fn item_sentences(docs: &[DocumentContext], notes: &[NoteContext], label: &str, out: &mut Vec<String>) {
    for d in docs {
        out.push(doc_sentence(&d.title, label));
        for h in d.highlights.iter().filter(|h| h.polarity == Polarity::Emphasize) {
            out.push(highlight_sentence(&h.text, h.count, label));
        }
    }
    for n in notes {
        out.push(note_sentence(&n.text, label));
    }
}

fn frame_sentences(f: &FrameContext, label: &str, out: &mut Vec<String>) {
    item_sentences(&f.documents, &f.notes, label, out);
    for c in &f.children {
        out.push(format!("{} is a subgroup of {label}.", c.name));
        frame_sentences(c, label, out);
    }
}

pub fn generate_component(slot: &LayoutSlot, context: &GenerationContext, digest: &str) -> ReportComponent {
    let mut sentences = Vec::new();
    match &slot.key {
        ComponentKey::Summary => {
            let names: Vec<&str> = context.frames.iter().map(|f| f.name.as_str()).collect();
            sentences.push(format!("This report covers {} (context {digest}).", join_names(&names)));
            if !context.frames.is_empty() {
                item_sentences(&context.unassigned.documents, &context.unassigned.notes, UNASSIGNED_LABEL, &mut sentences);
            }
        }
        ComponentKey::Conclusion => {
            sentences.push(format!(
                "Taken together, the evidence spans {} (context {digest}).",
                plural(context.frames.len(), "thread")
            ));
        }
        key if key == &ComponentKey::unassigned() => {
            let n = context.unassigned.documents.len();
            sentences.push(format!(
                "The unassigned material draws on {} (context {digest}).",
                plural(n, "source")
            ));
            item_sentences(&context.unassigned.documents, &context.unassigned.notes, UNASSIGNED_LABEL, &mut sentences);
        }
        ComponentKey::Body(id) => match context.frames.iter().find(|f| &f.id == id) {
            Some(f) => {
                let n = f.all_documents().len();
                sentences.push(format!("{} draws on {} (context {digest}).", f.name, plural(n, "source")));
                frame_sentences(f, &f.name, &mut sentences);
                if n == 0 && f.all_notes().is_empty() && f.children.is_empty() {
                    sentences.push(format!("No material has been gathered for {} yet.", f.name));
                }
            }
            None => sentences.push(format!("No material has been gathered for {} yet.", slot.heading)),
        },
    }
    let anchor = slot.key.anchor().cloned();
    let heading = if slot.key == ComponentKey::unassigned() {
        UNASSIGNED_HEADING.to_owned()
    } else {
        slot.heading.clone()
    };
    ReportComponent::new(slot.kind, anchor, heading, sentences)
}

pub fn generate(context: &GenerationContext, layout: &[LayoutSlot]) -> Vec<ReportComponent> {
    let digest = context_digest(context);
    layout.iter().map(|s| generate_component(s, context, &digest)).collect()
}

// ---- system inference ---------------------------------------------------------------

fn find_spec(specs: &[ComponentSpec], kind: ComponentKind) -> Option<&ComponentSpec> {
    specs.iter().find(|s| s.kind == kind)
}

pub fn infer_system(input: &SystemInferenceInput) -> IntentInference {
    let adj = &input.adjustment;
    let mut why = Vec::new();
    let mut plan = Vec::new();
    if let Some(task) = &adj.task_description_changed {
        why.push(format!("The task shifted from \"{}\" to \"{}\".", task.old, task.new));
        plan.push(PlanStep::new(
            Target::Structure,
            PlanAction::Modify,
            format!("Rewrite every component so the report serves the new task: {}", task.new),
        ));
    }
    if let Some(c) = &adj.components_changed {
        why.push("The analyst restructured the report components.".to_owned());
        for (kind, key) in [
            (ComponentKind::Summary, ComponentKey::Summary),
            (ComponentKind::Conclusion, ComponentKey::Conclusion),
        ] {
            let target = Target::Component(key);
            match (find_spec(&c.old, kind), find_spec(&c.new, kind)) {
                (None, Some(n)) => plan.push(
                    PlanStep::new(target, PlanAction::AddParagraph, format!("Add a {} component.", n.name)).focus(&n.name),
                ),
                (Some(o), None) => plan.push(PlanStep::new(
                    target,
                    PlanAction::RemoveParagraph,
                    format!("Remove the {} component.", o.name),
                )),
                (Some(o), Some(n)) if o.name != n.name => plan.push(
                    PlanStep::new(
                        target,
                        PlanAction::RenameHeading,
                        format!("Rename the {} heading to {}.", o.name, n.name),
                    )
                    .focus(&n.name),
                ),
                _ => {}
            }
        }
        let old_seq: Vec<ComponentKind> = c
            .old
            .iter()
            .map(|s| s.kind)
            .filter(|k| find_spec(&c.new, *k).is_some())
            .collect();
        let new_seq: Vec<ComponentKind> = c
            .new
            .iter()
            .map(|s| s.kind)
            .filter(|k| find_spec(&c.old, *k).is_some())
            .collect();
        for (i, kind) in new_seq.iter().enumerate() {
            if old_seq.get(i) == Some(kind) {
                continue;
            }
            let name = find_spec(&c.new, *kind).map_or("", |s| s.name.as_str());
            let instruction = format!("Move the {name} component to follow the new order.");
            match kind {
                ComponentKind::Summary => plan.push(PlanStep::new(
                    Target::Component(ComponentKey::Summary),
                    PlanAction::RelocateSection,
                    instruction,
                )),
                ComponentKind::Conclusion => plan.push(PlanStep::new(
                    Target::Component(ComponentKey::Conclusion),
                    PlanAction::RelocateSection,
                    instruction,
                )),
                ComponentKind::Body => {
                    for a in input.report.body_anchors() {
                        plan.push(PlanStep::new(Target::body(a), PlanAction::RelocateSection, instruction.clone()));
                    }
                }
            }
        }
    }
    if plan.is_empty() {
        plan.push(PlanStep::new(
            Target::Structure,
            PlanAction::RelocateSection,
            "Keep the report layout in line with the updated settings.",
        ));
    }
    if why.is_empty() {
        why.push("The analyst adjusted the report settings.".to_owned());
    }
    IntentInference {
        source: vec![Source::Prompt],
        why: why.join(" "),
        plan,
    }
}

// ---- interaction inference ----------------------------------------------------------

fn find_title(context: &GenerationContext, id: &Id) -> Option<String> {
    context
        .frames
        .iter()
        .flat_map(|f| f.all_documents())
        .chain(context.unassigned.documents.iter())
        .find(|d| &d.id == id)
        .map(|d| d.title.clone())
}

fn regenerate(target: Target, instruction: String) -> PlanStep {
    PlanStep::new(target, PlanAction::Modify, instruction)
}

/// The rule table for one interaction: an explanation and the plan steps.
pub fn infer_interaction(
    i: &SemanticInteraction,
    idx: &AnchorIndex,
    context: &GenerationContext,
) -> (String, Vec<PlanStep>) {
    rule(i, idx, context).unwrap_or_else(|| {
        (
            format!("The analyst changed {}.", i.subject),
            vec![PlanStep::new(idx.fallback(), PlanAction::RelocateSection, "Review the report for this change.")],
        )
    })
}

fn rule(i: &SemanticInteraction, idx: &AnchorIndex, context: &GenerationContext) -> Option<(String, Vec<PlanStep>)> {
    use InteractionKind::*;
    let subject = &i.subject;
    let before = i.before.as_ref();
    let after = i.after.as_ref();
    let owner_target = |p: Option<&Payload>| idx.target_for_owner(p.and_then(Payload::owner));
    let frame_name = || idx.frame_name(subject).unwrap_or(subject.as_str()).to_owned();
    let title = || find_title(context, subject).unwrap_or_else(|| subject.to_string());

    let out = match i.kind {
        FrameAdded => {
            let Some(Payload::Frame { frame }) = after else { return None };
            match &frame.parent {
                None => {
                    let mut plan = vec![PlanStep::new(
                        Target::body(subject),
                        PlanAction::AddParagraph,
                        format!("Initialize a paragraph for the new frame \"{}\".", frame.name),
                    )
                    .focus(&frame.name)
                    .subject(subject)];
                    if idx.has_component(&ComponentKey::unassigned()) {
                        plan.push(PlanStep::new(
                            Target::Component(ComponentKey::unassigned()),
                            PlanAction::RemoveParagraph,
                            "Remove the Unassigned paragraph now that frames exist.",
                        ));
                    }
                    (format!("The analyst opened a new line of inquiry, \"{}\".", frame.name), plan)
                }
                Some(parent) => {
                    let t = idx.target_for_owner(Some(parent));
                    let label = idx.label(&t);
                    (
                        format!("The analyst split out \"{}\" within {label}.", frame.name),
                        vec![regenerate(
                            t,
                            format!("Update the {label} paragraph to cover the nested frame \"{}\".", frame.name),
                        )
                        .subject(subject)],
                    )
                }
            }
        }
        FrameRemoved => {
            let Some(Payload::Frame { frame }) = before else { return None };
            match &frame.parent {
                None => {
                    let mut plan = vec![PlanStep::new(
                        Target::body(subject),
                        PlanAction::RemoveParagraph,
                        format!("Delete the paragraph for \"{}\".", frame.name),
                    )
                    .subject(subject)];
                    if context.frames.is_empty()
                        && context.has_unassigned_content()
                        && !idx.has_component(&ComponentKey::unassigned())
                    {
                        plan.push(PlanStep::new(
                            Target::Component(ComponentKey::unassigned()),
                            PlanAction::AddParagraph,
                            "Initialize an Unassigned paragraph for material outside every frame.",
                        ));
                    }
                    (format!("The analyst dropped the \"{}\" line of inquiry.", frame.name), plan)
                }
                Some(parent) => {
                    let t = idx.target_for_owner(Some(parent));
                    let label = idx.label(&t);
                    (
                        format!("The analyst dissolved \"{}\" within {label}.", frame.name),
                        vec![regenerate(
                            t,
                            format!("Remove the material of the nested frame \"{}\" from {label}.", frame.name),
                        )
                        .subject(subject)],
                    )
                }
            }
        }
        FrameRenamed => {
            let (Some(Payload::FrameName { name: old }), Some(Payload::FrameName { name: new })) = (before, after) else {
                return None;
            };
            let why = format!("The analyst reframed \"{old}\" as \"{new}\".");
            if idx.is_main(subject) {
                (
                    why,
                    vec![
                        PlanStep::new(
                            Target::body(subject),
                            PlanAction::RenameHeading,
                            format!("Rename the heading to \"{new}\"."),
                        )
                        .focus(new)
                        .subject(subject),
                        PlanStep::new(
                            Target::Component(ComponentKey::Summary),
                            PlanAction::Modify,
                            format!("Edit the summary if necessary so it refers to \"{new}\" instead of \"{old}\"."),
                        )
                        .previous(old)
                        .focus(new)
                        .subject(subject),
                    ],
                )
            } else {
                let t = idx.target_for_owner(Some(subject));
                let label = idx.label(&t);
                (
                    why,
                    vec![PlanStep::new(
                        t,
                        PlanAction::Modify,
                        format!("Refer to \"{new}\" instead of \"{old}\" in {label}."),
                    )
                    .previous(old)
                    .focus(new)
                    .subject(subject)],
                )
            }
        }
        FrameMoved => {
            let t = idx.target_for_owner(Some(subject));
            let label = idx.label(&t);
            (
                format!("The analyst rearranged the canvas around \"{}\".", frame_name()),
                vec![PlanStep::new(
                    t,
                    PlanAction::RelocateSection,
                    format!("Keep the {label} section placed consistently with the layout."),
                )
                .subject(subject)],
            )
        }
        FrameReparented => {
            let (Some(Payload::FrameParent { parent: p0 }), Some(Payload::FrameParent { parent: p1 })) = (before, after)
            else {
                return None;
            };
            let name = frame_name();
            let mut plan = Vec::new();
            match (p0, p1) {
                (None, Some(p1)) => {
                    let t1 = idx.target_for_owner(Some(p1));
                    let label = idx.label(&t1);
                    if idx.has_component(&ComponentKey::Body(subject.clone())) {
                        plan.push(PlanStep::new(
                            Target::body(subject),
                            PlanAction::RemoveParagraph,
                            format!("Fold the \"{name}\" paragraph into {label}."),
                        ));
                    }
                    plan.push(PlanStep::new(
                        t1.clone(),
                        PlanAction::RelocateSection,
                        format!("Place the \"{name}\" material under {label}."),
                    ));
                    plan.push(regenerate(t1, format!("Update the parent paragraph {label} to include \"{name}\".")));
                }
                (Some(p0), None) => {
                    let t0 = idx.target_for_owner(Some(p0));
                    let label = idx.label(&t0);
                    plan.push(
                        PlanStep::new(
                            Target::body(subject),
                            PlanAction::AddParagraph,
                            format!("Give \"{name}\" its own paragraph."),
                        )
                        .focus(&name),
                    );
                    plan.push(PlanStep::new(
                        t0.clone(),
                        PlanAction::RelocateSection,
                        format!("Move the \"{name}\" material out of {label}."),
                    ));
                    plan.push(regenerate(
                        t0,
                        format!("Update the parent paragraph {label} now that \"{name}\" stands alone."),
                    ));
                }
                (Some(p0), Some(p1)) => {
                    let t0 = idx.target_for_owner(Some(p0));
                    let t1 = idx.target_for_owner(Some(p1));
                    plan.push(PlanStep::new(
                        t0.clone(),
                        PlanAction::RelocateSection,
                        format!("Move the \"{name}\" material out of {}.", idx.label(&t0)),
                    ));
                    if t1 != t0 {
                        plan.push(PlanStep::new(
                            t1.clone(),
                            PlanAction::RelocateSection,
                            format!("Place the \"{name}\" material under {}.", idx.label(&t1)),
                        ));
                    }
                    plan.push(regenerate(
                        t1.clone(),
                        format!("Update the parent paragraph {} to include \"{name}\".", idx.label(&t1)),
                    ));
                    if t1 != t0 {
                        plan.push(regenerate(
                            t0.clone(),
                            format!("Update the parent paragraph {} now that \"{name}\" left.", idx.label(&t0)),
                        ));
                    }
                }
                (None, None) => return None,
            }
            for s in &mut plan {
                s.subject = Some(subject.clone());
            }
            (format!("The analyst moved \"{name}\" under a different parent."), plan)
        }
        DocumentReassigned | NoteReassigned => {
            let t0 = owner_target(before);
            let t1 = owner_target(after);
            let (l0, l1) = (idx.label(&t0), idx.label(&t1));
            let (what, removed, added) = match (before, after) {
                (Some(Payload::Note { note: n0, .. }), Some(Payload::Note { note: n1, .. })) => {
                    (format!("the note \"{}\"", n0.text), n0.text.clone(), note_sentence(&n1.text, &l1))
                }
                _ => {
                    let t = title();
                    (format!("\"{t}\""), t.clone(), doc_sentence(&t, &l1))
                }
            };
            if t0 == t1 {
                (
                    format!("The analyst repositioned {what} within {l0}."),
                    vec![PlanStep::new(t0, PlanAction::RelocateSection, format!("Keep {what} with {l0}."))
                        .subject(subject)],
                )
            } else {
                (
                    format!("The analyst regrouped {what} from {l0} to {l1}."),
                    vec![
                        PlanStep::new(t0, PlanAction::Delete, format!("Remove the discussion of {what} from {l0}."))
                            .focus(removed)
                            .subject(subject),
                        PlanStep::new(
                            t1,
                            PlanAction::Insert,
                            format!("Reassign {what} to the {l1} narrative block."),
                        )
                        .focus(added)
                        .subject(subject),
                    ],
                )
            }
        }
        DocumentMoved => {
            let t = owner_target(after);
            let label = idx.label(&t);
            let what = title();
            (
                format!("The analyst repositioned \"{what}\" within {label}."),
                vec![
                    PlanStep::new(t, PlanAction::RelocateSection, format!("Keep \"{what}\" with {label}."))
                        .subject(subject),
                ],
            )
        }
        NoteAdded => {
            let Some(Payload::Note { note, .. }) = after else { return None };
            let t = owner_target(after);
            let label = idx.label(&t);
            (
                format!("The analyst recorded a new thought about {label}: \"{}\".", note.text),
                vec![PlanStep::new(
                    t,
                    PlanAction::Insert,
                    format!("Add a sentence to {label} covering the note: {}", note.text),
                )
                .focus(note_sentence(&note.text, &label))
                .subject(subject)],
            )
        }
        NoteRemoved => {
            let Some(Payload::Note { note, .. }) = before else { return None };
            let t = owner_target(before);
            (
                format!("The analyst withdrew the note \"{}\".", note.text),
                vec![PlanStep::new(
                    t,
                    PlanAction::Delete,
                    format!("Remove the point made by the deleted note: {}", note.text),
                )
                .focus(&note.text)
                .subject(subject)],
            )
        }
        NoteEdited => {
            let (Some(Payload::Note { note: old, .. }), Some(Payload::Note { note: new, .. })) = (before, after) else {
                return None;
            };
            let t = owner_target(after);
            (
                format!("The analyst revised a note from \"{}\" to \"{}\".", old.text, new.text),
                vec![PlanStep::new(
                    t,
                    PlanAction::Modify,
                    format!("Revise the sentence based on the note, replacing \"{}\" with \"{}\".", old.text, new.text),
                )
                .previous(&old.text)
                .focus(&new.text)
                .subject(subject)],
            )
        }
        HighlightAdded => {
            let Some(Payload::Highlight { highlight, .. }) = after else { return None };
            let t = owner_target(after);
            let label = idx.label(&t);
            let text = &highlight.text;
            let step = match highlight.polarity {
                Polarity::Emphasize => {
                    PlanStep::new(t, PlanAction::Emphasize, format!("Emphasize \"{text}\" in {label}."))
                }
                Polarity::Reject => PlanStep::new(
                    t,
                    PlanAction::Deemphasize,
                    format!("Play down \"{text}\" in {label}; the analyst rejected it."),
                ),
            };
            (
                format!("The analyst marked \"{text}\" while reading."),
                vec![step.focus(text).subject(subject)],
            )
        }
        HighlightRemoved => {
            let Some(Payload::Highlight { highlight, .. }) = before else { return None };
            let t = owner_target(before);
            let text = &highlight.text;
            let step = match highlight.polarity {
                Polarity::Emphasize => PlanStep::new(
                    t,
                    PlanAction::Deemphasize,
                    format!("Reduce the emphasis on \"{text}\"."),
                )
                .focus(text),
                Polarity::Reject => regenerate(t, format!("Reconsider \"{text}\", which is no longer rejected.")),
            };
            (
                format!("The analyst cleared the highlight on \"{text}\"."),
                vec![step.subject(subject)],
            )
        }
        HighlightCountEdited => {
            let (Some(Payload::HighlightCount { count: c0 }), Some(Payload::HighlightCount { count: c1 })) =
                (before, after)
            else {
                return None;
            };
            let (text, polarity) = idx.highlight(subject)?.clone();
            let t = idx.target_for_owner(idx.root_of_item(subject).as_ref());
            let step = if polarity == Polarity::Emphasize && c1 > c0 {
                PlanStep::new(
                    t,
                    PlanAction::Emphasize,
                    format!("Increase the emphasis and level of detail on \"{text}\"."),
                )
            } else {
                PlanStep::new(t, PlanAction::Deemphasize, format!("Lower the emphasis on \"{text}\"."))
            };
            (
                format!("The analyst changed how much \"{text}\" matters ({c0} to {c1})."),
                vec![step.focus(&text).subject(subject)],
            )
        }
        HighlightPolarityToggled => {
            let Some(Payload::HighlightPolarity { polarity }) = after else { return None };
            let (text, _) = idx.highlight(subject)?.clone();
            let t = idx.target_for_owner(idx.root_of_item(subject).as_ref());
            let step = match polarity {
                Polarity::Reject => PlanStep::new(
                    t,
                    PlanAction::Deemphasize,
                    format!("Treat \"{text}\" as irrelevant and play it down."),
                ),
                Polarity::Emphasize => {
                    PlanStep::new(t, PlanAction::Emphasize, format!("Emphasize \"{text}\" again."))
                }
            };
            (
                format!("The analyst flipped the judgement on \"{text}\"."),
                vec![step.focus(&text).subject(subject)],
            )
        }
    };
    Some(out)
}

/// One inference covering every interaction of the batch.
pub fn infer_batch(input: &InteractionInferenceInput) -> IntentInference {
    let idx = AnchorIndex::new(&input.context, &input.report, &input.removed_frames);
    let mut why = Vec::new();
    let mut plan: Vec<PlanStep> = Vec::new();
    for i in &input.interactions {
        let (w, steps) = infer_interaction(i, &idx, &input.context);
        why.push(w);
        for s in steps {
            if !plan.contains(&s) {
                plan.push(s);
            }
        }
    }
    IntentInference {
        source: input.interactions.iter().map(|i| Source::Interaction(i.order)).collect(),
        why: why.join(" "),
        plan,
    }
}

// ---- refinement ---------------------------------------------------------------------

pub fn refine(input: &RefinementInput) -> Vec<ReportComponent> {
    let mut steps: Vec<&PlanStep> = input.inferences.iter().flat_map(|i| &i.plan).collect();
    steps.sort_by_key(|s| s.action.rank());
    let replaced: Vec<&ComponentKey> = steps
        .iter()
        .filter(|s| matches!(s.action, PlanAction::AddParagraph | PlanAction::RemoveParagraph))
        .filter_map(|s| s.target.component())
        .collect();
    steps.retain(|s| {
        matches!(s.action, PlanAction::AddParagraph | PlanAction::RemoveParagraph)
            || s.target.component().is_none_or(|k| !replaced.contains(&k))
    });

    let context = &input.context;
    let layout = &input.layout;
    let digest = context_digest(context);
    let slot = |k: &ComponentKey| layout.iter().find(|s| &s.key == k);
    let mut comps = input.report.components.clone();
    let mut structural = false;

    for step in steps {
        let covered = |c: &ReportComponent| step.target.covers(&c.key());
        match step.action {
            PlanAction::RemoveParagraph => {
                if let Target::Component(k) = &step.target {
                    comps.retain(|c| &c.key() != k);
                }
                structural = true;
            }
            PlanAction::AddParagraph => {
                if let Target::Component(k) = &step.target {
                    if !comps.iter().any(|c| &c.key() == k) {
                        if let Some(s) = slot(k) {
                            comps.push(generate_component(s, context, &digest));
                        }
                    }
                }
                structural = true;
            }
            PlanAction::RelocateSection => structural = true,
            PlanAction::RenameHeading => {
                if let Some(f) = &step.focus {
                    comps.iter_mut().filter(|c| covered(c)).for_each(|c| c.heading = f.clone());
                }
            }
            PlanAction::Delete | PlanAction::Deemphasize => {
                if let Some(f) = &step.focus {
                    for c in comps.iter_mut().filter(|c| covered(c)) {
                        c.sentences.retain(|s| !contains_ci(s, f));
                    }
                }
            }
            PlanAction::Modify => {
                for c in comps.iter_mut().filter(|c| covered(c)) {
                    match (&step.previous, &step.focus) {
                        (Some(p), Some(f)) => {
                            for s in &mut c.sentences {
                                *s = s.replace(p.as_str(), f);
                            }
                        }
                        (Some(p), None) => c.sentences.retain(|s| !contains_ci(s, p)),
                        (None, Some(f)) => c.sentences.push(terminate(f)),
                        (None, None) => {
                            if let Some(s) = slot(&c.key()) {
                                *c = generate_component(s, context, &digest);
                            }
                        }
                    }
                }
            }
            PlanAction::Emphasize | PlanAction::Insert => {
                let text = step.focus.as_deref().unwrap_or(&step.instruction);
                let sentence = if step.action == PlanAction::Emphasize {
                    emphasis_sentence(text)
                } else {
                    terminate(text)
                };
                let key = step.target.component().cloned().unwrap_or(ComponentKey::Summary);
                if let Some(c) = comps.iter_mut().find(|c| c.key() == key) {
                    c.sentences.push(sentence);
                }
            }
        }
    }
    if structural {
        comps.sort_by_key(|c| layout.iter().position(|s| s.key == c.key()).unwrap_or(usize::MAX));
    }
    comps
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn templates() {
        assert_eq!(highlight_sentence("Hamid", 3, "Suspects").matches("Hamid").count(), 2);
        assert_eq!(highlight_sentence("Hamid", 1, "Suspects").matches("Hamid").count(), 1);
        assert_eq!(note_sentence("mention budget limits", "Travel"), "Note on Travel: mention budget limits.");
        assert_eq!(emphasis_sentence("queens, NYC."), "Queens, NYC is a key point.");
        assert_eq!(join_names(&["A", "B", "C"]), "A, B and C");
        assert_eq!(terminate("Done?"), "Done?");
    }

    #[test]
    fn case_insensitive_containment() {
        assert!(contains_ci("The  Budget limits were hit.", "budget LIMITS"));
        assert!(!contains_ci("anything", "  "));
    }
}
