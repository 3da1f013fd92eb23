use std::collections::BTreeSet;
use std::sync::Arc;

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::Serialize;
use tracing::{debug, warn};

use super::anchors::{batch_interactions, AnchorIndex};
use super::backend::{BackendError, LlmBackend, LlmRequest, Message, SchemaId, Usage};
use super::io::*;
use super::prompts::system_prompt;
use super::scope::{enforce_scope, provenance, prune_conflicts};
use super::types::{IntentInference, PlanStep, RefinementResult, Source, Target};
use crate::narrative::{
    check_anchoring_context, check_layout, diff_reports, serialize_context, AnchoringViolation, ComponentKey,
    GenerationContext, Report, ReportComponent,
};
use crate::perception::{perceive, InteractionDelta, PerceiveError, PromptAdjustment, SemanticInteraction};
use crate::workspace::{ModelConfig, Violation, WorkspaceSnapshot};

/// Schema-validation retries after the first attempt.
pub const SCHEMA_RETRIES: u32 = 2;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AgentError {
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("{schema} response rejected after {attempts} attempts: {}", problems.join("; "))]
    Schema {
        schema: SchemaId,
        attempts: u32,
        problems: Vec<String>,
    },
    #[error("no inference covers interactions {missing:?}")]
    Coverage { missing: Vec<u32> },
    #[error("report anchoring still broken after a corrective prompt: {}", join(violations))]
    Anchoring { violations: Vec<AnchoringViolation> },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("invalid workspace: {}", join(.0))]
    InvalidWorkspace(Vec<Violation>),
    #[error(transparent)]
    Perceive(#[from] PerceiveError),
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

enum Rejection {
    Schema(Vec<String>),
    Coverage(Vec<u32>),
}

/// The reasoning and acting agents bound to one backend and model configuration.
#[derive(Clone)]
pub struct Agents {
    backend: Arc<dyn LlmBackend>,
    model: ModelConfig,
    /// Run independent inference batches on the rayon pool.
    pub concurrent: bool,
    /// Document bodies are cut to this many characters in refinement requests when set.
    pub body_budget: Option<usize>,
}

/// What one pipeline run did, for logs and the evaluation harness.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineRun {
    pub delta: InteractionDelta,
    pub result: Option<RefinementResult>,
}

impl Agents {
    pub fn new(backend: Arc<dyn LlmBackend>, model: ModelConfig) -> Self {
        Agents {
            backend,
            model,
            concurrent: true,
            body_budget: None,
        }
    }

    pub fn backend(&self) -> &Arc<dyn LlmBackend> {
        &self.backend
    }

    pub fn model(&self) -> &ModelConfig {
        &self.model
    }

    fn call<T, I>(
        &self,
        schema: SchemaId,
        input: &I,
        validate: impl Fn(&T) -> Result<(), Rejection>,
    ) -> Result<(T, Vec<Message>, Usage), AgentError>
    where
        T: DeserializeOwned,
        I: Serialize,
    {
        let messages = vec![
            Message::system(system_prompt(schema)),
            Message::user(serde_json::to_string(input).expect("agent input serializes")),
        ];
        self.call_with(schema, messages, validate)
    }

    fn call_with<T: DeserializeOwned>(
        &self,
        schema: SchemaId,
        mut messages: Vec<Message>,
        validate: impl Fn(&T) -> Result<(), Rejection>,
    ) -> Result<(T, Vec<Message>, Usage), AgentError> {
        let mut usage = Usage::default();
        let mut last = Rejection::Schema(Vec::new());
        for attempt in 0..=SCHEMA_RETRIES {
            let request = LlmRequest {
                schema,
                messages: messages.clone(),
                model: self.model.clone(),
            };
            let response = self.backend.complete(&request)?;
            usage += response.usage;
            let verdict = serde_json::from_str::<T>(&response.raw)
                .map_err(|e| Rejection::Schema(vec![e.to_string()]))
                .and_then(|v| validate(&v).map(|()| v));
            messages.push(Message::assistant(response.raw));
            match verdict {
                Ok(v) => return Ok((v, messages, usage)),
                Err(rejection) => {
                    let problem = match &rejection {
                        Rejection::Schema(p) => p.join("; "),
                        Rejection::Coverage(m) => format!("interactions {m:?} are not covered by any inference"),
                    };
                    warn!(%schema, attempt, %problem, "rejected backend response");
                    messages.push(Message::user(format!(
                        "Your previous reply was rejected: {problem}. Reply again with a single JSON object of the required shape."
                    )));
                    last = rejection;
                }
            }
        }
        Err(match last {
            Rejection::Coverage(missing) => AgentError::Coverage { missing },
            Rejection::Schema(problems) => AgentError::Schema {
                schema,
                attempts: SCHEMA_RETRIES + 1,
                problems,
            },
        })
    }

    /// First report for a workspace, one body paragraph per main frame.
    pub fn generate_initial(&self, context: &GenerationContext) -> Result<Report, AgentError> {
        if context.is_empty() {
            return Err(AgentError::Precondition(
                "the workspace needs at least one frame or document".into(),
            ));
        }
        let layout = context.layout();
        let input = GenerationInput {
            context: context.clone(),
            layout: layout.clone(),
        };
        let (out, messages, _) = self.call(SchemaId::Generation, &input, validate_components)?;
        let report = Report::new(1, out.components);
        let violations = check_layout(&report, &layout, context);
        if violations.is_empty() {
            return Ok(report);
        }
        warn!(violations = %join(&violations), "generated report breaks the layout, re-prompting once");
        let mut messages = messages;
        messages.push(Message::user(layout_correction(&violations, &layout)));
        let (out, _, _) = self.call_with(SchemaId::Generation, messages, validate_components)?;
        let report = Report::new(1, out.components);
        let violations = check_layout(&report, &layout, context);
        if violations.is_empty() {
            Ok(report)
        } else {
            Err(AgentError::Anchoring { violations })
        }
    }

    /// Intent behind a report-affecting settings change.
    pub fn infer_system(&self, adjustment: &PromptAdjustment, report: &Report) -> Result<IntentInference, AgentError> {
        if !adjustment.affects_report() {
            return Err(AgentError::Precondition(
                "the settings change does not affect report content".into(),
            ));
        }
        let input = SystemInferenceInput {
            adjustment: adjustment.clone(),
            report: report.clone(),
        };
        let mut known: BTreeSet<ComponentKey> = report.keys().into_iter().collect();
        known.insert(ComponentKey::Summary);
        known.insert(ComponentKey::Conclusion);
        let (mut inf, _, _) = self.call(SchemaId::SystemInference, &input, |i: &IntentInference| {
            let problems = validate_plan(i, &known);
            if problems.is_empty() {
                Ok(())
            } else {
                Err(Rejection::Schema(problems))
            }
        })?;
        inf.source = vec![Source::Prompt];
        Ok(inf)
    }

    /// Intents behind workspace interactions, in delta order. Interactions sharing a
    /// subject frame are inferred in one call; independent calls run concurrently.
    pub fn infer_interactions(
        &self,
        delta: &InteractionDelta,
        snapshot: &WorkspaceSnapshot,
        report: &Report,
    ) -> Result<Vec<IntentInference>, AgentError> {
        if delta.interactions.is_empty() {
            return Err(AgentError::Precondition("the delta has no interactions".into()));
        }
        let context = serialize_context(snapshot).map_err(AgentError::InvalidWorkspace)?;
        let removed_frames = AnchorIndex::removed_frames(delta);
        let index = AnchorIndex::new(&context, report, &removed_frames);
        let batches = batch_interactions(delta, &index);
        let mut known: BTreeSet<ComponentKey> = report.keys().into_iter().collect();
        known.extend(context.layout().into_iter().map(|s| s.key));

        let run = |batch: &Vec<&SemanticInteraction>| -> Result<Vec<IntentInference>, AgentError> {
            let input = InteractionInferenceInput {
                interactions: batch.iter().map(|i| (*i).clone()).collect(),
                context: context.clone(),
                report: report.clone(),
                removed_frames: removed_frames.clone(),
            };
            let orders: BTreeSet<u32> = batch.iter().map(|i| i.order).collect();
            let (out, _, _) = self.call(SchemaId::InteractionInference, &input, |o: &InferencesOutput| {
                validate_inferences(o, &orders, &known)
            })?;
            Ok(out.inferences)
        };
        let results: Vec<Result<Vec<IntentInference>, AgentError>> = if self.concurrent {
            batches.par_iter().map(run).collect()
        } else {
            batches.iter().map(run).collect()
        };
        let mut out = Vec::new();
        for r in results {
            out.extend(r?);
        }
        debug!(batches = batches.len(), inferences = out.len(), "inferred interaction intents");
        Ok(out)
    }

    /// Applies the inferred plans to `report`, restoring anything outside their scope.
    pub fn refine(
        &self,
        report: &Report,
        inferences: &[IntentInference],
        context: &GenerationContext,
    ) -> Result<RefinementResult, AgentError> {
        if inferences.iter().all(|i| i.plan.is_empty()) {
            return Err(AgentError::Precondition("nothing to refine: no plan steps".into()));
        }
        let pruned = prune_conflicts(inferences);
        let steps: Vec<&PlanStep> = pruned.iter().flat_map(|i| &i.plan).collect();
        let layout = context.layout();
        let input = RefinementInput {
            report: report.clone(),
            inferences: pruned.clone(),
            context: self.budgeted(context),
            layout,
        };
        let (out, messages, _) = self.call(SchemaId::Refinement, &input, validate_components)?;
        let (mut new_report, mut repairs) = self.scoped(report, out.components, &steps);
        let mut violations = check_anchoring_context(&new_report, context);
        if !violations.is_empty() {
            warn!(violations = %join(&violations), "refined report breaks anchoring, re-prompting once");
            let mut messages = messages;
            messages.push(Message::user(format!(
                "The revised report is not anchored correctly: {}. Return the full report again with exactly one body paragraph per top-level frame.",
                join(&violations)
            )));
            let (out, _, _) = self.call_with(SchemaId::Refinement, messages, validate_components)?;
            (new_report, repairs) = self.scoped(report, out.components, &steps);
            violations = check_anchoring_context(&new_report, context);
            if !violations.is_empty() {
                return Err(AgentError::Anchoring { violations });
            }
        }
        let diff = diff_reports(report, &new_report);
        let provenance = provenance(&diff, &pruned);
        Ok(RefinementResult {
            new_report,
            diff,
            reasoning: inferences.to_vec(),
            provenance,
            scope_repairs: repairs,
        })
    }

    fn scoped(
        &self,
        report: &Report,
        components: Vec<ReportComponent>,
        steps: &[&PlanStep],
    ) -> (Report, Vec<super::types::ScopeRepair>) {
        let proposed = Report::new(report.version + 1, components);
        let (r, repairs) = enforce_scope(report, proposed, steps);
        for rep in &repairs {
            warn!(component = %rep.key, repair = ?rep.repair, "out-of-scope edit repaired");
        }
        (r, repairs)
    }

    fn budgeted(&self, context: &GenerationContext) -> GenerationContext {
        let Some(limit) = self.body_budget else {
            return context.clone();
        };
        let mut c = context.clone();
        let cut = |d: &mut crate::narrative::DocumentContext| {
            if d.body.chars().count() > limit {
                d.body = d.body.chars().take(limit).collect();
            }
        };
        fn walk(f: &mut crate::narrative::FrameContext, cut: &dyn Fn(&mut crate::narrative::DocumentContext)) {
            f.documents.iter_mut().for_each(cut);
            for child in &mut f.children {
                walk(child, cut);
            }
        }
        for f in &mut c.frames {
            walk(f, &cut);
        }
        c.unassigned.documents.iter_mut().for_each(cut);
        c
    }

    /// perceive, infer and refine. `Ok(None)` when there is nothing that affects the report.
    pub fn run(
        &self,
        prev: &WorkspaceSnapshot,
        curr: &WorkspaceSnapshot,
        report: &Report,
    ) -> Result<PipelineRun, AgentError> {
        let delta = perceive(prev, curr)?;
        if delta.is_vacuous() {
            return Ok(PipelineRun { delta, result: None });
        }
        let context = serialize_context(curr).map_err(AgentError::InvalidWorkspace)?;
        let mut inferences = Vec::new();
        if let Some(adj) = delta.prompt_adjustment.as_ref().filter(|a| a.affects_report()) {
            inferences.push(self.infer_system(adj, report)?);
        }
        if !delta.interactions.is_empty() {
            inferences.extend(self.infer_interactions(&delta, curr, report)?);
        }
        let result = self.refine(report, &inferences, &context)?;
        Ok(PipelineRun {
            delta,
            result: Some(result),
        })
    }
}

fn layout_correction(violations: &[AnchoringViolation], layout: &[crate::narrative::LayoutSlot]) -> String {
    let keys: Vec<String> = layout.iter().map(|s| s.key.to_string()).collect();
    format!(
        "The report does not match the required layout: {}. Return exactly these components in this order: {}.",
        join(violations),
        keys.join(", ")
    )
}

fn validate_components(o: &ComponentsOutput) -> Result<(), Rejection> {
    let mut problems = Vec::new();
    if o.components.is_empty() {
        problems.push("no components".to_owned());
    }
    for (i, c) in o.components.iter().enumerate() {
        if c.heading.trim().is_empty() {
            problems.push(format!("component {i} has an empty heading"));
        }
        if c.sentences.iter().any(|s| s.trim().is_empty()) {
            problems.push(format!("component {i} has an empty sentence"));
        }
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(Rejection::Schema(problems))
    }
}

fn validate_plan(i: &IntentInference, known: &BTreeSet<ComponentKey>) -> Vec<String> {
    let mut problems = Vec::new();
    if i.plan.is_empty() {
        problems.push("an inference has an empty plan".to_owned());
    }
    if i.why.trim().is_empty() {
        problems.push("an inference has an empty explanation".to_owned());
    }
    for s in &i.plan {
        if s.instruction.trim().is_empty() {
            problems.push(format!("{} step on {} has an empty instruction", s.action, s.target));
        }
        if let Target::Component(k) = &s.target {
            if !known.contains(k) {
                problems.push(format!("target {k} does not resolve to a report component or frame"));
            }
        }
    }
    problems
}

fn validate_inferences(
    o: &InferencesOutput,
    orders: &BTreeSet<u32>,
    known: &BTreeSet<ComponentKey>,
) -> Result<(), Rejection> {
    let mut problems = Vec::new();
    if o.inferences.is_empty() {
        problems.push("no inferences".to_owned());
    }
    let mut covered = BTreeSet::new();
    for i in &o.inferences {
        problems.extend(validate_plan(i, known));
        if i.source.is_empty() {
            problems.push("an inference has no source".to_owned());
        }
        for s in &i.source {
            match s {
                Source::Interaction(n) if orders.contains(n) => {
                    covered.insert(*n);
                }
                other => problems.push(format!("source {other} is not an interaction of this request")),
            }
        }
    }
    if !problems.is_empty() {
        return Err(Rejection::Schema(problems));
    }
    let missing: Vec<u32> = orders.difference(&covered).copied().collect();
    if missing.is_empty() {
        Ok(())
    } else {
        Err(Rejection::Coverage(missing))
    }
}
