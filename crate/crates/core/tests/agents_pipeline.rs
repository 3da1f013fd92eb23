use std::collections::BTreeSet;
use std::sync::{Arc, Mutex};

use sensemap_core::agents::*;
use sensemap_core::narrative::*;
use sensemap_core::perception::{perceive, perceive_prompt, Change, PromptAdjustment};
use sensemap_core::workspace::builders::*;
use sensemap_core::workspace::*;

fn agents() -> Agents {
    Agents::new(Arc::new(MockBackend), ModelConfig::default())
}

/// Suspects and Travel frames with two documents.
fn base() -> WorkspaceSnapshot {
    let mut s = empty_snapshot(1);
    s.frames.push(frame("suspects", "Suspects", (0.0, 0.0), (200.0, 200.0), None, 1));
    s.frames.push(frame("travel", "Travel", (400.0, 0.0), (200.0, 200.0), None, 2));
    s.documents.push(doc("d1", "Intercept 12", "Hamid called the courier from Queens, NYC twice.", (0.0, 0.0)));
    s.documents.push(doc("d2", "Visa record", "A visa was issued in March.", (400.0, 0.0)));
    s
}

fn next(s: &WorkspaceSnapshot) -> WorkspaceSnapshot {
    let mut c = s.clone();
    c.version += 1;
    c.timestamp = fixed_time(c.version);
    c
}

fn initial(s: &WorkspaceSnapshot) -> Report {
    agents().generate_initial(&serialize_context(s).unwrap()).unwrap()
}

#[test]
fn initial_report_has_one_paragraph_per_main_frame() {
    let s = base();
    let r = initial(&s);
    assert!(check_anchoring(&r, &s).is_empty());
    let keys: Vec<String> = r.keys().iter().map(ToString::to_string).collect();
    assert_eq!(keys, ["summary", "suspects", "travel", "conclusion"]);
}

#[test]
fn unframed_documents_get_an_unassigned_paragraph() {
    let mut s = empty_snapshot(1);
    for i in 0..3 {
        s.documents.push(doc(&format!("d{i}"), &format!("Doc {i}"), "text", (i as f64 * 100.0, 0.0)));
    }
    let r = initial(&s);
    assert_eq!(r.components[1].heading, UNASSIGNED_HEADING);
    assert_eq!(r.components[1].anchor.as_ref().unwrap().as_str(), UNASSIGNED_ANCHOR);
    assert!(check_anchoring(&r, &s).is_empty());
}

#[test]
fn emphasized_highlight_is_mentioned() {
    let mut s = base();
    add_highlight(&mut s, "h1", "d1", "Hamid", 3, Polarity::Emphasize);
    let r = initial(&s);
    let text = r.component(&ComponentKey::Body(Id::from("suspects"))).unwrap().text();
    assert_eq!(text.matches("Hamid").count(), 2);
}

#[test]
fn empty_workspace_cannot_be_reported() {
    let err = agents().generate_initial(&serialize_context(&empty_snapshot(1)).unwrap()).unwrap_err();
    assert!(matches!(err, AgentError::Precondition(_)));
}

#[test]
fn note_added_becomes_insert_at_owning_frame() {
    let p = base();
    let mut c = next(&p);
    c.notes.push(note("n1", "mention budget limits", (420.0, 20.0)));
    let delta = perceive(&p, &c).unwrap();
    let infs = agents().infer_interactions(&delta, &c, &initial(&p)).unwrap();
    assert_eq!(infs.len(), 1);
    assert_eq!(infs[0].plan.len(), 1);
    let step = &infs[0].plan[0];
    assert_eq!((step.action, step.target.as_str()), (PlanAction::Insert, "travel"));
    assert!(step.instruction.contains("budget limits"));
}

#[test]
fn frame_removed_becomes_remove_paragraph() {
    let p = base();
    let mut c = next(&p);
    c.frames.retain(|f| f.id.as_str() != "travel");
    let delta = perceive(&p, &c).unwrap();
    let infs = agents().infer_interactions(&delta, &c, &initial(&p)).unwrap();
    let steps: Vec<_> = infs.iter().flat_map(|i| &i.plan).map(|s| (s.action, s.target.to_string())).collect();
    assert!(steps.contains(&(PlanAction::RemoveParagraph, "travel".into())));
}

#[test]
fn highlight_added_becomes_emphasize() {
    let p = base();
    let mut c = next(&p);
    add_highlight(&mut c, "h1", "d1", "Queens, NYC", 1, Polarity::Emphasize);
    let delta = perceive(&p, &c).unwrap();
    let infs = agents().infer_interactions(&delta, &c, &initial(&p)).unwrap();
    let step = &infs[0].plan[0];
    assert_eq!((step.action, step.target.as_str()), (PlanAction::Emphasize, "suspects"));
    assert!(step.instruction.contains("Queens, NYC"));
}

#[test]
fn polarity_toggle_to_reject_deemphasizes() {
    let mut p = base();
    add_highlight(&mut p, "h1", "d1", "Hamid", 1, Polarity::Emphasize);
    let mut c = next(&p);
    c.highlights[0].polarity = Polarity::Reject;
    let delta = perceive(&p, &c).unwrap();
    let infs = agents().infer_interactions(&delta, &c, &initial(&p)).unwrap();
    assert_eq!(infs[0].plan[0].action, PlanAction::Deemphasize);
}

#[test]
fn system_inference_for_reorder_and_task_change() {
    let p = base();
    let r = initial(&p);
    let mut c = next(&p);
    let comps = &mut c.prompt_settings.components;
    let conclusion = comps.pop().unwrap();
    comps.insert(1, conclusion);
    let adj = perceive_prompt(&p, &c);
    let inf = agents().infer_system(&adj, &r).unwrap();
    assert_eq!(inf.source, [Source::Prompt]);
    assert!(inf.plan.iter().all(|s| s.action == PlanAction::RelocateSection));
    let targets: BTreeSet<String> = inf.plan.iter().map(|s| s.target.to_string()).collect();
    assert!(targets.contains("conclusion"));

    let adj = PromptAdjustment {
        task_description_changed: Some(Change {
            old: "report".into(),
            new: "itinerary".into(),
        }),
        ..Default::default()
    };
    let inf = agents().infer_system(&adj, &r).unwrap();
    assert!(inf.why.contains("itinerary"));
    assert_eq!(inf.plan[0].target, Target::Structure);
    assert_eq!(inf.plan[0].action, PlanAction::Modify);

    let adj = PromptAdjustment {
        model_config_changed: Some(Change {
            old: ModelConfig::default(),
            new: ModelConfig {
                temperature: 1.0,
                ..ModelConfig::default()
            },
        }),
        ..Default::default()
    };
    assert!(matches!(agents().infer_system(&adj, &r), Err(AgentError::Precondition(_))));
}

#[test]
fn refine_touches_only_the_targeted_paragraph() {
    let p = base();
    let r = initial(&p);
    let mut c = next(&p);
    c.notes.push(note("n1", "mention budget limits", (420.0, 20.0)));
    let run = agents().run(&p, &c, &r).unwrap();
    let res = run.result.unwrap();
    for (old, new) in r.components.iter().zip(&res.new_report.components) {
        if old.key() != ComponentKey::Body(Id::from("travel")) {
            assert_eq!(old, new);
        }
    }
    assert_eq!(
        res.diff.changed_anchors.iter().map(ToString::to_string).collect::<Vec<_>>(),
        ["travel"]
    );
    assert!(res.new_report.component(&ComponentKey::Body(Id::from("travel"))).unwrap().text().contains("budget limits"));
    assert!(res.scope_repairs.is_empty());
    assert!(res.provenance.iter().all(|p| p == &[Source::Interaction(0)]));
}

#[test]
fn refine_removes_paragraph() {
    let p = base();
    let r = initial(&p);
    let step = PlanStep::new(Target::body(&Id::from("travel")), PlanAction::RemoveParagraph, "Delete it.");
    let inf = IntentInference {
        source: vec![Source::Interaction(0)],
        why: "dropped".into(),
        plan: vec![step],
    };
    let mut c = next(&p);
    c.frames.retain(|f| f.id.as_str() != "travel");
    let res = agents().refine(&r, &[inf], &serialize_context(&c).unwrap()).unwrap();
    assert!(res.new_report.component(&ComponentKey::Body(Id::from("travel"))).is_none());
    assert_eq!(
        res.diff.changed_anchors.iter().map(ToString::to_string).collect::<Vec<_>>(),
        ["travel"]
    );
}

#[test]
fn refine_requires_a_plan() {
    let p = base();
    let r = initial(&p);
    let inf = IntentInference {
        source: vec![Source::Interaction(0)],
        why: "nothing".into(),
        plan: vec![],
    };
    let err = agents().refine(&r, &[inf], &serialize_context(&p).unwrap()).unwrap_err();
    assert!(matches!(err, AgentError::Precondition(_)));
}

#[test]
fn mock_is_deterministic_and_literal() {
    let p = base();
    let r = initial(&p);
    let ctx = serialize_context(&p).unwrap();
    let input = RefinementInput {
        report: r.clone(),
        inferences: vec![IntentInference {
            source: vec![Source::Interaction(0)],
            why: "renamed".into(),
            plan: vec![PlanStep::new(Target::body(&Id::from("suspects")), PlanAction::RenameHeading, "Rename.").focus("Risks")],
        }],
        layout: ctx.layout(),
        context: ctx,
    };
    let req = LlmRequest {
        schema: SchemaId::Refinement,
        messages: vec![Message::system("s"), Message::user(serde_json::to_string(&input).unwrap())],
        model: ModelConfig::default(),
    };
    let a = MockBackend.complete(&req).unwrap();
    let b = MockBackend.complete(&req).unwrap();
    assert_eq!(a, b);
    let out: ComponentsOutput = serde_json::from_str(&a.raw).unwrap();
    assert_eq!(out.components[1].heading, "Risks");
}

/// Replays canned replies in order, then repeats the last one.
struct Scripted {
    replies: Mutex<Vec<String>>,
    seen: Mutex<Vec<LlmRequest>>,
}

impl Scripted {
    fn new(replies: &[&str]) -> Self {
        Scripted {
            replies: Mutex::new(replies.iter().rev().map(|s| s.to_string()).collect()),
            seen: Mutex::new(Vec::new()),
        }
    }
}

impl LlmBackend for Scripted {
    fn complete(&self, request: &LlmRequest) -> Result<LlmResponse, BackendError> {
        self.seen.lock().unwrap().push(request.clone());
        let mut r = self.replies.lock().unwrap();
        let raw = if r.len() > 1 { r.pop().unwrap() } else { r[0].clone() };
        Ok(LlmResponse {
            raw,
            usage: Usage::default(),
        })
    }

    fn name(&self) -> &str {
        "scripted"
    }
}

fn scripted_agents(s: Arc<Scripted>) -> Agents {
    Agents::new(s, ModelConfig::default())
}

#[test]
fn invalid_output_is_retried_then_rejected() {
    let p = base();
    let good = serde_json::to_string(&ComponentsOutput {
        components: initial(&p).components,
    })
    .unwrap();
    let ctx = serialize_context(&p).unwrap();

    let s = Arc::new(Scripted::new(&["not json", r#"{"components": []}"#, &good]));
    assert!(scripted_agents(s.clone()).generate_initial(&ctx).is_ok());
    let seen = s.seen.lock().unwrap();
    assert_eq!(seen.len(), 3);
    assert!(seen[2].messages.last().unwrap().content.contains("rejected"));
    drop(seen);

    let s = Arc::new(Scripted::new(&["not json"]));
    match scripted_agents(s.clone()).generate_initial(&ctx) {
        Err(AgentError::Schema { attempts, .. }) => assert_eq!(attempts, SCHEMA_RETRIES + 1),
        other => panic!("expected schema error, got {other:?}"),
    }
    assert_eq!(s.seen.lock().unwrap().len(), 3);
}

#[test]
fn missing_paragraph_gets_one_corrective_prompt() {
    let p = base();
    let mut comps = initial(&p).components;
    comps.remove(2);
    let broken = serde_json::to_string(&ComponentsOutput { components: comps }).unwrap();
    let s = Arc::new(Scripted::new(&[&broken]));
    let err = scripted_agents(s.clone()).generate_initial(&serialize_context(&p).unwrap()).unwrap_err();
    match err {
        AgentError::Anchoring { violations } => {
            assert_eq!(violations[0].to_string(), "missing paragraph for travel")
        }
        other => panic!("expected anchoring error, got {other:?}"),
    }
    assert_eq!(s.seen.lock().unwrap().len(), 2);
}

#[test]
fn uncovered_interaction_is_a_coverage_error() {
    let p = base();
    let mut c = next(&p);
    c.notes.push(note("n1", "one", (0.0, 0.0)));
    c.notes.push(note("n2", "two", (10.0, 10.0)));
    let delta = perceive(&p, &c).unwrap();
    let reply = r#"{"inferences":[{"source":[0],"why":"w","plan":[{"target":"suspects","action":"insert","instruction":"add"}]}]}"#;
    let s = Arc::new(Scripted::new(&[reply]));
    let err = scripted_agents(s).infer_interactions(&delta, &c, &initial(&p)).unwrap_err();
    assert_eq!(err, AgentError::Coverage { missing: vec![1] });
}

#[test]
fn out_of_scope_edits_are_repaired() {
    let p = base();
    let r = initial(&p);
    let mut edited = r.components.clone();
    for c in &mut edited {
        c.sentences.push("Rephrased for style.".into());
    }
    let reply = serde_json::to_string(&ComponentsOutput { components: edited }).unwrap();
    let s = Arc::new(Scripted::new(&[&reply]));
    let inf = IntentInference {
        source: vec![Source::Interaction(0)],
        why: "w".into(),
        plan: vec![PlanStep::new(Target::body(&Id::from("travel")), PlanAction::Insert, "add").focus("x")],
    };
    let res = scripted_agents(s).refine(&r, &[inf], &serialize_context(&p).unwrap()).unwrap();
    assert_eq!(res.scope_repairs.len(), 3);
    let changed: Vec<String> = res.diff.changed_anchors.iter().map(ToString::to_string).collect();
    assert_eq!(changed, ["travel"]);
}

#[test]
fn counting_backend_counts() {
    let counting = Arc::new(CountingBackend::new(MockBackend));
    let a = Agents::new(counting.clone(), ModelConfig::default());
    a.generate_initial(&serialize_context(&base()).unwrap()).unwrap();
    assert_eq!(counting.calls(), 1);
}
