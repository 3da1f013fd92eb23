use super::backend::SchemaId;

const GENERATION: &str = include_str!("../../prompts/generation.txt");
const SYSTEM_INFERENCE: &str = include_str!("../../prompts/system_inference.txt");
const INTERACTION_INFERENCE: &str = include_str!("../../prompts/interaction_inference.txt");
const REFINEMENT: &str = include_str!("../../prompts/refinement.txt");

/// System prompt for a schema. The first line of each asset names it and its version.
pub fn system_prompt(schema: SchemaId) -> &'static str {
    match schema {
        SchemaId::Generation => GENERATION,
        SchemaId::SystemInference => SYSTEM_INFERENCE,
        SchemaId::InteractionInference => INTERACTION_INFERENCE,
        SchemaId::Refinement => REFINEMENT,
    }
}

/// `"<schema> v<n>"` as declared on the asset's first line.
pub fn prompt_version(schema: SchemaId) -> &'static str {
    system_prompt(schema)
        .lines()
        .next()
        .and_then(|l| l.strip_prefix("prompt: "))
        .unwrap_or("unversioned")
}
