//! Language-model calls: prompt templates, response parsing and providers.
//!
//! Every call is a single user message. The prompt's first line names its
//! [`PromptKind`], which the scripted provider uses to pick the recorded reply.

mod http;
mod parse;
mod prompt;
mod provider;

use thiserror::Error;

pub use http::HttpProvider;
pub use parse::{
    canonical_label, parse_generation, salvage_generation, ParseFailure, UNCATEGORIZED,
};
pub use prompt::{
    render_prompt, render_prompt_with_budget, PromptContext, PromptKind, DEFAULT_PROMPT_BUDGET,
};
pub use provider::{
    build_provider, format_generation, CompletionRequest, Provider, ProviderConfig, ProviderError,
    ProviderKind, RecordingProvider, ScriptedProvider, Transcript, TranscriptEntry, API_KEY_ENV,
    BASE_URL_ENV,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LlmError {
    #[error("missing prompt context: {0}")]
    MissingContext(String),
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error(transparent)]
    Parse(#[from] ParseFailure),
}

/// A raw reply plus the fields relevant to its prompt kind.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LlmResponse {
    pub raw: String,
    pub thought: Option<String>,
    pub code: Option<String>,
    pub category: Option<String>,
}

impl LlmResponse {
    pub fn parse(kind: PromptKind, raw: String) -> Result<Self, ParseFailure> {
        if kind.produces_program() {
            let (thought, code) = parse_generation(&raw)?;
            Ok(Self {
                raw,
                thought: Some(thought),
                code: Some(code),
                category: None,
            })
        } else {
            Ok(Self {
                category: Some(canonical_label(&raw)),
                raw,
                thought: None,
                code: None,
            })
        }
    }
}

/// Renders the prompt for `kind` and returns the provider's raw reply.
pub fn complete_prompt(
    provider: &dyn Provider,
    config: &ProviderConfig,
    kind: PromptKind,
    ctx: &PromptContext,
) -> Result<String, LlmError> {
    let prompt = render_prompt_with_budget(kind, ctx, config.max_prompt_bytes)?;
    let request = CompletionRequest {
        kind,
        prompt: &prompt,
        seed: ctx.seed,
        temperature: config.temperature_for(kind),
    };
    Ok(provider.complete(&request)?)
}

/// Asks for the category of the parent in `ctx` and canonicalizes the reply.
pub fn induce_category(
    provider: &dyn Provider,
    config: &ProviderConfig,
    ctx: &PromptContext,
) -> Result<String, LlmError> {
    let raw = complete_prompt(provider, config, PromptKind::CategoryInduction, ctx)?;
    Ok(canonical_label(&raw))
}

/// Asks for a repaired version of the failing parent in `ctx`.
pub fn reflect(
    provider: &dyn Provider,
    config: &ProviderConfig,
    ctx: &PromptContext,
) -> Result<(String, String), LlmError> {
    let raw = complete_prompt(provider, config, PromptKind::Reflection, ctx)?;
    Ok(parse_generation(&raw)?)
}
