//! Language-model proposals: prompt construction, providers and caching.
//!
//! Questions are generated with [`build_generation_prompt`] and translated
//! into programs with [`build_translation_prompt`]. Any [`ChatProvider`]
//! serves the completions: [`HttpProvider`] for a live OpenAI-compatible
//! endpoint, [`ReplayProvider`] for recorded fixtures, wrapped in a
//! [`CachingProvider`] to avoid repeat calls.

mod http;
mod prompt;
mod provider;

use serde::Serialize;
use thiserror::Error;

use crate::dsl::{check_question, parse_program, Expr};

pub use http::{HttpProvider, HttpSpec};
pub use prompt::{
    build_generation_prompt, build_translation_prompt, encode_prepended, game_instructions, render_for_prompt,
    sample_translation_examples, BoardFormat, ChatMessage, PromptBundle, PromptKind, PromptMode, QAExample, Role,
    ShotBoard, EXAMPLE_BOARDS, QUESTIONS_PER_EXAMPLE, TRANSLATION_EXAMPLES,
};
pub use provider::{
    CacheEntry, CachingProvider, ChatProvider, CompletionRequest, DecodingParams, ProviderInfo, Purpose, ReplayEntry,
    ReplayProvider, RequestContext, RoleEncoding,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LlmError {
    #[error("prompt: {0}")]
    Prompt(String),
    #[error("config: {0}")]
    Config(String),
    #[error("replay: {0}")]
    Replay(String),
    #[error("cache: {0}")]
    Cache(String),
    #[error("transport: {0}")]
    Transport(String),
    #[error("HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("malformed response: {0}")]
    Malformed(String),
}

/// First non-empty line of a completion, trimmed.
fn first_line(s: &str) -> &str {
    s.lines().map(str::trim).find(|l| !l.is_empty()).unwrap_or("")
}

/// Samples `n` questions for the prompt. Each completion is reduced to its
/// first non-empty line; an empty completion yields an empty question.
pub fn propose_questions<P: ChatProvider + ?Sized>(
    provider: &P,
    bundle: &PromptBundle,
    params: &DecodingParams,
    n: usize,
    context: RequestContext,
) -> Result<Vec<String>, LlmError> {
    if n == 0 {
        return Ok(Vec::new());
    }
    let req = CompletionRequest { messages: bundle.messages.clone(), params: params.clone(), n, context };
    let got = provider.complete(&req)?;
    if got.len() != n {
        return Err(LlmError::Malformed(format!("asked for {n} completions, got {}", got.len())));
    }
    Ok(got.iter().map(|c| first_line(c).to_string()).collect())
}

/// Outcome of translating one question.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Translation {
    /// The first completion that parsed and typechecked as a question.
    pub program: Option<Expr>,
    /// Every completion as received.
    pub raw: Vec<String>,
    /// Why the last rejected completion failed, when none succeeded.
    pub error: Option<String>,
}

/// Parses a completion as a question program: first non-empty line, with
/// surrounding backticks removed.
pub fn parse_completion(completion: &str) -> Result<Expr, String> {
    let line = first_line(completion.trim().trim_matches('`'));
    let e = parse_program(line).map_err(|e| e.to_string())?;
    check_question(&e).map_err(|e| e.to_string())?;
    Ok(e)
}

/// Asks for `samples` translations of the bundle's question and keeps the
/// first usable one.
pub fn translate_question<P: ChatProvider + ?Sized>(
    provider: &P,
    bundle: &PromptBundle,
    params: &DecodingParams,
    samples: usize,
    context: RequestContext,
) -> Result<Translation, LlmError> {
    let req =
        CompletionRequest { messages: bundle.messages.clone(), params: params.clone(), n: samples.max(1), context };
    let raw = provider.complete(&req)?;
    let mut error = None;
    for c in &raw {
        match parse_completion(c) {
            Ok(program) => return Ok(Translation { program: Some(program), raw, error: None }),
            Err(e) => error = Some(e),
        }
    }
    Ok(Translation { program: None, raw, error })
}
