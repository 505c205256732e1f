use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::http::HttpProvider;
use super::PromptKind;

pub const API_KEY_ENV: &str = "CDEOH_API_KEY";
pub const BASE_URL_ENV: &str = "CDEOH_BASE_URL";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProviderError {
    #[error("transcript has no response for {kind} call #{index}")]
    TranscriptMiss { kind: PromptKind, index: u64 },
    #[error("network error: {0}")]
    Network(String),
    #[error("HTTP status {status}: {body}")]
    HttpStatus { status: u16, body: String },
    #[error("rate limited; gave up after {attempts} attempts")]
    RateLimitedExhausted { attempts: u32 },
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error("invalid provider configuration: {0}")]
    Config(String),
}

/// One text-completion call.
#[derive(Debug, Clone, Copy)]
pub struct CompletionRequest<'a> {
    pub kind: PromptKind,
    pub prompt: &'a str,
    pub seed: u64,
    pub temperature: f64,
}

/// A text-generation backend. Implementations must tolerate concurrent calls.
pub trait Provider: Send + Sync {
    fn complete(&self, request: &CompletionRequest<'_>) -> Result<String, ProviderError>;
}

impl<P: Provider + ?Sized> Provider for &P {
    fn complete(&self, request: &CompletionRequest<'_>) -> Result<String, ProviderError> {
        (**self).complete(request)
    }
}

impl<P: Provider + ?Sized> Provider for Box<P> {
    fn complete(&self, request: &CompletionRequest<'_>) -> Result<String, ProviderError> {
        (**self).complete(request)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    Scripted,
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProviderConfig {
    pub provider: ProviderKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_url: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    /// Sampling temperature for generation prompts; category induction and
    /// reflection always run at 0.
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transcript_path: Option<PathBuf>,
    #[serde(default = "default_max_in_flight")]
    pub max_in_flight: usize,
    #[serde(default = "default_backoff_ms")]
    pub backoff_ms: u64,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
    #[serde(default = "default_max_prompt_bytes")]
    pub max_prompt_bytes: usize,
}

fn default_temperature() -> f64 {
    1.0
}
fn default_max_retries() -> u32 {
    3
}
fn default_max_in_flight() -> usize {
    4
}
fn default_backoff_ms() -> u64 {
    500
}
fn default_timeout_secs() -> u64 {
    120
}
fn default_max_prompt_bytes() -> usize {
    super::DEFAULT_PROMPT_BUDGET
}

impl ProviderConfig {
    pub fn scripted(transcript_path: impl Into<PathBuf>) -> Self {
        Self {
            provider: ProviderKind::Scripted,
            base_url: None,
            model: None,
            temperature: default_temperature(),
            max_retries: default_max_retries(),
            transcript_path: Some(transcript_path.into()),
            max_in_flight: default_max_in_flight(),
            backoff_ms: default_backoff_ms(),
            timeout_secs: default_timeout_secs(),
            max_prompt_bytes: default_max_prompt_bytes(),
        }
    }

    pub fn http(base_url: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            provider: ProviderKind::Http,
            base_url: Some(base_url.into()),
            model: Some(model.into()),
            transcript_path: None,
            ..Self::scripted("")
        }
    }

    /// Base URL after applying the `CDEOH_BASE_URL` override.
    pub fn effective_base_url(&self) -> Option<String> {
        std::env::var(BASE_URL_ENV)
            .ok()
            .filter(|s| !s.is_empty())
            .or_else(|| self.base_url.clone())
    }

    /// Checks the configuration without touching the network or filesystem.
    pub fn validate(&self) -> Result<(), ProviderError> {
        let bad = |m: &str| Err(ProviderError::Config(m.to_string()));
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return bad("temperature must be a non-negative number");
        }
        if self.max_in_flight == 0 {
            return bad("max_in_flight must be at least 1");
        }
        if self.max_prompt_bytes == 0 {
            return bad("max_prompt_bytes must be positive");
        }
        match self.provider {
            ProviderKind::Scripted => {
                if self
                    .transcript_path
                    .as_ref()
                    .is_none_or(|p| p.as_os_str().is_empty())
                {
                    return bad("the scripted provider needs transcript_path");
                }
            }
            ProviderKind::Http => {
                if self.effective_base_url().is_none() {
                    return bad("the http provider needs base_url (or CDEOH_BASE_URL)");
                }
                if self.model.as_deref().is_none_or(str::is_empty) {
                    return bad("the http provider needs model");
                }
                if std::env::var(API_KEY_ENV).map_or(true, |k| k.is_empty()) {
                    return bad("the http provider needs the CDEOH_API_KEY environment variable");
                }
            }
        }
        Ok(())
    }

    /// Temperature used for a prompt of `kind`.
    pub fn temperature_for(&self, kind: PromptKind) -> f64 {
        match kind {
            PromptKind::CategoryInduction | PromptKind::Reflection => 0.0,
            _ => self.temperature,
        }
    }
}

/// Builds the provider described by `config`. Relative transcript paths
/// resolve against `base_dir`.
pub fn build_provider(
    config: &ProviderConfig,
    base_dir: &Path,
) -> Result<Box<dyn Provider>, ProviderError> {
    config.validate()?;
    match config.provider {
        ProviderKind::Scripted => {
            let rel = config.transcript_path.as_ref().expect("validated");
            let path = if rel.is_absolute() {
                rel.clone()
            } else {
                base_dir.join(rel)
            };
            Ok(Box::new(ScriptedProvider::from_file(&path)?))
        }
        ProviderKind::Http => {
            let key = std::env::var(API_KEY_ENV).unwrap_or_default();
            Ok(Box::new(HttpProvider::new(config, key)?))
        }
    }
}

/// One transcript line: `{"kind": str, "index": int, "response": str}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TranscriptEntry {
    pub kind: PromptKind,
    pub index: u64,
    pub response: String,
}

/// A recorded set of responses keyed by `(kind, per-kind call index)`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Transcript {
    entries: Vec<TranscriptEntry>,
}

impl Transcript {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a response for the next unused index of `kind`.
    pub fn push(&mut self, kind: PromptKind, response: impl Into<String>) -> &mut Self {
        let index = self.entries.iter().filter(|e| e.kind == kind).count() as u64;
        self.entries.push(TranscriptEntry {
            kind,
            index,
            response: response.into(),
        });
        self
    }

    /// Appends a generation response in the expected `{thought}` + fence format.
    pub fn push_program(&mut self, kind: PromptKind, thought: &str, code: &str) -> &mut Self {
        self.push(kind, format_generation(thought, code))
    }

    pub fn entries(&self) -> &[TranscriptEntry] {
        &self.entries
    }

    pub fn count(&self, kind: PromptKind) -> usize {
        self.entries.iter().filter(|e| e.kind == kind).count()
    }

    pub fn parse_jsonl(text: &str) -> Result<Self, ProviderError> {
        let mut entries = Vec::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let entry: TranscriptEntry = serde_json::from_str(line)
                .map_err(|e| ProviderError::Config(format!("transcript line {}: {e}", n + 1)))?;
            entries.push(entry);
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self, ProviderError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ProviderError::Config(format!("transcript {}: {e}", path.display())))?;
        Self::parse_jsonl(&text)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&serde_json::to_string(e).expect("serializable"));
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_jsonl().as_bytes())
    }
}

/// Renders a response in the `{thought}` + fenced-code format.
pub fn format_generation(thought: &str, code: &str) -> String {
    format!("{{{thought}}}\n```\n{code}\n```")
}

/// Replays a [`Transcript`]. The `n`-th call of each prompt kind (read from
/// the prompt header) receives the entry with `index == n`.
#[derive(Debug)]
pub struct ScriptedProvider {
    responses: HashMap<(PromptKind, u64), String>,
    counters: Mutex<HashMap<PromptKind, u64>>,
}

impl ScriptedProvider {
    pub fn new(transcript: &Transcript) -> Self {
        let responses = transcript
            .entries
            .iter()
            .map(|e| ((e.kind, e.index), e.response.clone()))
            .collect();
        Self {
            responses,
            counters: Mutex::new(HashMap::new()),
        }
    }

    pub fn from_file(path: &Path) -> Result<Self, ProviderError> {
        Ok(Self::new(&Transcript::load(path)?))
    }

    /// Number of calls served (or missed) so far for `kind`.
    pub fn calls(&self, kind: PromptKind) -> u64 {
        *self.counters.lock().unwrap().get(&kind).unwrap_or(&0)
    }
}

impl Provider for ScriptedProvider {
    fn complete(&self, request: &CompletionRequest<'_>) -> Result<String, ProviderError> {
        let kind = PromptKind::from_prompt_header(request.prompt).unwrap_or(request.kind);
        let index = {
            let mut counters = self.counters.lock().unwrap();
            let c = counters.entry(kind).or_insert(0);
            let i = *c;
            *c += 1;
            i
        };
        self.responses
            .get(&(kind, index))
            .cloned()
            .ok_or(ProviderError::TranscriptMiss { kind, index })
    }
}

/// Wraps a provider and records every successful reply as a transcript, so a
/// live run can be replayed with [`ScriptedProvider`].
pub struct RecordingProvider<P> {
    inner: P,
    log: Mutex<(Transcript, HashMap<PromptKind, u64>)>,
}

impl<P: Provider> RecordingProvider<P> {
    pub fn new(inner: P) -> Self {
        Self {
            inner,
            log: Mutex::new((Transcript::new(), HashMap::new())),
        }
    }

    pub fn transcript(&self) -> Transcript {
        self.log.lock().unwrap().0.clone()
    }
}

impl<P: Provider> Provider for RecordingProvider<P> {
    fn complete(&self, request: &CompletionRequest<'_>) -> Result<String, ProviderError> {
        let kind = PromptKind::from_prompt_header(request.prompt).unwrap_or(request.kind);
        // Holding the lock across the call keeps indices in call order. Failed
        // calls still use up an index so that replay sees the same gaps.
        let mut log = self.log.lock().unwrap();
        let (transcript, counters) = &mut *log;
        let counter = counters.entry(kind).or_insert(0);
        let index = *counter;
        *counter += 1;
        let out = self.inner.complete(request)?;
        transcript.entries.push(TranscriptEntry {
            kind,
            index,
            response: out.clone(),
        });
        Ok(out)
    }
}
