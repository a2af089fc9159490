//! Generation and embedding contracts.
//!
//! A [`GenerationProvider`] turns a rendered prompt into raw text. The
//! [`Backend`] wraps a provider with retries, the content-addressed
//! [`ResponseCache`] and the append-only [`RunStore`], then parses the reply
//! with [`parse_structured_output`].

mod cache;
mod embed;
mod mock;
mod openai;
mod store;
mod structured;

use std::sync::Arc;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::clock::{Clock, SystemClock};
use crate::corpus::RecordId;
use crate::digest::sha256_parts;
use crate::prompt_kit::{BudgetCheck, PromptBundle};

pub use cache::ResponseCache;
pub use embed::{cosine, EmbedError, Embedder, HashedBagOfWords};
pub use mock::{EchoProvider, Script, ScriptedProvider};
pub use openai::{OpenAiEmbedder, OpenAiProvider, DEFAULT_MODEL};
pub use store::{RunStore, StoreEntry};
pub use structured::{
    count_sentences, parse_structured_output, ParseError, StructuredOutput, Task,
    DEFAULT_REFUSAL_PHRASES,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParamError {
    #[error("{name} = {value} is outside {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("window must be positive")]
    ZeroWindow,
    #[error("model name is empty")]
    EmptyModel,
}

/// Sampling parameters. Ranges are enforced by [`GenerationParams::validate`],
/// which every constructor and the backend call.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerationParams {
    pub temperature: f64,
    pub top_p: f64,
    pub frequency_penalty: f64,
    pub presence_penalty: f64,
    pub window: usize,
    pub model_name: String,
}

impl Default for GenerationParams {
    fn default() -> Self {
        GenerationParams {
            temperature: 0.3,
            top_p: 1.0,
            frequency_penalty: 0.0,
            presence_penalty: 0.0,
            window: 16384,
            model_name: DEFAULT_MODEL.to_string(),
        }
    }
}

impl GenerationParams {
    pub fn new(
        temperature: f64,
        top_p: f64,
        frequency_penalty: f64,
        presence_penalty: f64,
        window: usize,
        model_name: impl Into<String>,
    ) -> Result<Self, ParamError> {
        let p = GenerationParams {
            temperature,
            top_p,
            frequency_penalty,
            presence_penalty,
            window,
            model_name: model_name.into(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_temperature(self, temperature: f64) -> Result<Self, ParamError> {
        let p = GenerationParams { temperature, ..self };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        let check = |name, value: f64, ok: bool, range| {
            if ok && value.is_finite() {
                Ok(())
            } else {
                Err(ParamError::OutOfRange { name, value, range })
            }
        };
        let t = self.temperature;
        check("temperature", t, (0.0..=2.0).contains(&t), "[0, 2]")?;
        let p = self.top_p;
        check("top_p", p, p > 0.0 && p <= 1.0, "(0, 1]")?;
        let f = self.frequency_penalty;
        check("frequency_penalty", f, (-2.0..=2.0).contains(&f), "[-2, 2]")?;
        let q = self.presence_penalty;
        check("presence_penalty", q, (-2.0..=2.0).contains(&q), "[-2, 2]")?;
        if self.window == 0 {
            return Err(ParamError::ZeroWindow);
        }
        if self.model_name.trim().is_empty() {
            return Err(ParamError::EmptyModel);
        }
        Ok(())
    }

    pub fn digest(&self) -> String {
        crate::digest::sha256_hex(serde_json::to_string(self).expect("params serialize"))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProviderMeta {
    pub request_id: Option<String>,
    pub model: Option<String>,
    pub prompt_tokens: Option<u64>,
    pub completion_tokens: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelResponse {
    pub raw_text: String,
    pub parsed: Option<StructuredOutput>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parse_error: Option<String>,
    pub provider_meta: ProviderMeta,
}

/// What a provider returns before parsing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProviderReply {
    pub text: String,
    pub meta: ProviderMeta,
}

/// Everything a provider may key on.
#[derive(Debug, Clone, Copy)]
pub struct GenerationRequest<'a> {
    pub prompt: &'a str,
    pub prompt_digest: &'a str,
    pub params: &'a GenerationParams,
    pub record_id: Option<&'a RecordId>,
    pub task: Task,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProviderError {
    #[error("transient provider failure: {0}")]
    Transient(String),
    #[error("provider authentication failed: {0}")]
    Auth(String),
    #[error("provider error: {0}")]
    Fatal(String),
}

pub trait GenerationProvider: Send + Sync {
    fn name(&self) -> &str;
    fn generate(&self, request: &GenerationRequest<'_>) -> Result<ProviderReply, ProviderError>;
}

#[derive(Debug, thiserror::Error)]
pub enum BackendError {
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error("budget violation: over by {over} estimated tokens")]
    Budget { over: usize },
    #[error(transparent)]
    Provider(ProviderError),
    #[error("gave up after {attempts} attempts: {last}")]
    RetriesExhausted { attempts: u32, last: String },
    #[error("cache error: {0}")]
    Cache(String),
    #[error("run store error: {0}")]
    Store(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_delay_ms: u64,
    pub timeout_secs: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_retries: 3,
            base_delay_ms: 500,
            timeout_secs: 60,
        }
    }
}

impl RetryPolicy {
    pub fn no_delay(self) -> Self {
        RetryPolicy {
            base_delay_ms: 0,
            ..self
        }
    }
}

/// Provider plus cache, run store and retry policy.
pub struct Backend {
    provider: Arc<dyn GenerationProvider>,
    cache: Option<ResponseCache>,
    store: Option<RunStore>,
    retry: RetryPolicy,
    refusals: Vec<String>,
    clock: Arc<dyn Clock>,
}

impl Backend {
    pub fn new(provider: Arc<dyn GenerationProvider>) -> Self {
        Backend {
            provider,
            cache: None,
            store: None,
            retry: RetryPolicy::default(),
            refusals: DEFAULT_REFUSAL_PHRASES.iter().map(|s| s.to_string()).collect(),
            clock: Arc::new(SystemClock),
        }
    }

    pub fn with_cache(mut self, cache: ResponseCache) -> Self {
        self.cache = Some(cache);
        self
    }

    pub fn with_store(mut self, store: RunStore) -> Self {
        self.store = Some(store);
        self
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn with_refusal_phrases(mut self, phrases: Vec<String>) -> Self {
        self.refusals = phrases;
        self
    }

    pub fn with_clock(mut self, clock: Arc<dyn Clock>) -> Self {
        self.clock = clock;
        self
    }

    pub fn provider_name(&self) -> &str {
        self.provider.name()
    }

    pub fn store(&self) -> Option<&RunStore> {
        self.store.as_ref()
    }

    /// Sends one bundle to the provider. Cached replies are returned without
    /// a provider call; every call is appended to the run store.
    pub fn complete(
        &self,
        bundle: &PromptBundle,
        params: &GenerationParams,
        record_id: Option<&RecordId>,
        task: Task,
    ) -> Result<ModelResponse, BackendError> {
        params.validate()?;
        // the output reserve was enforced at assembly; the window may differ here
        if let BudgetCheck::Violation { over } = bundle.check_budget(0, params.window) {
            return Err(BackendError::Budget { over });
        }
        let prompt_digest = bundle.digest();
        let params_digest = params.digest();
        let request = GenerationRequest {
            prompt: &bundle.rendered,
            prompt_digest: &prompt_digest,
            params,
            record_id,
            task,
        };

        let (reply, cached) = match &self.cache {
            Some(cache) => {
                let key = sha256_parts([bundle.rendered.as_str(), &params_digest]);
                cache.get_or_insert_with(&key, || self.call_with_retry(&request))?
            }
            None => (self.call_with_retry(&request)?, false),
        };

        let (parsed, parse_error) = match parse_structured_output(&reply.text, task, &self.refusals) {
            Ok(p) => (Some(p), None),
            Err(e) => (None, Some(e.to_string())),
        };
        let response = ModelResponse {
            raw_text: reply.text,
            parsed,
            parse_error,
            provider_meta: reply.meta,
        };
        if let Some(store) = &self.store {
            store.append(&StoreEntry {
                timestamp: self.clock.stamp(),
                record_id: record_id.cloned(),
                task,
                provider: self.provider.name().to_string(),
                prompt_digest,
                params_digest,
                cached,
                response: response.clone(),
            })?;
        }
        Ok(response)
    }

    fn call_with_retry(&self, request: &GenerationRequest<'_>) -> Result<ProviderReply, BackendError> {
        let mut attempt = 0u32;
        loop {
            match self.provider.generate(request) {
                Ok(reply) => return Ok(reply),
                Err(ProviderError::Transient(msg)) => {
                    if attempt >= self.retry.max_retries {
                        return Err(BackendError::RetriesExhausted {
                            attempts: attempt + 1,
                            last: msg,
                        });
                    }
                    let delay = self.retry.base_delay_ms.saturating_mul(1 << attempt.min(16));
                    log::warn!("transient failure ({msg}), retrying in {delay} ms");
                    if delay > 0 {
                        thread::sleep(Duration::from_millis(delay));
                    }
                    attempt += 1;
                }
                Err(e) => return Err(BackendError::Provider(e)),
            }
        }
    }
}
