use std::env;
use std::time::Duration;

use serde_json::{json, Value};

use super::embed::{EmbedError, Embedder};
use super::{GenerationProvider, GenerationRequest, ProviderError, ProviderMeta, ProviderReply};

pub const DEFAULT_MODEL: &str = "gpt-3.5-turbo-16k-0613";
pub const DEFAULT_BASE_URL: &str = "https://api.openai.com/v1";
pub const DEFAULT_EMBEDDING_MODEL: &str = "text-embedding-ada-002";

const TOOL_NAME: &str = "record_analysis";

fn agent(timeout: Duration) -> ureq::Agent {
    ureq::Agent::config_builder()
        .timeout_global(Some(timeout))
        .http_status_as_error(false)
        .build()
        .into()
}

fn env_or(name: &str, default: &str) -> String {
    env::var(name)
        .ok()
        .filter(|v| !v.trim().is_empty())
        .unwrap_or_else(|| default.to_string())
}

fn api_key() -> Result<String, ProviderError> {
    env::var("OPENAI_API_KEY")
        .ok()
        .filter(|k| !k.trim().is_empty())
        .ok_or_else(|| ProviderError::Auth("OPENAI_API_KEY is not set".into()))
}

fn post(agent: &ureq::Agent, url: &str, key: &str, body: &Value) -> Result<Value, ProviderError> {
    let mut resp = agent
        .post(url)
        .header("Authorization", &format!("Bearer {key}"))
        .send_json(body)
        .map_err(|e| ProviderError::Transient(e.to_string()))?;
    let status = resp.status().as_u16();
    let text = resp
        .body_mut()
        .read_to_string()
        .map_err(|e| ProviderError::Transient(e.to_string()))?;
    match status {
        200..=299 => serde_json::from_str(&text)
            .map_err(|e| ProviderError::Fatal(format!("undecodable response: {e}"))),
        401 | 403 => Err(ProviderError::Auth(format!("HTTP {status}"))),
        408 | 409 | 429 | 500..=599 => Err(ProviderError::Transient(format!("HTTP {status}"))),
        _ => Err(ProviderError::Fatal(format!("HTTP {status}: {}", truncate(&text, 300)))),
    }
}

fn truncate(s: &str, n: usize) -> &str {
    match s.char_indices().nth(n) {
        Some((i, _)) => &s[..i],
        None => s,
    }
}

/// Chat-completion client for OpenAI-compatible endpoints. The reply is
/// requested as a forced function call whose arguments hold the JSON
/// analysis.
#[derive(Debug, Clone)]
pub struct OpenAiProvider {
    base_url: String,
    key: String,
    agent: ureq::Agent,
}

impl OpenAiProvider {
    /// Reads `OPENAI_API_KEY` and `OPENAI_BASE_URL`.
    pub fn from_env(timeout: Duration) -> Result<Self, ProviderError> {
        Ok(OpenAiProvider {
            base_url: env_or("OPENAI_BASE_URL", DEFAULT_BASE_URL),
            key: api_key()?,
            agent: agent(timeout),
        })
    }

    /// Model named by `OPENAI_MODEL`, if set.
    pub fn model_from_env() -> Option<String> {
        env::var("OPENAI_MODEL").ok().filter(|m| !m.trim().is_empty())
    }

    fn request_body(req: &GenerationRequest<'_>) -> Value {
        let p = req.params;
        json!({
            "model": p.model_name,
            "messages": [{"role": "user", "content": req.prompt}],
            "temperature": p.temperature,
            "top_p": p.top_p,
            "frequency_penalty": p.frequency_penalty,
            "presence_penalty": p.presence_penalty,
            "tools": [{
                "type": "function",
                "function": {
                    "name": TOOL_NAME,
                    "description": "Record the structured analysis of the sentence.",
                    "parameters": {"type": "object", "additionalProperties": true}
                }
            }],
            "tool_choice": {"type": "function", "function": {"name": TOOL_NAME}}
        })
    }
}

/// Pulls the reply text out of a chat-completion body: tool-call arguments
/// when present, message content otherwise.
pub(crate) fn reply_from_body(body: &Value) -> Result<ProviderReply, ProviderError> {
    let message = &body["choices"][0]["message"];
    let text = message["tool_calls"][0]["function"]["arguments"]
        .as_str()
        .or_else(|| message["content"].as_str())
        .ok_or_else(|| ProviderError::Fatal("response has no message content".into()))?;
    let usage = &body["usage"];
    Ok(ProviderReply {
        text: text.to_string(),
        meta: ProviderMeta {
            request_id: body["id"].as_str().map(str::to_string),
            model: body["model"].as_str().map(str::to_string),
            prompt_tokens: usage["prompt_tokens"].as_u64(),
            completion_tokens: usage["completion_tokens"].as_u64(),
        },
    })
}

impl GenerationProvider for OpenAiProvider {
    fn name(&self) -> &str {
        "openai"
    }

    fn generate(&self, req: &GenerationRequest<'_>) -> Result<ProviderReply, ProviderError> {
        let url = format!("{}/chat/completions", self.base_url.trim_end_matches('/'));
        let body = post(&self.agent, &url, &self.key, &Self::request_body(req))?;
        reply_from_body(&body)
    }
}

/// Embeddings client for OpenAI-compatible endpoints.
#[derive(Debug, Clone)]
pub struct OpenAiEmbedder {
    base_url: String,
    key: String,
    model: String,
    agent: ureq::Agent,
}

impl OpenAiEmbedder {
    /// Reads `OPENAI_API_KEY`, `OPENAI_BASE_URL` and `OPENAI_EMBEDDING_MODEL`.
    pub fn from_env(timeout: Duration) -> Result<Self, EmbedError> {
        Ok(OpenAiEmbedder {
            base_url: env_or("OPENAI_BASE_URL", DEFAULT_BASE_URL),
            key: api_key().map_err(|e| EmbedError::Provider(e.to_string()))?,
            model: env_or("OPENAI_EMBEDDING_MODEL", DEFAULT_EMBEDDING_MODEL),
            agent: agent(timeout),
        })
    }
}

impl Embedder for OpenAiEmbedder {
    fn embed(&self, text: &str) -> Result<Vec<f64>, EmbedError> {
        if text.trim().is_empty() {
            return Err(EmbedError::EmptyText);
        }
        let url = format!("{}/embeddings", self.base_url.trim_end_matches('/'));
        let body = post(&self.agent, &url, &self.key, &json!({"model": self.model, "input": text}))
            .map_err(|e| EmbedError::Provider(e.to_string()))?;
        let v: Vec<f64> = body["data"][0]["embedding"]
            .as_array()
            .ok_or_else(|| EmbedError::Provider("response has no embedding".into()))?
            .iter()
            .filter_map(Value::as_f64)
            .collect();
        super::embed::normalize(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tool_call_arguments_win() {
        let body = json!({
            "id": "chatcmpl-1",
            "model": "m",
            "choices": [{"message": {"content": null, "tool_calls": [{"function": {"name": TOOL_NAME, "arguments": "{\"verdict\":\"AF\"}"}}]}}],
            "usage": {"prompt_tokens": 10, "completion_tokens": 5}
        });
        let r = reply_from_body(&body).unwrap();
        assert_eq!(r.text, "{\"verdict\":\"AF\"}");
        assert_eq!(r.meta.prompt_tokens, Some(10));
        assert_eq!(r.meta.request_id.as_deref(), Some("chatcmpl-1"));
    }

    #[test]
    fn plain_content_fallback() {
        let body = json!({"choices": [{"message": {"content": "hello"}}]});
        assert_eq!(reply_from_body(&body).unwrap().text, "hello");
        assert!(reply_from_body(&json!({})).is_err());
    }
}
