use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{GenerationProvider, GenerationRequest, ProviderError, ProviderMeta, ProviderReply};

/// Canned replies. Lookup order: prompt digest, `task:record`, `record`,
/// then `default`. Object values are sent as their JSON text.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Script {
    pub by_digest: BTreeMap<String, Value>,
    pub by_record: BTreeMap<String, Value>,
    pub default: Option<Value>,
}

impl Script {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn record(mut self, key: impl Into<String>, reply: Value) -> Self {
        self.by_record.insert(key.into(), reply);
        self
    }

    pub fn digest(mut self, digest: impl Into<String>, reply: Value) -> Self {
        self.by_digest.insert(digest.into(), reply);
        self
    }

    pub fn fallback(mut self, reply: Value) -> Self {
        self.default = Some(reply);
        self
    }
}

fn as_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Deterministic offline provider driven by a [`Script`].
#[derive(Debug, Default)]
pub struct ScriptedProvider {
    script: Script,
    calls: AtomicUsize,
}

impl ScriptedProvider {
    pub fn new(script: Script) -> Self {
        ScriptedProvider {
            script,
            calls: AtomicUsize::new(0),
        }
    }

    /// Number of `generate` calls so far.
    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl GenerationProvider for ScriptedProvider {
    fn name(&self) -> &str {
        "scripted"
    }

    fn generate(&self, req: &GenerationRequest<'_>) -> Result<ProviderReply, ProviderError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let s = &self.script;
        let hit = s.by_digest.get(req.prompt_digest).or_else(|| {
            let id = req.record_id?.as_str();
            s.by_record
                .get(&format!("{}:{id}", req.task))
                .or_else(|| s.by_record.get(id))
        });
        let reply = hit.or(s.default.as_ref()).ok_or_else(|| {
            ProviderError::Fatal(format!(
                "no scripted reply for {} record {:?} digest {}",
                req.task,
                req.record_id.map(|r| r.as_str()),
                req.prompt_digest
            ))
        })?;
        Ok(ProviderReply {
            text: as_text(reply),
            meta: ProviderMeta {
                request_id: Some(format!("scripted-{}", &req.prompt_digest[..12.min(req.prompt_digest.len())])),
                model: Some(req.params.model_name.clone()),
                prompt_tokens: None,
                completion_tokens: None,
            },
        })
    }
}

/// Replies with an analysis whose every text field is the prompt itself.
/// Whatever the prompt leaks ends up in the parsed result, which makes
/// isolation checks end to end.
#[derive(Debug, Default)]
pub struct EchoProvider;

impl GenerationProvider for EchoProvider {
    fn name(&self) -> &str {
        "echo"
    }

    fn generate(&self, req: &GenerationRequest<'_>) -> Result<ProviderReply, ProviderError> {
        let p = req.prompt;
        let payload = serde_json::json!({
            "verdict": "AF",
            "correlate": p,
            "remnant": p,
            "correlate_more_likely": true,
            "likelihood_rationale": p,
            "sentence_type": "Undefined",
            "logic_category": "Undefined",
            "property1": p,
            "property2": p,
            "short_explanation": p,
            "long_explanation": p,
            "topic": p,
            "new_sentence": p,
            "new_topic": p,
        });
        Ok(ProviderReply {
            text: payload.to_string(),
            meta: ProviderMeta::default(),
        })
    }
}
