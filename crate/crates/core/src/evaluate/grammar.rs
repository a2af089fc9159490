use std::collections::BTreeMap;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::EvalError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrammarIssue {
    pub rule_id: String,
    /// Rule category, e.g. `TYPOS` or `GRAMMAR`.
    pub category: String,
    pub message: String,
}

pub trait GrammarChecker: Send + Sync {
    fn check(&self, text: &str) -> Result<Vec<GrammarIssue>, EvalError>;
}

/// Client for a LanguageTool-compatible `/v2/check` endpoint.
#[derive(Debug, Clone)]
pub struct LanguageToolClient {
    base_url: String,
    language: String,
    agent: ureq::Agent,
}

impl LanguageToolClient {
    pub fn new(base_url: impl Into<String>, language: impl Into<String>, timeout: Duration) -> Self {
        LanguageToolClient {
            base_url: base_url.into(),
            language: language.into(),
            agent: ureq::Agent::config_builder()
                .timeout_global(Some(timeout))
                .build()
                .into(),
        }
    }
}

/// Issue list from a LanguageTool response body.
pub fn issues_from_response(body: &Value) -> Vec<GrammarIssue> {
    body["matches"]
        .as_array()
        .map(|ms| {
            ms.iter()
                .map(|m| GrammarIssue {
                    rule_id: m["rule"]["id"].as_str().unwrap_or_default().to_string(),
                    category: m["rule"]["category"]["id"].as_str().unwrap_or("UNKNOWN").to_string(),
                    message: m["message"].as_str().unwrap_or_default().to_string(),
                })
                .collect()
        })
        .unwrap_or_default()
}

impl GrammarChecker for LanguageToolClient {
    fn check(&self, text: &str) -> Result<Vec<GrammarIssue>, EvalError> {
        let url = format!("{}/v2/check", self.base_url.trim_end_matches('/'));
        let body: Value = self
            .agent
            .post(&url)
            .send_form([("text", text), ("language", self.language.as_str())])
            .and_then(|mut r| r.body_mut().read_json())
            .map_err(|e| EvalError::Service(e.to_string()))?;
        Ok(issues_from_response(&body))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrammarStatus {
    Checked,
    /// No checker was configured.
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrammarReport {
    pub status: GrammarStatus,
    pub texts: usize,
    pub entries_with_errors: usize,
    pub error_type_counts: BTreeMap<String, usize>,
}

/// Aggregates issue lists by rule category. Without a checker the report
/// is marked skipped.
pub fn grammar_report(texts: &[String], checker: Option<&dyn GrammarChecker>) -> Result<GrammarReport, EvalError> {
    let mut report = GrammarReport {
        status: GrammarStatus::Skipped,
        texts: texts.len(),
        entries_with_errors: 0,
        error_type_counts: BTreeMap::new(),
    };
    let Some(checker) = checker else {
        return Ok(report);
    };
    report.status = GrammarStatus::Checked;
    for text in texts {
        let issues = checker.check(text)?;
        if !issues.is_empty() {
            report.entries_with_errors += 1;
        }
        for i in issues {
            *report.error_type_counts.entry(i.category).or_default() += 1;
        }
    }
    Ok(report)
}
