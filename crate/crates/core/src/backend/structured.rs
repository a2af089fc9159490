use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::taxonomy::{LogicCategory, SentenceType, Verdict};

/// Phrases that mark a refusal to judge. Matched case-insensitively.
pub const DEFAULT_REFUSAL_PHRASES: &[&str] = &[
    "not possible to determine",
    "cannot determine",
    "can't determine",
    "unable to determine",
    "cannot be determined",
    "insufficient information",
];

/// Which request a reply answers; decides the mandatory fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Identification,
    Interpretation,
    Augmentation,
}

impl Task {
    pub fn as_str(self) -> &'static str {
        match self {
            Task::Identification => "identification",
            Task::Interpretation => "interpretation",
            Task::Augmentation => "augmentation",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructuredOutput {
    pub verdict: Verdict,
    pub correlate: Option<String>,
    pub remnant: Option<String>,
    pub correlate_more_likely: Option<bool>,
    pub likelihood_rationale: Option<String>,
    pub sentence_type: SentenceType,
    pub logic_category: LogicCategory,
    pub property1: Option<String>,
    pub property2: Option<String>,
    pub short_explanation: String,
    pub long_explanation: String,
    pub topic: Option<String>,
    pub new_sentence: Option<String>,
    pub new_topic: Option<String>,
}

impl StructuredOutput {
    fn refusal() -> Self {
        StructuredOutput {
            verdict: Verdict::Unknown,
            correlate: None,
            remnant: None,
            correlate_more_likely: None,
            likelihood_rationale: None,
            sentence_type: SentenceType::Undefined,
            logic_category: LogicCategory::Undefined,
            property1: None,
            property2: None,
            short_explanation: String::new(),
            long_explanation: String::new(),
            topic: None,
            new_sentence: None,
            new_topic: None,
        }
    }

    pub fn properties(&self) -> Vec<String> {
        [&self.property1, &self.property2]
            .into_iter()
            .flatten()
            .cloned()
            .collect()
    }

    /// Length constraints that the generator cannot be forced to respect.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.short_explanation.is_empty() {
            let n = count_sentences(&self.short_explanation);
            if n != 1 {
                out.push(format!("short explanation has {n} sentences, expected 1"));
            }
        }
        let n = count_sentences(&self.long_explanation);
        if n > 3 {
            out.push(format!("long explanation has {n} sentences, expected at most 3"));
        }
        if self.verdict == Verdict::AF
            && !self.short_explanation.is_empty()
            && self.property1.is_none()
            && self.property2.is_none()
        {
            out.push("no hidden property predicted".to_string());
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("no JSON object in reply")]
    NoJson,
    #[error("invalid JSON at byte {offset}: {message}")]
    Json { offset: usize, message: String },
    #[error("reply is not a JSON object")]
    NotAnObject,
    #[error("missing field {field} for {task} reply")]
    MissingField { field: &'static str, task: Task },
    #[error("field {field}: {message}")]
    BadField { field: &'static str, message: String },
}

/// Counts sentences: a sentence ends at `.`, `!` or `?` followed by
/// whitespace or end of text. Trailing text without terminal punctuation
/// counts as one more sentence.
pub fn count_sentences(text: &str) -> usize {
    let chars: Vec<char> = text.chars().collect();
    let mut count = 0;
    let mut has_content = false;
    for (i, &c) in chars.iter().enumerate() {
        if c.is_alphanumeric() {
            has_content = true;
        }
        let terminal = matches!(c, '.' | '!' | '?');
        let boundary = chars.get(i + 1).is_none_or(|n| n.is_whitespace());
        if terminal && boundary && has_content {
            count += 1;
            has_content = false;
        }
    }
    if has_content {
        count += 1;
    }
    count
}

fn strip_fences(raw: &str) -> (&str, usize) {
    let trimmed_start = raw.len() - raw.trim_start().len();
    let t = raw.trim();
    if let Some(rest) = t.strip_prefix("```") {
        let header_end = rest.find('\n').map(|i| i + 1).unwrap_or(rest.len());
        let body = &rest[header_end..];
        let body = body.strip_suffix("```").unwrap_or(body);
        return (body, trimmed_start + 3 + header_end);
    }
    (t, trimmed_start)
}

fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let mut offset = 0;
    for (i, l) in text.split_inclusive('\n').enumerate() {
        if i + 1 == line {
            return offset + column.min(l.len());
        }
        offset += l.len();
    }
    text.len()
}

fn contains_refusal(text: &str, phrases: &[String]) -> bool {
    let lower = text.to_lowercase();
    phrases.iter().any(|p| lower.contains(&p.to_lowercase()))
}

/// Parses a model reply into a [`StructuredOutput`].
///
/// Markdown code fences are removed. A reply without a JSON object that
/// contains a refusal phrase maps to verdict `Unknown`. Unknown keys are
/// ignored; string values are copied without modification.
pub fn parse_structured_output(
    raw: &str,
    task: Task,
    refusal_phrases: &[String],
) -> Result<StructuredOutput, ParseError> {
    let (body, base) = strip_fences(raw);
    let Some(start) = body.find('{') else {
        if contains_refusal(raw, refusal_phrases) {
            return Ok(StructuredOutput::refusal());
        }
        return Err(ParseError::NoJson);
    };
    let candidate = &body[start..];
    let mut stream = serde_json::Deserializer::from_str(candidate).into_iter::<Value>();
    let value = match stream.next() {
        Some(Ok(v)) => v,
        Some(Err(e)) => {
            if contains_refusal(&body[..start], refusal_phrases) {
                return Ok(StructuredOutput::refusal());
            }
            return Err(ParseError::Json {
                offset: base + start + byte_offset(candidate, e.line(), e.column()),
                message: e.to_string(),
            });
        }
        None => return Err(ParseError::NoJson),
    };
    let Value::Object(map) = value else {
        return Err(ParseError::NotAnObject);
    };
    from_map(&map, task, refusal_phrases)
}

fn text_field(map: &Map<String, Value>, field: &'static str) -> Result<Option<String>, ParseError> {
    match map.get(field) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) if s.trim().is_empty() => Ok(None),
        Some(Value::String(s)) => Ok(Some(s.clone())),
        Some(other) => Err(ParseError::BadField {
            field,
            message: format!("expected a string, got {other}"),
        }),
    }
}

fn from_map(
    map: &Map<String, Value>,
    task: Task,
    refusals: &[String],
) -> Result<StructuredOutput, ParseError> {
    let require = |field: &'static str| -> Result<String, ParseError> {
        text_field(map, field)?.ok_or(ParseError::MissingField { field, task })
    };

    let verdict_text = require("verdict")?;
    let verdict = match verdict_text.parse::<Verdict>() {
        Ok(v) => v,
        Err(_) if contains_refusal(&verdict_text, refusals) => Verdict::Unknown,
        Err(e) => {
            return Err(ParseError::BadField {
                field: "verdict",
                message: e.to_string(),
            })
        }
    };

    let label = |field: &'static str| -> Result<Option<String>, ParseError> { text_field(map, field) };
    let sentence_type = match label("sentence_type")? {
        Some(s) => s.parse::<SentenceType>().map_err(|e| ParseError::BadField {
            field: "sentence_type",
            message: e.to_string(),
        })?,
        None => SentenceType::Undefined,
    };
    let logic_category = match label("logic_category")? {
        Some(s) => s.parse::<LogicCategory>().map_err(|e| ParseError::BadField {
            field: "logic_category",
            message: e.to_string(),
        })?,
        None => LogicCategory::Undefined,
    };
    let correlate_more_likely = match map.get("correlate_more_likely") {
        None | Some(Value::Null) => None,
        Some(Value::Bool(b)) => Some(*b),
        Some(Value::String(s)) => match s.trim().to_ascii_lowercase().as_str() {
            "yes" | "true" => Some(true),
            "no" | "false" => Some(false),
            "" => None,
            _ => {
                return Err(ParseError::BadField {
                    field: "correlate_more_likely",
                    message: format!("expected a boolean, got {s:?}"),
                })
            }
        },
        Some(other) => {
            return Err(ParseError::BadField {
                field: "correlate_more_likely",
                message: format!("expected a boolean, got {other}"),
            })
        }
    };

    let out = StructuredOutput {
        verdict,
        correlate: text_field(map, "correlate")?,
        remnant: text_field(map, "remnant")?,
        correlate_more_likely,
        likelihood_rationale: text_field(map, "likelihood_rationale")?,
        sentence_type,
        logic_category,
        property1: text_field(map, "property1")?,
        property2: text_field(map, "property2")?,
        short_explanation: text_field(map, "short_explanation")?.unwrap_or_default(),
        long_explanation: text_field(map, "long_explanation")?.unwrap_or_default(),
        topic: text_field(map, "topic")?,
        new_sentence: text_field(map, "new_sentence")?,
        new_topic: text_field(map, "new_topic")?,
    };

    let missing = |field: &'static str| ParseError::MissingField { field, task };
    match task {
        Task::Identification => {}
        Task::Interpretation => {
            if out.verdict == Verdict::AF {
                out.correlate.as_ref().ok_or(missing("correlate"))?;
                out.remnant.as_ref().ok_or(missing("remnant"))?;
            }
        }
        Task::Augmentation => {
            out.new_sentence.as_ref().ok_or(missing("new_sentence"))?;
            out.correlate.as_ref().ok_or(missing("correlate"))?;
            out.remnant.as_ref().ok_or(missing("remnant"))?;
            out.topic.as_ref().ok_or(missing("topic"))?;
            out.new_topic.as_ref().ok_or(missing("new_topic"))?;
            if out.short_explanation.is_empty() {
                return Err(missing("short_explanation"));
            }
        }
    }
    Ok(out)
}
