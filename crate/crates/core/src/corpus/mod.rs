//! Annotated "let alone" corpus: record type, tabular parser, distribution
//! statistics and the stratified evaluation-set sampler.

mod parse;
mod sample;
mod stats;

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::taxonomy::{LogicCategory, SentenceType};

pub use parse::{
    from_jsonl, parse_dataset, to_jsonl, write_csv, CorpusError, Delimiter, ParsedCorpus,
    RejectedRow, COLUMNS,
};
pub use sample::{stratified_sample, EvaluationSet, SampleError, SamplingParams};
pub use stats::{dataset_stats, DistributionTable};

/// Opaque record identifier. Ordering is numeric when both ids are
/// unsigned integers and lexicographic otherwise, so "2" sorts before "10".
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RecordId(pub String);

impl RecordId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for RecordId {
    fn from(s: &str) -> Self {
        RecordId(s.to_string())
    }
}

impl From<String> for RecordId {
    fn from(s: String) -> Self {
        RecordId(s)
    }
}

impl From<usize> for RecordId {
    fn from(n: usize) -> Self {
        RecordId(n.to_string())
    }
}

impl fmt::Display for RecordId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Ord for RecordId {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.0.parse::<u64>(), other.0.parse::<u64>()) {
            (Ok(a), Ok(b)) => a.cmp(&b).then_with(|| self.0.cmp(&other.0)),
            (Ok(_), Err(_)) => Ordering::Less,
            (Err(_), Ok(_)) => Ordering::Greater,
            (Err(_), Err(_)) => self.0.cmp(&other.0),
        }
    }
}

impl PartialOrd for RecordId {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// One annotated sentence. Spans are half-open character ranges into `text`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArgumentRecord {
    pub id: RecordId,
    pub text: String,
    pub cor_start: Option<usize>,
    pub cor_end: Option<usize>,
    pub rem_start: Option<usize>,
    pub rem_end: Option<usize>,
    pub is_a_fortiori: bool,
    pub prop1: Option<String>,
    pub prop2: Option<String>,
    pub logic: LogicCategory,
    pub class: SentenceType,
    pub metaphor: bool,
    pub additive: bool,
    pub comment: Option<String>,
    /// Surrounding context. The corpus has no context column, so this is
    /// always empty for parsed records.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context: Option<String>,
}

/// Correlate/remnant pair read with the roles exchanged.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SwappedReading<'a> {
    pub correlate: &'a str,
    pub remnant: &'a str,
}

/// Substring of `text` by half-open character range.
pub fn char_slice(text: &str, start: usize, end: usize) -> Option<&str> {
    if start > end {
        return None;
    }
    let mut byte_start = None;
    let mut byte_end = None;
    let mut count = 0usize;
    for (i, (b, _)) in text.char_indices().enumerate() {
        if i == start {
            byte_start = Some(b);
        }
        if i == end {
            byte_end = Some(b);
        }
        count = i + 1;
    }
    if start == count {
        byte_start = Some(text.len());
    }
    if end == count {
        byte_end = Some(text.len());
    }
    Some(&text[byte_start?..byte_end?])
}

/// Character index of the first exact occurrence of `needle` in `haystack`,
/// as a half-open character range.
pub fn find_char_span(haystack: &str, needle: &str) -> Option<(usize, usize)> {
    if needle.is_empty() {
        return None;
    }
    let byte = haystack.find(needle)?;
    let start = haystack[..byte].chars().count();
    Some((start, start + needle.chars().count()))
}

impl ArgumentRecord {
    /// Minimal record with undefined labels and no annotations.
    pub fn new(id: impl Into<RecordId>, text: impl Into<String>) -> Self {
        ArgumentRecord {
            id: id.into(),
            text: text.into(),
            cor_start: None,
            cor_end: None,
            rem_start: None,
            rem_end: None,
            is_a_fortiori: true,
            prop1: None,
            prop2: None,
            logic: LogicCategory::Undefined,
            class: SentenceType::Undefined,
            metaphor: false,
            additive: false,
            comment: None,
            context: None,
        }
    }

    pub fn correlate(&self) -> Option<&str> {
        char_slice(&self.text, self.cor_start?, self.cor_end?)
    }

    pub fn remnant(&self) -> Option<&str> {
        char_slice(&self.text, self.rem_start?, self.rem_end?)
    }

    pub fn has_spans(&self) -> bool {
        self.correlate().is_some() && self.remnant().is_some()
    }

    /// Non-empty annotated properties in slot order.
    pub fn properties(&self) -> Vec<&str> {
        [self.prop1.as_deref(), self.prop2.as_deref()]
            .into_iter()
            .flatten()
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .collect()
    }

    /// For NAF rows that still carry spans, the reading with correlate and
    /// remnant exchanged. The stored indices are never modified.
    pub fn swapped_reading(&self) -> Option<SwappedReading<'_>> {
        if self.is_a_fortiori {
            return None;
        }
        Some(SwappedReading {
            correlate: self.remnant()?,
            remnant: self.correlate()?,
        })
    }

    /// Every gold annotation string carried by this record.
    pub fn gold_strings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if let Some(c) = self.correlate() {
            out.push(c.to_string());
        }
        if let Some(r) = self.remnant() {
            out.push(r.to_string());
        }
        out.extend(self.properties().into_iter().map(str::to_string));
        out
    }

    pub fn with_correlate(mut self, start: usize, end: usize) -> Self {
        self.cor_start = Some(start);
        self.cor_end = Some(end);
        self
    }

    pub fn with_remnant(mut self, start: usize, end: usize) -> Self {
        self.rem_start = Some(start);
        self.rem_end = Some(end);
        self
    }

    /// Sets both spans by locating the phrases in the text.
    pub fn with_span_text(mut self, correlate: &str, remnant: &str) -> Self {
        if let Some((s, e)) = find_char_span(&self.text, correlate) {
            self = self.with_correlate(s, e);
        }
        if let Some((s, e)) = find_char_span(&self.text, remnant) {
            self = self.with_remnant(s, e);
        }
        self
    }

    pub fn with_labels(mut self, class: SentenceType, logic: LogicCategory) -> Self {
        self.class = class;
        self.logic = logic;
        self
    }

    pub fn with_properties(mut self, prop1: Option<&str>, prop2: Option<&str>) -> Self {
        self.prop1 = prop1.map(str::to_string);
        self.prop2 = prop2.map(str::to_string);
        self
    }

    pub fn not_a_fortiori(mut self) -> Self {
        self.is_a_fortiori = false;
        self
    }
}
