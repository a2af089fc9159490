//! Corpus augmentation: new arguments generated from an analysed source
//! sentence, constraint checks, topic normalisation and diversity counts.

mod topics;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::backend::{StructuredOutput, Task};
use crate::corpus::{find_char_span, ArgumentRecord, RecordId};
use crate::pipeline::{InterpretationResult, Pipeline};
use crate::prompt_kit::PromptError;
use crate::taxonomy::{LogicCategory, SentenceType, Verdict};

pub use crate::prompt_kit::AugmentationStrategy;
pub use topics::{diversity_report, DiversityReport, TopicMap, OTHER_TOPIC};

#[derive(Debug, thiserror::Error)]
pub enum AugmentError {
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("provider: {0}")]
    Provider(String),
    #[error("unparseable reply: {0}")]
    Parse(String),
    #[error("batch of {requested} generations exceeds the quota of {quota}")]
    QuotaExceeded { requested: usize, quota: usize },
    #[error("cannot build worker pool: {0}")]
    Pool(String),
}

/// Constraint violations. They are recorded, never repaired.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConformanceFlag {
    SentenceTypeChanged,
    LogicChanged,
    /// Similar-semantic output moved to another normalised topic.
    TopicDrift,
    /// Novel output kept the normalised topic.
    TopicUnchanged,
    /// Novel output does not use "let alone".
    MissingLetAlone,
    /// A generated span is not a substring of the new sentence.
    SpanUnresolved,
}

/// A generated sentence with its self-analysis. The core fields mirror
/// [`ArgumentRecord`]; spans are kept as text and resolved to indices when
/// they occur verbatim.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentedRecord {
    pub id: RecordId,
    pub text: String,
    pub correlate: Option<String>,
    pub remnant: Option<String>,
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
    pub source_id: RecordId,
    pub strategy: AugmentationStrategy,
    pub original_topic: String,
    pub new_topic: String,
    pub normalized_original_topic: String,
    pub normalized_new_topic: String,
    pub short_explanation: String,
    pub long_explanation: String,
    pub contains_let_alone: bool,
    pub flags: Vec<ConformanceFlag>,
    /// Generated analyses are weak labels until a person reviews them.
    pub noisy: bool,
}

impl AugmentedRecord {
    /// Core fields as a corpus record, ready to merge.
    pub fn to_argument_record(&self) -> ArgumentRecord {
        ArgumentRecord {
            id: self.id.clone(),
            text: self.text.clone(),
            cor_start: self.cor_start,
            cor_end: self.cor_end,
            rem_start: self.rem_start,
            rem_end: self.rem_end,
            is_a_fortiori: self.is_a_fortiori,
            prop1: self.prop1.clone(),
            prop2: self.prop2.clone(),
            logic: self.logic,
            class: self.class,
            metaphor: self.metaphor,
            additive: self.additive,
            comment: self.comment.clone(),
            context: None,
        }
    }
}

pub fn contains_let_alone(text: &str) -> bool {
    text.split_whitespace()
        .map(|w| w.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase())
        .collect::<Vec<_>>()
        .windows(2)
        .any(|w| w[0] == "let" && w[1] == "alone")
}

/// Checks a parsed reply against the strategy constraints.
pub fn conformance(
    strategy: AugmentationStrategy,
    analysis: &InterpretationResult,
    out: &StructuredOutput,
    topics: &TopicMap,
) -> Vec<ConformanceFlag> {
    let mut flags = Vec::new();
    if out.sentence_type != analysis.sentence_type {
        flags.push(ConformanceFlag::SentenceTypeChanged);
    }
    if out.logic_category != analysis.logic_category {
        flags.push(ConformanceFlag::LogicChanged);
    }
    let same_topic = topics.normalize(out.topic.as_deref().unwrap_or(""))
        == topics.normalize(out.new_topic.as_deref().unwrap_or(""));
    let sentence = out.new_sentence.as_deref().unwrap_or("");
    match strategy {
        AugmentationStrategy::SimilarSemantic => {
            if !same_topic {
                flags.push(ConformanceFlag::TopicDrift);
            }
        }
        AugmentationStrategy::Novel => {
            if same_topic {
                flags.push(ConformanceFlag::TopicUnchanged);
            }
            if !contains_let_alone(sentence) {
                flags.push(ConformanceFlag::MissingLetAlone);
            }
        }
    }
    let resolved = |span: &Option<String>| span.as_deref().and_then(|s| find_char_span(sentence, s)).is_some();
    if !resolved(&out.correlate) || !resolved(&out.remnant) {
        flags.push(ConformanceFlag::SpanUnresolved);
    }
    flags
}

/// Builds the augmented record from a parsed reply.
pub fn build_record(
    source: &ArgumentRecord,
    analysis: &InterpretationResult,
    strategy: AugmentationStrategy,
    out: StructuredOutput,
    topics: &TopicMap,
) -> AugmentedRecord {
    let flags = conformance(strategy, analysis, &out, topics);
    let text = out.new_sentence.clone().unwrap_or_default();
    let cor = out.correlate.as_deref().and_then(|s| find_char_span(&text, s));
    let rem = out.remnant.as_deref().and_then(|s| find_char_span(&text, s));
    let original_topic = out.topic.clone().unwrap_or_default();
    let new_topic = out.new_topic.clone().unwrap_or_default();
    AugmentedRecord {
        id: RecordId(format!("{}-{}", source.id, strategy.as_str())),
        contains_let_alone: contains_let_alone(&text),
        text,
        correlate: out.correlate,
        remnant: out.remnant,
        cor_start: cor.map(|c| c.0),
        cor_end: cor.map(|c| c.1),
        rem_start: rem.map(|r| r.0),
        rem_end: rem.map(|r| r.1),
        is_a_fortiori: out.verdict != Verdict::NAF,
        prop1: out.property1,
        prop2: out.property2,
        logic: out.logic_category,
        class: out.sentence_type,
        metaphor: false,
        additive: false,
        comment: None,
        source_id: source.id.clone(),
        strategy,
        normalized_original_topic: topics.normalize(&original_topic),
        normalized_new_topic: topics.normalize(&new_topic),
        original_topic,
        new_topic,
        short_explanation: out.short_explanation,
        long_explanation: out.long_explanation,
        flags,
        noisy: true,
    }
}

/// One augmentation request for one analysed record.
pub fn augment_sentence(
    pipeline: &Pipeline,
    topics: &TopicMap,
    record: &ArgumentRecord,
    analysis: &InterpretationResult,
    strategy: AugmentationStrategy,
) -> Result<AugmentedRecord, AugmentError> {
    let bundle = pipeline.kit.augmentation(record, analysis, strategy)?;
    let response = pipeline
        .backend
        .complete(&bundle, &pipeline.params, Some(&record.id), Task::Augmentation)
        .map_err(|e| AugmentError::Provider(e.to_string()))?;
    let out = response
        .parsed
        .ok_or_else(|| AugmentError::Parse(response.parse_error.unwrap_or_default()))?;
    Ok(build_record(record, analysis, strategy, out, topics))
}

/// Generation budget checked before anything is sent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerationQuota {
    pub max_generations: usize,
    /// Price per 1,000 estimated tokens, prompt and completion alike.
    pub cost_per_1k_tokens: f64,
    /// Assumed completion length per request, in estimated tokens.
    pub completion_tokens: usize,
}

impl Default for GenerationQuota {
    fn default() -> Self {
        GenerationQuota {
            max_generations: 2000,
            cost_per_1k_tokens: 0.003,
            completion_tokens: 600,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchPlan {
    pub requests: usize,
    pub estimated_tokens: usize,
    pub estimated_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentFailure {
    pub source_id: RecordId,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentRun {
    pub plan: BatchPlan,
    pub records: Vec<AugmentedRecord>,
    pub failures: Vec<AugmentFailure>,
}

/// Estimates the batch cost and refuses batches above the quota.
pub fn plan_batch(
    pipeline: &Pipeline,
    items: &[(ArgumentRecord, InterpretationResult)],
    strategy: AugmentationStrategy,
    quota: &GenerationQuota,
) -> Result<BatchPlan, AugmentError> {
    if items.len() > quota.max_generations {
        return Err(AugmentError::QuotaExceeded {
            requested: items.len(),
            quota: quota.max_generations,
        });
    }
    let mut tokens = 0;
    for (record, analysis) in items {
        let b = pipeline.kit.augmentation(record, analysis, strategy)?;
        tokens += b.token_estimate + b.input_estimate + quota.completion_tokens;
    }
    Ok(BatchPlan {
        requests: items.len(),
        estimated_tokens: tokens,
        estimated_cost: tokens as f64 / 1000.0 * quota.cost_per_1k_tokens,
    })
}

/// Augments every item under the quota. Output order follows source id.
pub fn augment_corpus(
    pipeline: &Pipeline,
    topics: &TopicMap,
    items: &[(ArgumentRecord, InterpretationResult)],
    strategy: AugmentationStrategy,
    quota: &GenerationQuota,
    concurrency: usize,
) -> Result<AugmentRun, AugmentError> {
    let plan = plan_batch(pipeline, items, strategy, quota)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(concurrency.max(1))
        .build()
        .map_err(|e| AugmentError::Pool(e.to_string()))?;
    let mut outcomes: Vec<(RecordId, Result<AugmentedRecord, String>)> = pool.install(|| {
        items
            .par_iter()
            .map(|(r, a)| {
                let res = augment_sentence(pipeline, topics, r, a, strategy).map_err(|e| e.to_string());
                (r.id.clone(), res)
            })
            .collect()
    });
    outcomes.sort_by(|a, b| a.0.cmp(&b.0));
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for (id, res) in outcomes {
        match res {
            Ok(r) => records.push(r),
            Err(error) => failures.push(AugmentFailure { source_id: id, error }),
        }
    }
    Ok(AugmentRun {
        plan,
        records,
        failures,
    })
}

/// Canonical JSON-lines rendering of augmented records.
pub fn augmented_jsonl(records: &[AugmentedRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn let_alone_detection() {
        assert!(contains_let_alone("He can't walk, let alone run."));
        assert!(contains_let_alone("Let Alone the rest"));
        assert!(!contains_let_alone("much less result in an agreement"));
        assert!(!contains_let_alone("leave it alone"));
    }

    #[test]
    fn strategy_parsing() {
        assert_eq!("novel".parse::<AugmentationStrategy>().unwrap(), AugmentationStrategy::Novel);
        assert_eq!(
            "similar-semantic".parse::<AugmentationStrategy>().unwrap(),
            AugmentationStrategy::SimilarSemantic
        );
        assert!(matches!(
            "reversed-logic".parse::<AugmentationStrategy>(),
            Err(PromptError::UnsupportedStrategy(_))
        ));
    }
}
