//! Automatic metrics and human-judgment aggregation.
//!
//! Every function here is pure: identical inputs give identical outputs.

mod grammar;
mod judgments;
mod matrix;
mod properties;
pub mod render;
mod spans;
mod stats;

use crate::backend::EmbedError;

pub use grammar::{
    grammar_report, issues_from_response, GrammarChecker, GrammarIssue, GrammarReport, GrammarStatus,
    LanguageToolClient,
};
pub use judgments::{
    cohen_kappa, compare_summaries, judgment_aggregate, latest_judgments, phi_coefficient, Agreement,
    Criterion, CriterionAgreement, ExplanationQuality, ItemOutcome, JudgmentKey, JudgmentRecord,
    JudgmentSummary, PhiEntry, PropertyQuality, Slot, SlotComparison, Target,
};
pub use matrix::{
    confusion_matrix, f1, identification_metrics, per_class_metrics, ClassMetrics, ClassRow,
    ConfusionMatrix3, IdentificationMetrics, PerClassReport, RecallConvention,
};
pub use properties::{property_key, property_report, PropertyPair, PropertyReport};
pub use spans::{exact_word_match, span_scores, tokens, SpanScores};
pub use stats::{paired_t_test, similarity_summary, SimilarityStats, TTest};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("length mismatch: {0} gold vs {1} predicted")]
    LengthMismatch(usize, usize),
    #[error("gold span is empty")]
    EmptyGold,
    #[error("empty input")]
    Empty,
    #[error("input contains a non-finite value")]
    NonFinite,
    #[error("need at least 2 paired values, got {0}")]
    TooFew(usize),
    #[error("distribution error: {0}")]
    Distribution(String),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error("grammar service: {0}")]
    Service(String),
}
