//! Staged interpretation of one sentence or a whole corpus.
//!
//! Every stage is requested in a single structured reply; the reply is then
//! split into a [`ReasoningTrace`] with one entry per stage.

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::backend::{Backend, BackendError, GenerationParams, StructuredOutput, Task};
use crate::clock::{Clock, SystemClock};
use crate::corpus::{to_jsonl, ArgumentRecord, RecordId};
use crate::digest::{sha256_hex, sha256_parts};
use crate::prompt_kit::{Mode, PromptKit, Regime};
use crate::taxonomy::{LogicCategory, SentenceType, Verdict};

const EXCERPT_CHARS: usize = 200;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("no records to run")]
    Empty,
    #[error("every record failed; first error: {0}")]
    AllFailed(String),
    #[error("cannot build worker pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Identification,
    Extraction,
    Classification,
    PropertyPrediction,
    Explanation,
}

impl Stage {
    pub const ORDER: [Stage; 5] = [
        Stage::Identification,
        Stage::Extraction,
        Stage::Classification,
        Stage::PropertyPrediction,
        Stage::Explanation,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub stage: Stage,
    pub prompt_digest: String,
    pub raw_excerpt: String,
    pub parsed: Value,
    /// Gold annotation offered at this stage, under the with-info regime.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suggestion: Option<String>,
    pub timestamp: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReasoningTrace {
    pub stages: Vec<TraceEntry>,
}

impl ReasoningTrace {
    pub fn stage(&self, stage: Stage) -> Option<&TraceEntry> {
        self.stages.iter().find(|e| e.stage == stage)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResultStatus {
    Completed,
    /// Gated mode stopped after a non-AF verdict.
    Halted,
    /// The reply could not be parsed.
    Invalid,
    /// The provider call failed.
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpretationResult {
    pub record_id: RecordId,
    pub regime: Regime,
    pub mode: Mode,
    pub status: ResultStatus,
    pub verdict: Verdict,
    pub correlate: Option<String>,
    pub remnant: Option<String>,
    pub correlate_more_likely: Option<bool>,
    pub likelihood_rationale: Option<String>,
    pub sentence_type: SentenceType,
    pub logic_category: LogicCategory,
    pub properties: Vec<String>,
    pub short_explanation: String,
    pub long_explanation: String,
    pub trace: ReasoningTrace,
    pub validation_warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl InterpretationResult {
    fn empty(record: &ArgumentRecord, regime: Regime, mode: Mode, status: ResultStatus) -> Self {
        InterpretationResult {
            record_id: record.id.clone(),
            regime,
            mode,
            status,
            verdict: Verdict::Unknown,
            correlate: None,
            remnant: None,
            correlate_more_likely: None,
            likelihood_rationale: None,
            sentence_type: SentenceType::Undefined,
            logic_category: LogicCategory::Undefined,
            properties: Vec::new(),
            short_explanation: String::new(),
            long_explanation: String::new(),
            trace: ReasoningTrace::default(),
            validation_warnings: Vec::new(),
            error: None,
        }
    }

    /// Every text field the model produced.
    pub fn generated_text(&self) -> Vec<&str> {
        let mut out: Vec<&str> = [&self.correlate, &self.remnant, &self.likelihood_rationale]
            .into_iter()
            .flatten()
            .map(String::as_str)
            .collect();
        out.extend(self.properties.iter().map(String::as_str));
        out.push(&self.short_explanation);
        out.push(&self.long_explanation);
        out
    }
}

/// Verdict of an identification-only request.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentificationResult {
    pub record_id: RecordId,
    pub verdict: Verdict,
    pub with_examples: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunCounts {
    pub total: usize,
    pub verdicts: BTreeMap<Verdict, usize>,
    pub completed: usize,
    pub halted: usize,
    pub invalid: usize,
    pub failed: usize,
    pub warnings: usize,
}

impl RunCounts {
    pub fn tally(results: &[InterpretationResult]) -> Self {
        let mut c = RunCounts {
            total: results.len(),
            ..RunCounts::default()
        };
        for v in Verdict::ALL {
            c.verdicts.insert(v, 0);
        }
        for r in results {
            *c.verdicts.entry(r.verdict).or_default() += 1;
            match r.status {
                ResultStatus::Completed => c.completed += 1,
                ResultStatus::Halted => c.halted += 1,
                ResultStatus::Invalid => c.invalid += 1,
                ResultStatus::Failed => c.failed += 1,
            }
            c.warnings += r.validation_warnings.len();
        }
        c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub corpus_digest: String,
    pub prompt_version: String,
    pub prompt_digest: String,
    pub params: GenerationParams,
    pub regime: Regime,
    pub mode: Mode,
    pub provider: String,
    pub started: String,
    pub finished: String,
    pub counts: RunCounts,
    /// Digest of the results file written alongside the manifest.
    pub results_digest: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub manifest: RunManifest,
    pub results: Vec<InterpretationResult>,
}

/// Canonical JSON-lines rendering of a result list.
pub fn results_jsonl(results: &[InterpretationResult]) -> String {
    let mut out = String::new();
    for r in results {
        out.push_str(&serde_json::to_string(r).expect("result serializes"));
        out.push('\n');
    }
    out
}

pub fn read_results(text: &str) -> Result<Vec<InterpretationResult>, serde_json::Error> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}

/// Digest of a record set, independent of input order.
pub fn corpus_digest(records: &[ArgumentRecord]) -> String {
    let mut sorted = records.to_vec();
    sorted.sort_by(|a, b| a.id.cmp(&b.id));
    sha256_hex(to_jsonl(&sorted))
}

fn excerpt(raw: &str) -> String {
    raw.chars().take(EXCERPT_CHARS).collect()
}

pub struct Pipeline {
    pub kit: PromptKit,
    pub backend: Backend,
    pub params: GenerationParams,
    clock: Arc<dyn Clock>,
}

impl Pipeline {
    pub fn new(kit: PromptKit, backend: Backend, params: GenerationParams) -> Self {
        Pipeline {
            kit,
            backend,
            params,
            clock: Arc::new(SystemClock),
        }
    }

    pub fn with_clock(mut self, clock: Arc<dyn Clock>) -> Self {
        self.clock = clock;
        self
    }

    /// Interprets one sentence. Provider and parse failures are reported in
    /// the result, not as errors, so corpus runs can continue.
    pub fn interpret(&self, record: &ArgumentRecord, regime: Regime, mode: Mode) -> InterpretationResult {
        let mut result = InterpretationResult::empty(record, regime, mode, ResultStatus::Failed);
        let bundle = match self.kit.interpretation(record, regime, mode) {
            Ok(b) => b,
            Err(e) => {
                result.error = Some(e.to_string());
                return result;
            }
        };
        let digest = bundle.digest();
        let response = match self
            .backend
            .complete(&bundle, &self.params, Some(&record.id), Task::Interpretation)
        {
            Ok(r) => r,
            Err(e) => {
                result.error = Some(e.to_string());
                return result;
            }
        };
        let stamp = self.clock.stamp();
        let raw = excerpt(&response.raw_text);
        let entry = |stage, parsed, suggestion| TraceEntry {
            stage,
            prompt_digest: digest.clone(),
            raw_excerpt: raw.clone(),
            parsed,
            suggestion,
            timestamp: stamp.clone(),
        };
        let gold = (regime == Regime::WithExternalInfo).then_some(record);

        let Some(out) = response.parsed else {
            result.status = ResultStatus::Invalid;
            result.error = response.parse_error;
            result.trace.stages.push(entry(Stage::Identification, Value::Null, None));
            return result;
        };

        result.verdict = out.verdict;
        result
            .trace
            .stages
            .push(entry(Stage::Identification, json!({ "verdict": out.verdict }), None));
        if mode == Mode::Gated && out.verdict != Verdict::AF {
            result.status = ResultStatus::Halted;
            return result;
        }

        for stage in &Stage::ORDER[1..] {
            let (parsed, suggestion) = stage_view(*stage, &out, gold);
            result.trace.stages.push(entry(*stage, parsed, suggestion));
        }
        result.validation_warnings = out.warnings();
        result.properties = out.properties();
        result.correlate = out.correlate;
        result.remnant = out.remnant;
        result.correlate_more_likely = out.correlate_more_likely;
        result.likelihood_rationale = out.likelihood_rationale;
        result.sentence_type = out.sentence_type;
        result.logic_category = out.logic_category;
        result.short_explanation = out.short_explanation;
        result.long_explanation = out.long_explanation;
        result.status = ResultStatus::Completed;
        result
    }

    /// Binary identification request, with or without demonstrations.
    pub fn identify(&self, record: &ArgumentRecord, with_examples: bool) -> IdentificationResult {
        let mut res = IdentificationResult {
            record_id: record.id.clone(),
            verdict: Verdict::Unknown,
            with_examples,
            error: None,
        };
        let outcome = self
            .kit
            .identification(record, with_examples)
            .map_err(|e| e.to_string())
            .and_then(|b| {
                self.backend
                    .complete(&b, &self.params, Some(&record.id), Task::Identification)
                    .map_err(|e: BackendError| e.to_string())
            });
        match outcome {
            Ok(r) => match r.parsed {
                Some(p) => res.verdict = p.verdict,
                None => res.error = r.parse_error,
            },
            Err(e) => res.error = Some(e),
        }
        res
    }

    /// Interprets every record on a pool of `concurrency` workers. Output
    /// is ordered by record id regardless of completion order.
    pub fn run_corpus(
        &self,
        records: &[ArgumentRecord],
        regime: Regime,
        mode: Mode,
        concurrency: usize,
    ) -> Result<RunOutput, PipelineError> {
        if records.is_empty() {
            return Err(PipelineError::Empty);
        }
        let started = self.clock.stamp();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(concurrency.max(1))
            .build()
            .map_err(|e| PipelineError::Pool(e.to_string()))?;
        let mut results: Vec<InterpretationResult> =
            pool.install(|| records.par_iter().map(|r| self.interpret(r, regime, mode)).collect());
        results.sort_by(|a, b| a.record_id.cmp(&b.record_id));

        if results.iter().all(|r| r.status == ResultStatus::Failed) {
            let first = results[0].error.clone().unwrap_or_default();
            return Err(PipelineError::AllFailed(first));
        }

        let corpus_digest = corpus_digest(records);
        let prompt_digest = self.kit.assets.digest();
        let run_id = sha256_parts([
            corpus_digest.as_str(),
            &prompt_digest,
            &self.params.digest(),
            regime.as_str(),
            mode.as_str(),
            self.backend.provider_name(),
        ])[..16]
            .to_string();
        let manifest = RunManifest {
            run_id,
            corpus_digest,
            prompt_version: self.kit.assets.version.clone(),
            prompt_digest,
            params: self.params.clone(),
            regime,
            mode,
            provider: self.backend.provider_name().to_string(),
            started,
            finished: self.clock.stamp(),
            counts: RunCounts::tally(&results),
            results_digest: sha256_hex(results_jsonl(&results)),
        };
        Ok(RunOutput { manifest, results })
    }
}

fn stage_view(stage: Stage, out: &StructuredOutput, gold: Option<&ArgumentRecord>) -> (Value, Option<String>) {
    match stage {
        Stage::Identification => (json!({ "verdict": out.verdict }), None),
        Stage::Extraction => (
            json!({
                "correlate": out.correlate,
                "remnant": out.remnant,
                "correlate_more_likely": out.correlate_more_likely,
                "likelihood_rationale": out.likelihood_rationale,
            }),
            gold.and_then(|g| Some(format!("correlate: {}; remnant: {}", g.correlate()?, g.remnant()?))),
        ),
        Stage::Classification => (
            json!({ "sentence_type": out.sentence_type, "logic_category": out.logic_category }),
            gold.map(|g| format!("logic category: {}", g.logic.code())),
        ),
        Stage::PropertyPrediction => (
            json!({ "property1": out.property1, "property2": out.property2 }),
            gold.and_then(|g| {
                let p = g.properties();
                (!p.is_empty()).then(|| format!("properties: {}", p.join("; ")))
            }),
        ),
        Stage::Explanation => (
            json!({
                "short_explanation": out.short_explanation,
                "long_explanation": out.long_explanation,
            }),
            None,
        ),
    }
}
